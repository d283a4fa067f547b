"""Hopf-linked optical vortices: LG mode algebra, vortex tracing, holograms
and two-photon coincidence / CHSH predictions."""

from hopflink.modes import (
    BeamGeometry,
    LGIndex,
    ModeSuperposition,
    apply_displacement,
    gouy_phase,
    hopf_link_superposition,
    lg_amplitude,
    modal_inner_product,
    p_hopf_state,
)

__version__ = "0.1.0"

__all__ = [
    "BeamGeometry",
    "LGIndex",
    "ModeSuperposition",
    "apply_displacement",
    "gouy_phase",
    "hopf_link_superposition",
    "lg_amplitude",
    "modal_inner_product",
    "p_hopf_state",
]
