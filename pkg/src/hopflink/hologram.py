"""
Off-axis phase-only holograms for measuring a mode superposition.

Two encodings are available. ``as_printed`` multiplies the wrapped
link-plus-grating phase by sinc^2(1 - pi I) with sinc(x) = sin(x)/x.
``normalized_blaze`` scales the blaze depth by M(I) = 1 + arcsinc(sqrt(I))/pi
so the first diffraction order carries an amplitude proportional to
sqrt(I); the wrapped ramp is centred on pi so that depth changes do not
leak into the diffracted phase.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from hopflink.fieldgrid import (GridSpec, SampledField, phase_to_uint16, sample_plane,
                                write_pgm16)
from hopflink.modes import ModeSuperposition

MIN_CYCLES = 8
TWO_PI = 2 * np.pi


class Encoding(str, enum.Enum):
    AS_PRINTED = "as_printed"
    NORMALIZED_BLAZE = "normalized_blaze"


@dataclass(frozen=True)
class HologramSpec:
    """Carrier along +x with ``grating_cycles`` fringes across the aperture."""

    grating_cycles: float = 32.0
    grid: GridSpec = GridSpec()
    encoding: Encoding = Encoding.NORMALIZED_BLAZE

    def __post_init__(self):
        # zero-cycle specs are allowed here so reconstruction can reject them
        if self.grating_cycles < 0:
            raise ValueError("grating_cycles must be non-negative")
        object.__setattr__(self, "encoding", Encoding(self.encoding))

    @property
    def carrier_frequency(self) -> float:
        """Spatial carrier frequency in cycles per metre."""
        return self.grating_cycles / (2 * self.grid.half_extent)

    def grating_phase(self) -> np.ndarray:
        X, _ = self.grid.mesh()
        return TWO_PI * self.carrier_frequency * X


@dataclass(frozen=True)
class PhaseMap:
    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.nx, self.grid.ny):
            raise ValueError("phase map shape does not match grid")
        if v.size and (v.min() < 0 or v.max() >= TWO_PI):
            raise ValueError("phase values must lie in [0, 2 pi)")
        object.__setattr__(self, "values", v)

    def to_pgm(self, path):
        write_pgm16(path, phase_to_uint16(self.values))

    def to_csv(self, path):
        X, Y = self.grid.mesh()
        table = np.column_stack([X.ravel(), Y.ravel(), self.values.ravel()])
        np.savetxt(path, table, delimiter=",", header="x_m,y_m,phase_rad", comments="",
                   fmt="%.9g")


def sinc(x):
    """Unnormalised sinc, sin(x)/x."""
    return np.sinc(np.asarray(x) / np.pi)


_ARC_X = np.linspace(0.0, np.pi, 20001)
_ARC_S = sinc(_ARC_X)


def arcsinc(s):
    """Inverse of sin(x)/x on [-pi, 0] for ``s`` in [0, 1]."""
    s = np.clip(np.asarray(s, float), 0.0, 1.0)
    # table interpolation, then two Newton steps on sin(y) - s y = 0
    y = np.interp(s, _ARC_S[::-1], _ARC_X[::-1])
    for _ in range(2):
        f = np.sin(y) - s * y
        df = np.cos(y) - s
        step = np.where(np.abs(df) > 1e-12, f / np.where(df == 0, 1, df), 0.0)
        y = np.clip(y - step, 0.0, np.pi)
    return -y


def blaze_depth(intensity):
    """Depth factor M(I) in [0, 1]; first-order amplitude sinc(pi (M - 1)) = sqrt(I)."""
    return 1.0 + arcsinc(np.sqrt(intensity)) / np.pi


def encode_phase(phase, intensity, grating_phase, encoding=Encoding.NORMALIZED_BLAZE):
    """Hologram phase from link phase, normalised intensity and grating phase arrays."""
    wrapped = np.mod(np.asarray(phase) + grating_phase, TWO_PI)
    encoding = Encoding(encoding)
    if encoding is Encoding.AS_PRINTED:
        out = wrapped * sinc(1.0 - np.pi * np.asarray(intensity)) ** 2
    else:
        m = blaze_depth(intensity)
        out = m * wrapped + np.pi * (1.0 - m)
    # guard against round-off touching 2 pi
    return np.where(out >= TWO_PI, np.nextafter(TWO_PI, 0), np.maximum(out, 0.0))


def synthesize_hologram(sup: ModeSuperposition, spec: HologramSpec) -> PhaseMap:
    """Measurement hologram for ``sup``, built from its z = 0 cross-section."""
    field = sample_plane(sup, 0.0, spec.grid).values
    inten = np.abs(field) ** 2
    peak = inten.max()
    inten = inten / peak if peak > 0 else inten
    values = encode_phase(np.angle(field), inten, spec.grating_phase(), spec.encoding)
    return PhaseMap(spec.grid, values)


def first_order_field(phase_map: PhaseMap, spec: HologramSpec, probe_waist: float
                      ) -> SampledField:
    """Simulate the demodulated +1 order of a Gaussian probe diffracted by the hologram.

    The spectrum of probe * exp(i phase) * exp(-i grating) is cut by a square
    window of full width carrier/2 around zero frequency and transformed back.
    """
    if spec.grating_cycles < MIN_CYCLES:
        raise ValueError(f"grating_cycles={spec.grating_cycles} cannot separate the first "
                         f"order from the zeroth (need >= {MIN_CYCLES})")
    g = phase_map.grid
    X, Y = g.mesh()
    probe = np.exp(-(X**2 + Y**2) / probe_waist**2)
    u = probe * np.exp(1j * (phase_map.values - spec.grating_phase()))
    spectrum = np.fft.fft2(u)
    fx = np.fft.fftfreq(g.nx, g.dx)
    fy = np.fft.fftfreq(g.ny, g.dy)
    half = spec.carrier_frequency / 4
    window = (np.abs(fx)[:, None] <= half) & (np.abs(fy)[None, :] <= half)
    return SampledField(g, 0.0, np.fft.ifft2(spectrum * window))


def normalized_overlap(a: SampledField, b: SampledField) -> float:
    """|<a|b>| / (|a| |b|)."""
    num = abs(np.vdot(a.values, b.values))
    den = np.linalg.norm(a.values) * np.linalg.norm(b.values)
    return float(num / den) if den > 0 else 0.0


def reconstruction_fidelity(sup: ModeSuperposition, spec: HologramSpec,
                            probe_waist: float | None = None) -> float:
    """Normalised overlap between the reconstructed first order and ``sup`` at z = 0."""
    probe_waist = probe_waist or 4 * sup.beam.waist_w0
    recon = first_order_field(synthesize_hologram(sup, spec), spec, probe_waist)
    return normalized_overlap(sample_plane(sup, 0.0, spec.grid), recon)


def vortex_survival(target: SampledField, recon: SampledField, radius: float,
                    tol_cells: float = 2.0) -> dict:
    """Compare z = 0 vortex points of a reconstruction with those of the target.

    Only points within ``radius`` of the axis are compared; outside the beam
    the reconstructed field is numerically dark and full of spurious windings.
    Every target vortex needs a same-charge reconstructed vortex within
    ``tol_cells`` cells and vice versa.
    """
    from hopflink.topology import plane_vortex_points

    def inside(points):
        return [p for p in points if math.hypot(p.position[0], p.position[1]) <= radius]

    pt, pr = inside(plane_vortex_points(target)), inside(plane_vortex_points(recon))
    cell = max(target.grid.dx, target.grid.dy)

    def offsets(src, dst):
        out = []
        for p in src:
            d = [math.hypot(p.position[0] - q.position[0], p.position[1] - q.position[1])
                 for q in dst if q.charge == p.charge]
            out.append(min(d) / cell if d else math.inf)
        return out

    off = offsets(pt, pr) + offsets(pr, pt)
    worst = max(off) if off else 0.0
    return {"matched": bool(worst <= tol_cells), "max_offset_cells": worst,
            "n_target": len(pt), "n_reconstructed": len(pr)}
