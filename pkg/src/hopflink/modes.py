"""
Laguerre-Gaussian modes and their superpositions.

Fields use the paraxial LG family normalised to unit power in every plane,
with the common carrier factor exp(ikz) dropped. The Gouy phase enters as
exp(+i(|l|+2p+1) arctan(z/zR)) and the wavefront curvature as
exp(-ik r^2 z / (2 (z^2 + zR^2))), which stays finite at the waist.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np
from scipy.special import eval_genlaguerre

NORM_TOL = 1e-3

# Hopf-link superposition: l = 0 radial terms and the l = 2 weight, three decimals.
HOPF_LINK_COEFFS = {(0, 0): 0.264, (0, 1): -0.628, (0, 2): 0.426}
HOPF_LINK_L2 = -0.596
P_HOPF_COEFFS = {(0, 0): 0.329, (0, 1): -0.782, (0, 2): 0.530}

DEFAULT_WAVELENGTH = 710e-9
DEFAULT_WAIST = 1e-3


@dataclass(frozen=True, order=True)
class LGIndex:
    """Azimuthal index ``ell`` and radial index ``p`` of an LG mode."""

    ell: int
    p: int

    def __post_init__(self):
        if int(self.p) != self.p or self.p < 0:
            raise ValueError(f"radial index must be a non-negative integer, got {self.p}")
        if int(self.ell) != self.ell:
            raise ValueError(f"azimuthal index must be an integer, got {self.ell}")
        object.__setattr__(self, "ell", int(self.ell))
        object.__setattr__(self, "p", int(self.p))

    @property
    def order(self) -> int:
        """Mode order |l| + 2p."""
        return abs(self.ell) + 2 * self.p

    def conjugate(self) -> "LGIndex":
        return LGIndex(-self.ell, self.p)

    def __str__(self):
        return f"|{self.ell},{self.p}>"


@dataclass(frozen=True)
class BeamGeometry:
    wavelength: float = DEFAULT_WAVELENGTH
    waist_w0: float = DEFAULT_WAIST

    def __post_init__(self):
        if not (self.wavelength > 0 and self.waist_w0 > 0):
            raise ValueError("wavelength and waist must be positive")

    @property
    def rayleigh_zR(self) -> float:
        return math.pi * self.waist_w0**2 / self.wavelength

    @property
    def k(self) -> float:
        return 2 * math.pi / self.wavelength

    def width(self, z):
        """Beam radius w(z)."""
        return self.waist_w0 * np.sqrt(1.0 + (np.asarray(z) / self.rayleigh_zR) ** 2)

    def to_dict(self) -> dict:
        return {"wavelength_m": self.wavelength, "waist_m": self.waist_w0}

    @classmethod
    def from_dict(cls, d: Mapping) -> "BeamGeometry":
        return cls(wavelength=float(d["wavelength_m"]), waist_w0=float(d["waist_m"]))


def _as_index(key) -> LGIndex:
    if isinstance(key, LGIndex):
        return key
    ell, p = key
    return LGIndex(ell, p)


@dataclass(frozen=True)
class ModeSuperposition:
    """A finite LG superposition sum_k c_k |l_k, p_k> on a fixed beam geometry.

    ``terms`` is a tuple of ``(LGIndex, complex)`` pairs. The squared norm must
    lie within ``NORM_TOL`` of one; the three-decimal coefficients of
    the link state only reach 1.0008.
    """

    terms: tuple
    beam: BeamGeometry = field(default_factory=BeamGeometry)

    def __post_init__(self):
        terms = tuple((_as_index(k), complex(c)) for k, c in self.terms)
        seen = [k for k, _ in terms]
        if len(set(seen)) != len(seen):
            raise ValueError("duplicate LG index in superposition")
        object.__setattr__(self, "terms", terms)
        n2 = self.norm_squared
        if abs(n2 - 1.0) > NORM_TOL:
            raise ValueError(f"superposition norm^2 = {n2:.6f} is not 1 within {NORM_TOL}")

    @classmethod
    def from_mapping(cls, coeffs: Mapping, beam: BeamGeometry | None = None,
                     normalize: bool = False) -> "ModeSuperposition":
        items = [(_as_index(k), complex(c)) for k, c in coeffs.items()]
        if normalize:
            n = math.sqrt(sum(abs(c) ** 2 for _, c in items))
            items = [(k, c / n) for k, c in items]
        return cls(tuple(items), beam or BeamGeometry())

    @classmethod
    def single(cls, ell: int, p: int, beam: BeamGeometry | None = None) -> "ModeSuperposition":
        return cls(((LGIndex(ell, p), 1.0),), beam or BeamGeometry())

    @property
    def coefficients(self) -> dict:
        return dict(self.terms)

    @property
    def norm_squared(self) -> float:
        return float(sum(abs(c) ** 2 for _, c in self.terms))

    def coefficient(self, ell: int, p: int) -> complex:
        return self.coefficients.get(LGIndex(ell, p), 0j)

    def conjugate(self) -> "ModeSuperposition":
        """The phase-conjugate superposition: l -> -l and c -> conj(c)."""
        return ModeSuperposition(
            tuple((k.conjugate(), c.conjugate()) for k, c in self.terms), self.beam)

    def normalized(self) -> "ModeSuperposition":
        n = math.sqrt(self.norm_squared)
        return ModeSuperposition(tuple((k, c / n) for k, c in self.terms), self.beam)

    def with_coefficients(self, coeffs: Iterable[complex], normalize: bool = False
                          ) -> "ModeSuperposition":
        coeffs = [complex(c) for c in coeffs]
        if normalize:
            n = math.sqrt(sum(abs(c) ** 2 for c in coeffs))
            coeffs = [c / n for c in coeffs]
        return ModeSuperposition(
            tuple((k, c) for (k, _), c in zip(self.terms, coeffs)), self.beam)

    def field(self, x, y, z):
        """Superposition amplitude at the (broadcast) points ``x, y, z``."""
        out = 0j
        for index, c in self.terms:
            if c != 0:
                out = out + c * lg_amplitude(index, self.beam, x, y, z)
        return out

    def to_dict(self) -> dict:
        return {
            "beam": self.beam.to_dict(),
            "terms": [{"ell": k.ell, "p": k.p, "re": c.real, "im": c.imag}
                      for k, c in self.terms],
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "ModeSuperposition":
        beam = BeamGeometry.from_dict(d["beam"])
        terms = tuple((LGIndex(int(t["ell"]), int(t["p"])),
                       complex(float(t["re"]), float(t.get("im", 0.0))))
                      for t in d["terms"])
        return cls(terms, beam)

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_json(cls, text: str) -> "ModeSuperposition":
        return cls.from_dict(json.loads(text))


def lg_amplitude(index: LGIndex, beam: BeamGeometry, x, y, z):
    """Normalised LG amplitude at ``(x, y, z)``; arrays broadcast."""
    index = _as_index(index)
    ell, p = index.ell, index.p
    al = abs(ell)
    x, y, z = np.asarray(x, float), np.asarray(y, float), np.asarray(z, float)
    zr = beam.rayleigh_zR
    w = beam.waist_w0 * np.sqrt(1.0 + (z / zr) ** 2)
    r2 = x * x + y * y
    u = 2.0 * r2 / (w * w)
    norm = math.sqrt(2.0 * math.factorial(p) / (math.pi * math.factorial(p + al)))
    radial = (norm / w) * u ** (al / 2.0) * eval_genlaguerre(p, al, u) * np.exp(-r2 / (w * w))
    phase = ((index.order + 1) * np.arctan2(z, zr)
             - beam.k * r2 * z / (2.0 * (z * z + zr * zr)))
    out = radial * np.exp(1j * phase)
    if ell != 0:
        # exp(i l phi) written as ((x + i y)/r)^l keeps the axis finite
        rho = np.sqrt(r2)
        with np.errstate(invalid="ignore", divide="ignore"):
            unit = np.where(rho > 0, (x + 1j * np.sign(ell) * y) / rho, 1.0)
        out = out * unit ** al
    return out


def gouy_phase(index: LGIndex, beam: BeamGeometry, z) -> float:
    index = _as_index(index)
    return (index.order + 1) * np.arctan2(z, beam.rayleigh_zR)


def hopf_link_superposition(theta: float = 0.0, beam: BeamGeometry | None = None
                            ) -> ModeSuperposition:
    """Four-mode superposition whose vortex lines form a Hopf link.

    ``theta`` rotates the link: the |2,0> coefficient carries exp(2i theta).
    """
    coeffs = {k: complex(v) for k, v in HOPF_LINK_COEFFS.items()}
    coeffs[(2, 0)] = HOPF_LINK_L2 * np.exp(2j * theta)
    return ModeSuperposition.from_mapping(coeffs, beam)


def link_weights() -> tuple[float, float]:
    """(alpha, beta): weights of the l=0 block and of |2,0> in the link state."""
    alpha = math.sqrt(sum(c * c for c in HOPF_LINK_COEFFS.values()))
    return alpha, abs(HOPF_LINK_L2)


def p_hopf_state(beam: BeamGeometry | None = None, exact: bool = False) -> ModeSuperposition:
    """The l = 0 part of the link state, normalised.

    By default the three-decimal rounded coefficients are used. ``exact=True``
    divides the link coefficients by alpha instead, so that overlaps with the
    link state are exactly alpha.
    """
    if exact:
        alpha, _ = link_weights()
        coeffs = {k: v / alpha for k, v in HOPF_LINK_COEFFS.items()}
    else:
        coeffs = dict(P_HOPF_COEFFS)
    return ModeSuperposition.from_mapping(coeffs, beam)


def apply_displacement(sup: ModeSuperposition, dz: float, dtheta: float) -> ModeSuperposition:
    """Shift a superposition axially by ``dz`` and rotate it by ``dtheta``.

    Each coefficient picks up exp(i[(|l|+2p+1) arctan(dz/zR) + l dtheta]).
    """
    zr = sup.beam.rayleigh_zR
    shifted = tuple(
        (k, c * np.exp(1j * ((k.order + 1) * math.atan2(dz, zr) + k.ell * dtheta)))
        for k, c in sup.terms)
    return ModeSuperposition(shifted, sup.beam)


def modal_inner_product(a: ModeSuperposition, b: ModeSuperposition) -> complex:
    """<a|b> using orthonormality of the LG basis."""
    if a.beam != b.beam:
        raise ValueError("superpositions live on different beam geometries")
    bc = b.coefficients
    return complex(sum(c.conjugate() * bc[k] for k, c in a.terms if k in bc))


def parse_named_state(name: str, beam: BeamGeometry | None = None) -> ModeSuperposition:
    """Resolve ``hopf-link``, ``p-hopf`` or ``lg:<ell>,<p>`` to a superposition."""
    beam = beam or BeamGeometry()
    if name == "hopf-link":
        return hopf_link_superposition(0.0, beam)
    if name == "p-hopf":
        return p_hopf_state(beam)
    if name.startswith("lg:"):
        try:
            ell, p = (int(v) for v in name[3:].split(","))
        except ValueError:
            raise ValueError(f"malformed mode name {name!r}, expected lg:<ell>,<p>") from None
        return ModeSuperposition.single(ell, p, beam)
    raise ValueError(f"unknown state {name!r}")
