"""
Phase-singularity detection, 3D vortex-line tracing and linking numbers.

Charges are found on lattice plaquettes by summing the wrapped phase
differences around the four edges. In a volume every voxel face is tested;
a vortex line threads each voxel with two charged faces, and chaining those
voxel links through shared faces gives the lines.
"""
from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from hopflink.fieldgrid import GridSpec, SampledField
from hopflink.modes import ModeSuperposition

AMPLITUDE_FLOOR = 1e-9
LINK_TOL = 0.1


class RefinementError(ValueError):
    """A voxel has more than two charged faces; the lattice is too coarse."""

    def __init__(self, voxel, n_faces):
        self.voxel = tuple(int(v) for v in voxel)
        self.n_faces = int(n_faces)
        super().__init__(f"voxel {self.voxel} has {self.n_faces} charged faces; "
                         "increase the sampling resolution")


class LinkingAccuracyError(ValueError):
    pass


@dataclass(frozen=True)
class VortexPoint:
    position: tuple
    charge: int
    face: str = "xy"


@dataclass(frozen=True)
class VortexLine:
    """Ordered polyline through voxel-face centres.

    A closed line repeats its first point at the end.
    """

    points: np.ndarray
    closed: bool
    exits_volume: bool

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 3)
        object.__setattr__(self, "points", pts)
        if self.closed and self.exits_volume:
            raise ValueError("a line cannot both close and exit the volume")
        if self.closed and not np.array_equal(pts[0], pts[-1]):
            raise ValueError("closed line must end where it starts")

    def __len__(self):
        return len(self.points)

    def length(self) -> float:
        return float(np.linalg.norm(np.diff(self.points, axis=0), axis=1).sum())

    def to_csv(self, path):
        np.savetxt(path, self.points, delimiter=",", header="x_m,y_m,z_m", comments="",
                   fmt="%.9g")


@dataclass(frozen=True)
class VolumeSpec:
    grid: GridSpec
    z_min: float
    z_max: float
    nz: int

    def __post_init__(self):
        if self.nz < 16:
            raise ValueError("volume needs nz >= 16")
        if not self.z_max > self.z_min:
            raise ValueError("z_max must exceed z_min")

    @property
    def z(self) -> np.ndarray:
        return np.linspace(self.z_min, self.z_max, self.nz)

    @classmethod
    def default_for(cls, beam, n: int = 192, nz: int = 129, extent_w0: float = 3.0,
                    z_extent_zr: float = 1.0) -> "VolumeSpec":
        zr = beam.rayleigh_zR
        return cls(GridSpec(n, n, extent_w0 * beam.waist_w0),
                   -z_extent_zr * zr, z_extent_zr * zr, nz)


@dataclass(frozen=True)
class TopologyReport:
    lines: tuple
    linking_matrix: np.ndarray
    volume: VolumeSpec | None = None
    raw_linking: np.ndarray | None = field(default=None, compare=False)

    @property
    def closed_lines(self) -> list:
        return [ln for ln in self.lines if ln.closed]

    @property
    def n_closed(self) -> int:
        return sum(1 for ln in self.lines if ln.closed)

    @property
    def n_open(self) -> int:
        return len(self.lines) - self.n_closed

    def signature(self) -> tuple:
        """``(n_closed, sorted |linking| entries)`` used to compare topologies."""
        m = np.abs(np.asarray(self.linking_matrix, dtype=int))
        iu = np.triu_indices(len(m), 1)
        return self.n_closed, tuple(sorted(m[iu].tolist()))

    def to_dict(self) -> dict:
        d = {
            "n_closed": self.n_closed,
            "n_open": self.n_open,
            "lines": [{"closed": ln.closed, "exits_volume": ln.exits_volume,
                       "points": [[float(f"{c:.9g}") for c in p] for p in ln.points]}
                      for ln in self.lines],
            "linking_matrix": np.asarray(self.linking_matrix, dtype=int).tolist(),
        }
        if self.volume is not None:
            g = self.volume.grid
            d["volume"] = {"nx": g.nx, "ny": g.ny, "half_extent_m": g.half_extent,
                           "z_min_m": self.volume.z_min, "z_max_m": self.volume.z_max,
                           "nz": self.volume.nz}
        return d

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def _wrapped_diff(a, b):
    """Phase of b relative to a, in (-pi, pi]."""
    return np.angle(b * np.conj(a))


def _plaquette_charges(f00, f10, f11, f01):
    """Winding number around the loop f00 -> f10 -> f11 -> f01 -> f00."""
    total = (_wrapped_diff(f00, f10) + _wrapped_diff(f10, f11)
             + _wrapped_diff(f11, f01) + _wrapped_diff(f01, f00))
    return np.rint(total / (2 * np.pi)).astype(np.int8)


def plane_charges(values: np.ndarray) -> np.ndarray:
    """Charge of every 2x2 plaquette of a ``(nx, ny)`` field, counter-clockwise in (x, y)."""
    v = values
    return _plaquette_charges(v[:-1, :-1], v[1:, :-1], v[1:, 1:], v[:-1, 1:])


def plane_vortex_points(f: SampledField, floor: float = AMPLITUDE_FLOOR) -> list:
    """Vortex points of a transverse plane, one per charged plaquette.

    Plaquettes with any corner below ``floor * max|field|`` are skipped.
    """
    v = f.values
    q = plane_charges(v)
    a = np.abs(v)
    cut = floor * a.max()
    live = ((a[:-1, :-1] >= cut) & (a[1:, :-1] >= cut)
            & (a[1:, 1:] >= cut) & (a[:-1, 1:] >= cut))
    g = f.grid
    xc = g.x[:-1] + 0.5 * g.dx
    yc = g.y[:-1] + 0.5 * g.dy
    out = []
    for i, j in zip(*np.nonzero((q != 0) & live)):
        charge = int(q[i, j])
        if abs(charge) != 1:
            # only reachable when every edge difference is exactly pi
            continue
        out.append(VortexPoint((float(xc[i]), float(yc[j]), f.z), charge, "xy"))
    return out


def sample_volume(sup: ModeSuperposition, volume: VolumeSpec) -> np.ndarray:
    """Field on the volume lattice, shape ``(nx, ny, nz)``."""
    X, Y = volume.grid.mesh()
    out = np.empty((volume.grid.nx, volume.grid.ny, volume.nz), dtype=complex)
    for k, z in enumerate(volume.z):
        out[:, :, k] = sup.field(X, Y, z)
    return out


def _face_charges(F):
    """Charges on the three face families of the lattice.

    Returns ``(qxy, qyz, qzx)`` with shapes ``(nx-1, ny-1, nz)``,
    ``(nx, ny-1, nz-1)`` and ``(nx-1, ny, nz-1)``.
    """
    qxy = _plaquette_charges(F[:-1, :-1, :], F[1:, :-1, :], F[1:, 1:, :], F[:-1, 1:, :])
    qyz = _plaquette_charges(F[:, :-1, :-1], F[:, 1:, :-1], F[:, 1:, 1:], F[:, :-1, 1:])
    qzx = _plaquette_charges(F[:-1, :, :-1], F[:-1, :, 1:], F[1:, :, 1:], F[1:, :, :-1])
    return qxy, qyz, qzx


def trace_volume_field(F: np.ndarray, volume: VolumeSpec) -> TopologyReport:
    """Trace vortex lines through an already sampled ``(nx, ny, nz)`` field."""
    qxy, qyz, qzx = (q != 0 for q in _face_charges(F))
    # the six faces of voxel (i, j, k), as (family, di, dj, dk) offsets
    faces = (("xy", qxy, (0, 0, 0)), ("xy", qxy, (0, 0, 1)),
             ("yz", qyz, (0, 0, 0)), ("yz", qyz, (1, 0, 0)),
             ("zx", qzx, (0, 0, 0)), ("zx", qzx, (0, 1, 0)))
    nvx = (F.shape[0] - 1, F.shape[1] - 1, F.shape[2] - 1)

    def voxel_view(q, off):
        i, j, k = off
        return q[i:i + nvx[0], j:j + nvx[1], k:k + nvx[2]]

    count = sum(voxel_view(q, off).astype(np.int8) for _, q, off in faces)
    bad = np.argwhere(count > 2)
    if len(bad):
        v = bad[0]
        raise RefinementError(v, count[tuple(v)])
    odd = np.argwhere(count == 1)
    if len(odd):
        # a closed voxel surface always carries zero net charge
        raise RefinementError(odd[0], 1)

    # graph: charged faces are nodes, threaded voxels are edges
    neighbours: dict = {}
    for fam, q, off in faces:
        hit = np.argwhere(voxel_view(q, off) & (count == 2))
        for v in hit:
            face = (fam, v[0] + off[0], v[1] + off[1], v[2] + off[2])
            neighbours.setdefault(face, []).append((int(v[0]), int(v[1]), int(v[2])))
    voxel_faces: dict = {}
    for face, vox in neighbours.items():
        for v in vox:
            voxel_faces.setdefault(v, []).append(face)

    g = volume.grid
    x, y, z = g.x, g.y, volume.z

    def centre(face):
        fam, i, j, k = face
        cx = x[i] + 0.5 * g.dx if fam in ("xy", "zx") else x[i]
        cy = y[j] + 0.5 * g.dy if fam in ("xy", "yz") else y[j]
        cz = z[k] if fam == "xy" else 0.5 * (z[k] + z[k + 1])
        return (cx, cy, cz)

    def walk(start, first_voxel):
        path, face, voxel = [start], start, first_voxel
        while True:
            a, b = voxel_faces[voxel]
            face = b if a == face else a
            if face == start:
                path.append(face)
                return path, True
            path.append(face)
            nxt = [v for v in neighbours[face] if v != voxel]
            if not nxt:
                return path, False
            voxel = nxt[0]

    visited = set()
    lines = []
    # open lines first, started from their boundary faces
    for face in sorted(neighbours):
        if len(neighbours[face]) == 1 and face not in visited:
            path, closed = walk(face, neighbours[face][0])
            visited.update(path)
            lines.append(VortexLine(np.array([centre(f) for f in path]), False, True))
    for face in sorted(neighbours):
        if face in visited:
            continue
        path, closed = walk(face, neighbours[face][0])
        visited.update(path)
        lines.append(VortexLine(np.array([centre(f) for f in path]), closed, not closed))

    loops = [ln for ln in lines if ln.closed]
    n = len(loops)
    lk = np.zeros((n, n), dtype=int)
    raw = np.zeros((n, n))
    for a in range(n):
        for b in range(a + 1, n):
            raw[a, b] = raw[b, a] = gauss_linking_integral(
                *_isotropic(loops[a].points, loops[b].points))
            lk[a, b] = lk[b, a] = _round_link(raw[a, b])
    return TopologyReport(tuple(lines), lk, volume, raw)


def trace_vortex_lines(sup: ModeSuperposition, volume: VolumeSpec) -> TopologyReport:
    """Sample ``sup`` over ``volume`` and trace its vortex lines."""
    return trace_volume_field(sample_volume(sup, volume), volume)


def gauss_linking_integral(a: np.ndarray, b: np.ndarray) -> float:
    """Midpoint double sum of the Gauss linking integral for two closed polylines.

    Both inputs are ``(n, 3)`` vertex arrays whose last vertex repeats the first.
    """
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    da, db = np.diff(a, axis=0), np.diff(b, axis=0)
    ma, mb = a[:-1] + 0.5 * da, b[:-1] + 0.5 * db
    r = ma[:, None, :] - mb[None, :, :]
    dist3 = np.linalg.norm(r, axis=2) ** 3
    cross = np.cross(da[:, None, :], db[None, :, :])
    return float(np.sum(np.einsum("ijk,ijk->ij", r, cross) / dist3) / (4 * math.pi))


def _isotropic(a: np.ndarray, b: np.ndarray):
    """Rescale each axis by the joint extent of both curves.

    Linking numbers are invariant under this map, while the midpoint sum is
    badly conditioned for curves stretched by orders of magnitude along one
    axis (vortex loops span millimetres across and metres along the beam).
    """
    both = np.vstack([a, b])
    span = both.max(axis=0) - both.min(axis=0)
    span = np.where(span > 0, span, 1.0)
    lo = both.min(axis=0)
    return (a - lo) / span, (b - lo) / span


def _round_link(raw: float) -> int:
    n = int(round(raw))
    if abs(raw - n) >= LINK_TOL:
        raise LinkingAccuracyError(f"linking integral {raw:.4f} is not within "
                                   f"{LINK_TOL} of an integer; refine the sampling")
    return n


def linking_number(a: VortexLine, b: VortexLine) -> int:
    if not (a.closed and b.closed):
        raise ValueError("linking number needs two closed lines")
    return _round_link(gauss_linking_integral(*_isotropic(a.points, b.points)))


def perturb_coefficients(sup: ModeSuperposition, epsilon: float, rng: np.random.Generator
                         ) -> ModeSuperposition:
    """Multiply every coefficient by (1 + d) exp(i e), d and e uniform in [-eps, eps].

    The result is renormalised; an overall scale leaves the nodal set unchanged.
    """
    n = len(sup.terms)
    d = rng.uniform(-epsilon, epsilon, n)
    e = rng.uniform(-epsilon, epsilon, n)
    coeffs = [c * (1 + d[i]) * np.exp(1j * e[i]) for i, (_, c) in enumerate(sup.terms)]
    return sup.with_coefficients(coeffs, normalize=True)


def perturbation_robustness(sup: ModeSuperposition, epsilon: float, n_trials: int,
                            seed: int, volume: VolumeSpec | None = None,
                            return_details: bool = False):
    """Fraction of random coefficient perturbations that keep the topology.

    The per-mode volume fields are sampled once and recombined for every
    trial. Trials whose tracing fails (coarse voxels, non-integer linking)
    count as not preserving the topology.
    """
    volume = volume or VolumeSpec.default_for(sup.beam)
    basis = [sample_volume(ModeSuperposition.single(k.ell, k.p, sup.beam), volume)
             for k, _ in sup.terms]

    def combine(s):
        F = np.zeros_like(basis[0])
        for (_, c), B in zip(s.terms, basis):
            F += c * B
        return F

    reference = trace_volume_field(combine(sup), volume).signature()
    rng = np.random.default_rng(seed)
    outcomes = []
    for _ in range(n_trials):
        trial = perturb_coefficients(sup, epsilon, rng)
        try:
            sig = trace_volume_field(combine(trial), volume).signature()
        except (RefinementError, LinkingAccuracyError):
            sig = None
        outcomes.append(sig)
    kept = sum(1 for s in outcomes if s == reference)
    frac = kept / n_trials if n_trials else 1.0
    if return_details:
        return frac, reference, outcomes
    return frac


def total_charge(points) -> int:
    return sum(p.charge for p in points)


def charge_histogram(points) -> Counter:
    return Counter(p.charge for p in points)
