"""
Transverse sampling grids, quadrature overlaps and angular-spectrum propagation.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from hopflink.modes import DEFAULT_WAVELENGTH, ModeSuperposition


@dataclass(frozen=True)
class GridSpec:
    """Uniform ``nx`` x ``ny`` grid over [-half_extent, half_extent]^2.

    Sample ``i`` sits at ``-half_extent + (i + offset) * dx`` with
    ``dx = 2 * half_extent / nx``; the default half-cell offset samples cell
    centres and keeps the optical axis off the lattice.
    """

    nx: int = 256
    ny: int = 256
    half_extent: float = 4e-3
    offset: tuple = (0.5, 0.5)

    def __post_init__(self):
        if self.nx < 16 or self.ny < 16:
            raise ValueError("grid needs at least 16 samples per axis")
        if not self.half_extent > 0:
            raise ValueError("half_extent must be positive")
        if not all(0.0 <= o < 1.0 for o in self.offset):
            raise ValueError("sample offset must lie in [0, 1)")

    @classmethod
    def for_beam(cls, beam, n: int = 256, extent_w0: float = 4.0) -> "GridSpec":
        return cls(n, n, extent_w0 * beam.waist_w0)

    @property
    def dx(self) -> float:
        return 2.0 * self.half_extent / self.nx

    @property
    def dy(self) -> float:
        return 2.0 * self.half_extent / self.ny

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    @property
    def x(self) -> np.ndarray:
        return -self.half_extent + (np.arange(self.nx) + self.offset[0]) * self.dx

    @property
    def y(self) -> np.ndarray:
        return -self.half_extent + (np.arange(self.ny) + self.offset[1]) * self.dy

    def mesh(self):
        """``(X, Y)`` arrays of shape ``(nx, ny)``; axis 0 runs along x."""
        return np.meshgrid(self.x, self.y, indexing="ij")


@dataclass(frozen=True)
class SampledField:
    """Complex field on ``grid`` at axial position ``z``.

    ``wavelength`` is carried along for propagation only.
    """

    grid: GridSpec
    z: float
    values: np.ndarray
    wavelength: float = DEFAULT_WAVELENGTH

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != (self.grid.nx, self.grid.ny):
            raise ValueError(f"values shape {v.shape} does not match grid")
        if not np.all(np.isfinite(v)):
            raise ValueError("sampled field contains non-finite values")
        object.__setattr__(self, "values", v)

    def energy(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2) * self.grid.cell_area)

    def to_csv(self, path):
        X, Y = self.grid.mesh()
        v = self.values
        table = np.column_stack([X.ravel(), Y.ravel(), v.real.ravel(), v.imag.ravel()])
        np.savetxt(path, table, delimiter=",", header="x_m,y_m,re,im", comments="", fmt="%.9g")

    def amplitude_pgm(self, path):
        a = np.abs(self.values)
        peak = a.max()
        scaled = a / peak if peak > 0 else a
        write_pgm16(path, np.rint(scaled * 65535).astype(np.uint16))

    def phase_pgm(self, path):
        write_pgm16(path, phase_to_uint16(np.angle(self.values)))


def phase_to_uint16(phase) -> np.ndarray:
    """Map phase linearly from [0, 2 pi) onto 0..65535."""
    wrapped = np.mod(phase, 2 * np.pi)
    levels = np.floor(wrapped * (65536 / (2 * np.pi)))
    return np.clip(levels, 0, 65535).astype(np.uint16)


def write_pgm16(path, image: np.ndarray):
    """Binary 16-bit portable graymap; rows are written along y, columns along x."""
    img = np.asarray(image, dtype=">u2").T[::-1]  # top row = largest y
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n65535\n".encode("ascii"))
        fh.write(np.ascontiguousarray(img).tobytes())


def read_pgm16(path) -> np.ndarray:
    """Inverse of :func:`write_pgm16`, returning an ``(nx, ny)`` array."""
    with open(path, "rb") as fh:
        data = fh.read()
    tokens, pos = [], 0
    while len(tokens) < 4:
        while data[pos:pos + 1].isspace():
            pos += 1
        start = pos
        while not data[pos:pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    pos += 1
    if tokens[0] != b"P5" or int(tokens[3]) != 65535:
        raise ValueError("not a 16-bit binary PGM")
    w, h = int(tokens[1]), int(tokens[2])
    img = np.frombuffer(data[pos:pos + 2 * w * h], dtype=">u2").reshape(h, w)
    return img[::-1].T.astype(np.uint16)


def sample_plane(sup: ModeSuperposition, z: float, grid: GridSpec) -> SampledField:
    X, Y = grid.mesh()
    return SampledField(grid, float(z), sup.field(X, Y, z), sup.beam.wavelength)


def numerical_overlap(a: SampledField, b: SampledField) -> complex:
    """Midpoint-rule approximation of the overlap integral of conj(a) * b."""
    if a.grid != b.grid or a.z != b.z:
        raise ValueError("fields are sampled on different grids or planes")
    return complex(np.vdot(a.values, b.values) * a.grid.cell_area)


def angular_spectrum_propagate(f: SampledField, dz: float, pad: int = 1) -> SampledField:
    """Propagate a sampled field by ``dz`` with the paraxial transfer function.

    The envelope convention matches :mod:`hopflink.modes` (carrier dropped,
    Gouy phase advancing), for which each plane-wave component acquires
    exp(+i (kx^2 + ky^2) dz / (2k)). The grid must resolve the field's
    bandwidth.

    Parameters
    ----------
    pad : int
        With ``pad > 1`` the field is embedded in a zero-filled grid ``pad``
        times larger, propagated there and cropped back. This removes
        wrap-around from the periodic boundary when the beam spreads past
        the window, at the price of exact energy conservation and
        reversibility, which hold only for ``pad=1``.
    """
    pad = int(pad)
    if pad < 1:
        raise ValueError("pad must be a positive integer")
    if dz == 0:
        return SampledField(f.grid, f.z, f.values.copy(), f.wavelength)
    g = f.grid
    nx, ny = g.nx * pad, g.ny * pad
    k = 2 * np.pi / f.wavelength
    kx = 2 * np.pi * np.fft.fftfreq(nx, g.dx)
    ky = 2 * np.pi * np.fft.fftfreq(ny, g.dy)
    KX, KY = np.meshgrid(kx, ky, indexing="ij")
    transfer = np.exp(1j * (KX**2 + KY**2) * dz / (2 * k))
    ox, oy = (nx - g.nx) // 2, (ny - g.ny) // 2
    big = np.zeros((nx, ny), dtype=complex)
    big[ox:ox + g.nx, oy:oy + g.ny] = f.values
    out = np.fft.ifft2(np.fft.fft2(big) * transfer)[ox:ox + g.nx, oy:oy + g.ny]
    return SampledField(g, f.z + dz, out, f.wavelength)
