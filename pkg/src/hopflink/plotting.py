"""Report figures written next to the CSV/JSON outputs of the command line."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

RC = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "figure.dpi": 100,
    "savefig.dpi": 150,
    "image.cmap": "viridis",
}
# keeps PNG bytes identical between runs
SAVE_KW = {"metadata": {"Software": None}}


def _figure(width=4.5, ratio=0.75, **kw):
    with plt.rc_context(RC):
        return plt.subplots(figsize=(width, width * ratio), **kw)


def _save(fig, path):
    with plt.rc_context(RC):
        fig.savefig(path, bbox_inches="tight", **SAVE_KW)
    plt.close(fig)


def plot_vortex_lines(report, beam, path):
    with plt.rc_context(RC):
        fig = plt.figure(figsize=(4.5, 4.5))
        ax = fig.add_subplot(projection="3d")
        for n, line in enumerate(report.lines):
            p = line.points
            style = "-" if line.closed else "--"
            ax.plot(p[:, 0] / beam.waist_w0, p[:, 1] / beam.waist_w0,
                    p[:, 2] / beam.rayleigh_zR, style, lw=1.5, label=f"line {n}")
        ax.set_xlabel(r"$x/w_0$")
        ax.set_ylabel(r"$y/w_0$")
        ax.set_zlabel(r"$z/z_R$")
        ax.set_title(f"{report.n_closed} closed, {report.n_open} open")
        if report.lines:
            ax.legend(loc="upper left")
    _save(fig, path)


def plot_phase_map(phase_map, path, title="hologram phase"):
    fig, ax = _figure(ratio=0.85)
    g = phase_map.grid
    ext = np.array([-g.half_extent, g.half_extent, -g.half_extent, g.half_extent]) * 1e3
    im = ax.imshow(phase_map.values.T, origin="lower", extent=ext, cmap="twilight",
                   vmin=0, vmax=2 * np.pi)
    fig.colorbar(im, ax=ax, label="phase (rad)")
    ax.set_xlabel("x (mm)")
    ax.set_ylabel("y (mm)")
    ax.set_title(title)
    _save(fig, path)


def plot_field(field, path, title="reconstructed first order"):
    fig, (a1, a2) = _figure(width=7.0, ratio=0.42, ncols=2)
    g = field.grid
    ext = np.array([-g.half_extent, g.half_extent, -g.half_extent, g.half_extent]) * 1e3
    a1.imshow(np.abs(field.values).T ** 2, origin="lower", extent=ext, cmap="inferno")
    a1.set_title("intensity")
    a2.imshow(np.angle(field.values).T, origin="lower", extent=ext, cmap="twilight")
    a2.set_title("phase")
    for a in (a1, a2):
        a.set_xlabel("x (mm)")
    a1.set_ylabel("y (mm)")
    fig.suptitle(title)
    _save(fig, path)


def plot_contrast_map(dz, dtheta, values, zr, path):
    fig, ax = _figure(ratio=0.8)
    im = ax.pcolormesh(dtheta, dz / zr, values, shading="auto")
    fig.colorbar(im, ax=ax, label="coincidence probability")
    ax.set_xlabel(r"$\Delta\theta$ (rad)")
    ax.set_ylabel(r"$\Delta z/z_R$")
    _save(fig, path)


def plot_bell_curves(theta_s, theta_i, curves, path):
    fig, ax = _figure()
    for ts, row in zip(theta_s, curves):
        ax.plot(theta_i, row, label=rf"$\theta_s$ = {ts:.3f}")
    ax.set_xlabel(r"$\theta_i$ (rad)")
    ax.set_ylabel("normalised coincidence")
    ax.legend()
    _save(fig, path)


def plot_correlation_matrix(matrix, signal_labels, idler_labels, path):
    fig, ax = _figure(ratio=0.9)
    im = ax.imshow(matrix, cmap="Blues")
    ax.set_xticks(range(len(idler_labels)), idler_labels, rotation=45)
    ax.set_yticks(range(len(signal_labels)), signal_labels)
    ax.set_xlabel("idler mode")
    ax.set_ylabel("signal mode")
    fig.colorbar(im, ax=ax, label="coincidence probability")
    _save(fig, path)


def plot_counts(labels, measured, errors, expected, path):
    fig, ax = _figure()
    x = np.arange(len(labels))
    ax.errorbar(x, measured, yerr=errors, fmt="o", label="simulated")
    ax.plot(x, expected, "x", label="expected")
    ax.set_xticks(x, labels, rotation=45)
    ax.set_ylabel("quantum contrast")
    ax.legend()
    _save(fig, path)
