"""
Command-line front end.

Every subcommand writes delimited/JSON outputs plus a PNG figure into the
output directory and prints what it reproduces. Run ``hopflink --help``.
"""
from __future__ import annotations

import argparse
import copy
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from hopflink import hologram, plotting, topology, twophoton
from hopflink.fieldgrid import GridSpec, sample_plane
from hopflink.modes import BeamGeometry, ModeSuperposition, parse_named_state

log = logging.getLogger("hopflink")

DEFAULT_CONFIG = {
    "beam": {"wavelength_m": 710e-9, "waist_m": 1e-3},
    "grid": {"n": 256, "half_extent_w0": 4.0},
    "volume": {"n": 192, "nz": 129, "half_extent_w0": 3.0, "z_extent_zr": 1.0},
    "hologram": {"grating_cycles": 32, "probe_waist_w0": 4.0, "encoding": "normalized_blaze"},
    "state": {"c0": 0.76, "c2": 0.64, "gamma": 0.8, "max_ell": 4, "max_p": 3},
    "contrast": {"dz_extent_zr": 1.0, "n_dz": 41, "n_dtheta": 73},
    "bell": {"settings": list(twophoton.DEFAULT_SETTINGS),
             "curve_theta_s": [0.0, math.pi / 4, math.pi / 2, 3 * math.pi / 4],
             "n_theta_i": 73},
    "counts": {"pair_rate": 0.05, "singles_s": 200.0, "singles_i": 200.0,
               "gate_s": 10e-9, "integration_s": 3600.0},
    "output_dir": "hopflink-out",
    "seed": 0,
}

ANCHORS = {
    "trace": "Hopf-link superposition: a pair of linked phase-singularity loops",
    "holo": "off-axis phase-only measurement hologram of the link",
    "contrast-map": "coincidences under axial and rotational displacement of the idler link",
    "bell": "coincidence curves versus analyzer orientation and the CHSH parameter S",
    "corr-matrix": "modal correlation matrix between the LG modes forming the link",
    "counts": "quantum contrast C/(S_s S_i dt) from simulated photon counting",
}


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


@dataclass
class RunConfig:
    """Merged run configuration; unknown keys are rejected."""

    data: dict = field(default_factory=lambda: copy.deepcopy(DEFAULT_CONFIG))

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            user = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ValueError(f"cannot read config {path}: {exc}") from None
        if not isinstance(user, dict):
            raise ValueError("config must be a JSON object")
        unknown = _unknown_keys(DEFAULT_CONFIG, user)
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(unknown)}")
        return cls(_merge(DEFAULT_CONFIG, user))

    def __getitem__(self, key):
        return self.data[key]

    @property
    def beam(self) -> BeamGeometry:
        return BeamGeometry.from_dict(self.data["beam"])

    def grid(self) -> GridSpec:
        g = self.data["grid"]
        return GridSpec(int(g["n"]), int(g["n"]), g["half_extent_w0"] * self.beam.waist_w0)

    def volume(self) -> topology.VolumeSpec:
        v = self.data["volume"]
        return topology.VolumeSpec.default_for(self.beam, int(v["n"]), int(v["nz"]),
                                               v["half_extent_w0"], v["z_extent_zr"])

    def link_qubit(self) -> twophoton.LinkQubitState:
        return twophoton.LinkQubitState(self.data["state"]["c0"], self.data["state"]["c2"])

    def spdc_state(self) -> twophoton.TwoPhotonState:
        s = self.data["state"]
        return twophoton.TwoPhotonState.spdc_bandwidth(s["gamma"], int(s["max_ell"]),
                                                      int(s["max_p"]))


def _unknown_keys(ref, user, prefix=""):
    out = []
    for k, v in user.items():
        if k not in ref:
            out.append(prefix + k)
        elif isinstance(v, dict) and isinstance(ref[k], dict):
            out.extend(_unknown_keys(ref[k], v, prefix + k + "."))
    return out


def _fmt(v) -> str:
    return f"{v:.9g}"


def _write_csv(path, header, rows):
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(r if isinstance(r, str) else _fmt(r) for r in row) + "\n")


def _write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _resolve_state(args, cfg) -> ModeSuperposition:
    if getattr(args, "state_file", None):
        return ModeSuperposition.from_json(Path(args.state_file).read_text())
    return parse_named_state(args.state, cfg.beam)


# ------------------------------------------------------------ commands


def cmd_trace(args, cfg, out: Path):
    sup = _resolve_state(args, cfg)
    vol = cfg.volume()
    report = topology.trace_vortex_lines(sup, vol)
    _write_json(out / "topology.json", report.to_dict())
    for n, line in enumerate(report.lines):
        line.to_csv(out / f"line_{n}.csv")
    if not args.no_figures:
        plotting.plot_vortex_lines(report, sup.beam, out / "vortex_lines.png")
    m = np.asarray(report.linking_matrix)
    print(f"closed loops: {report.n_closed}, open lines: {report.n_open}")
    if report.n_closed >= 2:
        print(f"linking matrix: {m.tolist()}")


def cmd_holo(args, cfg, out: Path):
    sup = _resolve_state(args, cfg)
    h = cfg["hologram"]
    spec = hologram.HologramSpec(h["grating_cycles"], cfg.grid(), args.encoding or h["encoding"])
    pmap = hologram.synthesize_hologram(sup, spec)
    pmap.to_pgm(out / "hologram.pgm")
    pmap.to_csv(out / "hologram.csv")
    probe = h["probe_waist_w0"] * sup.beam.waist_w0
    recon = hologram.first_order_field(pmap, spec, probe)
    target = sample_plane(sup, 0.0, spec.grid)
    fidelity = hologram.normalized_overlap(target, recon)
    survival = hologram.vortex_survival(target, recon, 2 * sup.beam.waist_w0)
    _write_json(out / "fidelity.json", {
        "encoding": spec.encoding.value, "grating_cycles": spec.grating_cycles,
        "probe_waist_m": probe, "normalized_overlap": fidelity,
        "vortex_points_matched": survival["matched"],
        "max_vortex_offset_cells": survival["max_offset_cells"],
        "n_target_vortices": survival["n_target"]})
    if not args.no_figures:
        plotting.plot_phase_map(pmap, out / "hologram.png")
        plotting.plot_field(recon, out / "reconstruction.png")
    print(f"first-order overlap with target: {fidelity:.4f}")


def cmd_contrast_map(args, cfg, out: Path):
    beam = cfg.beam
    c = cfg["contrast"]
    zr = beam.rayleigh_zR
    dz = np.linspace(-c["dz_extent_zr"] * zr, c["dz_extent_zr"] * zr, int(c["n_dz"]))
    dth = np.linspace(0.0, np.pi, int(c["n_dtheta"]))
    state = cfg.link_qubit().to_state(raw=args.raw, beam=beam)
    meas_s, meas_i = twophoton.link_analyzers(0.0, 0.0, beam)
    values = twophoton.contrast_map(state, meas_s, meas_i, dz, dth)
    _write_csv(out / "contrast_map.csv", "dz_m,dtheta_rad,contrast",
               ((z, t, values[a, b]) for a, z in enumerate(dz) for b, t in enumerate(dth)))
    if not args.no_figures:
        plotting.plot_contrast_map(dz, dth, values, zr, out / "contrast_map.png")
    a, b = np.unravel_index(np.argmax(values), values.shape)
    print(f"peak coincidence {values[a, b]:.4f} at dz = {dz[a]:.4g} m, dtheta = {dth[b]:.4g} rad")


def cmd_bell(args, cfg, out: Path):
    b = cfg["bell"]
    settings = tuple(b["settings"])
    estimator = {"visibility": "visibility_2sqrt2", "projective": "projective_chsh"}.get(
        args.estimator, args.estimator)
    qubit = cfg.link_qubit()
    scan = twophoton.chsh_scan(qubit, estimator, settings)
    theta_i = np.linspace(0.0, np.pi, int(b["n_theta_i"]))
    theta_s = tuple(b["curve_theta_s"])
    curves = twophoton.bell_curves(qubit, theta_s, theta_i, normalize=not args.raw)
    _write_csv(out / "bell_curves.csv", "theta_s_rad,theta_i_rad,coincidence",
               ((s, t, curves[a, k]) for a, s in enumerate(theta_s)
                for k, t in enumerate(theta_i)))
    report = scan.to_dict()
    s_best, best = twophoton.chsh_grid_search(qubit)
    report["projective_optimum"] = {"S": s_best, "settings": list(best)}
    _write_json(out / "bell.json", report)
    if not args.no_figures:
        plotting.plot_bell_curves(theta_s, theta_i, curves, out / "bell_curves.png")
    print(f"estimator {scan.estimator.value}: S = {scan.S:.4f}, visibility = {scan.visibility:.4f}")
    print(f"largest projective S over all settings: {s_best:.4f}")


def cmd_corr_matrix(args, cfg, out: Path):
    state = cfg.spdc_state()
    sig = [(0, 0), (0, 1), (0, 2), (2, 0)]
    idl = [(-ell, p) for ell, p in sig]
    m = twophoton.correlation_matrix(state, sig, idl)
    lab_s = [f"|{e},{p}>" for e, p in sig]
    lab_i = [f"|{e},{p}>" for e, p in idl]
    _write_csv(out / "corr_matrix.csv", "signal_mode,idler_mode,probability",
               ((lab_s[r], lab_i[c], m[r, c]) for r in range(len(sig)) for c in range(len(idl))))
    if not args.no_figures:
        plotting.plot_correlation_matrix(m, lab_s, lab_i, out / "corr_matrix.png")
    print("diagonal: " + ", ".join(_fmt(v) for v in np.diag(m)))


def cmd_counts(args, cfg, out: Path):
    c = cfg["counts"]
    qubit = cfg.link_qubit()
    a, a2, b, b2 = cfg["bell"]["settings"]
    table = {}
    for s, i in ((a, b), (a, b2), (a2, b), (a2, b2)):
        table[(s, i)] = twophoton.coincidence_probability(qubit, *twophoton.link_analyzers(s, i))
    records = twophoton.simulate_counts(table, c["pair_rate"], c["singles_s"], c["singles_i"],
                                        c["gate_s"], c["integration_s"], cfg["seed"])
    rows = []
    for (s, i), r in records.items():
        rows.append((s, i, r.coincidence_counts, r.coincidence_rate, r.singles_s, r.singles_i,
                     r.quantum_contrast, r.expected_quantum_contrast, r.qc_standard_error))
    _write_csv(out / "counts.csv",
               "theta_s_rad,theta_i_rad,coincidence_counts,coincidence_rate,singles_s,"
               "singles_i,quantum_contrast,expected_quantum_contrast,qc_standard_error", rows)
    if not args.no_figures:
        labels = [f"({s:.2f},{i:.2f})" for s, i in records]
        plotting.plot_counts(labels, [r[6] for r in rows], [r[8] for r in rows],
                             [r[7] for r in rows], out / "counts.png")
    for r in rows:
        print(f"theta_s={r[0]:.3f} theta_i={r[1]:.3f}: QC = {r[6]:.2f} "
              f"(expected {r[7]:.2f} +- {r[8]:.2f})")


COMMANDS = {
    "trace": cmd_trace,
    "holo": cmd_holo,
    "contrast-map": cmd_contrast_map,
    "bell": cmd_bell,
    "corr-matrix": cmd_corr_matrix,
    "counts": cmd_counts,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hopflink",
        description="Linked optical vortex loops: topology, holograms and two-photon predictions.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="RunConfig JSON file")
    common.add_argument("--out", help="output directory (overrides config)")
    common.add_argument("--seed", type=int, help="random seed (overrides config)")
    common.add_argument("--no-figures", action="store_true", help="skip PNG figures")
    common.add_argument("-v", "--verbose", action="store_true")

    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True
    p = sub.add_parser("trace", parents=[common], help="trace vortex lines and linking numbers")
    _add_state_args(p)
    p = sub.add_parser("holo", parents=[common], help="synthesise and test a measurement hologram")
    _add_state_args(p)
    p.add_argument("--encoding", choices=[e.value for e in hologram.Encoding])
    p = sub.add_parser("contrast-map", parents=[common],
                       help="coincidences over axial/rotational displacement")
    p.add_argument("--raw", action="store_true", help="use unnormalised c0, c2")
    p = sub.add_parser("bell", parents=[common], help="Bell curves and CHSH parameter")
    p.add_argument("--estimator", default="projective",
                   choices=["projective", "visibility", "projective_chsh", "visibility_2sqrt2"])
    p.add_argument("--raw", action="store_true", help="write unnormalised coincidence curves")
    sub.add_parser("corr-matrix", parents=[common], help="LG-mode correlation matrix")
    sub.add_parser("counts", parents=[common], help="Monte Carlo coincidence counting")
    return parser


def _add_state_args(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--state", default="hopf-link",
                   help="hopf-link, p-hopf or lg:<ell>,<p> (default hopf-link)")
    g.add_argument("--state-file", help="superposition JSON file")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = RunConfig.load(args.config) if args.config else RunConfig()
        if args.seed is not None:
            cfg.data["seed"] = args.seed
        out = Path(args.out or cfg["output_dir"])
        out.mkdir(parents=True, exist_ok=True)
        print(f"[{args.command}] reproduces: {ANCHORS[args.command]}")
        COMMANDS[args.command](args, cfg, out)
    except (ValueError, KeyError, TypeError, OSError) as exc:
        print(parser.format_usage(), end="", file=sys.stderr)
        print(f"hopflink {args.command}: error: {exc}", file=sys.stderr)
        return 1
    print(f"outputs written to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
