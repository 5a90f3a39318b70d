"""Command-line surface: one experiment per invocation, reproducible outputs.

Every subcommand reads a JSON config, writes ``report.json`` plus CSV artifacts
to the output directory, prints a one-line summary and exits with 0 (verdict
pass / success), 2 (verdict fail: GCC miss, CG stagnation, replay mismatch) or
1 (usage or config errors). CSV floats carry 17 significant digits with LF
endings, so identical configs and seeds reproduce byte-identical artifacts.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys as _sys

import numpy as np

from . import __version__
from .analysis import admissibility_ratio, kalman_mode_test, observability_constants
from .config import build_experiment, config_hash, load_config
from .dynamics import (
    ControlSignal,
    SystemState,
    energy,
    interval_weights,
    solve_dissipative,
    solve_hyperbolic,
    state_l2_norm,
    step_count,
    trapezoid_weights,
)
from .errors import CascadeLabError, ConfigError, NotApplicableError
from .geometry import gcc_check, interval_entry_time
from .hum import SeedSpace, epsilon_sweep, synthesize_control
from .operators import HypothesisReport, verify_coupling_bounds, verify_operator_coercivity
from .util import fmt_float


# ---------------------------------------------------------------------------
# artifact writers
# ---------------------------------------------------------------------------


def _scipy_version():
    import scipy

    return scipy.__version__


def _open_w(path):
    return open(path, "w", encoding="utf-8", newline="\n")


def write_report(out_dir, payload):
    path = os.path.join(out_dir, "report.json")
    with _open_w(path) as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def write_spectra_csv(out_dir, eigenvalues, name="spectra.csv"):
    path = os.path.join(out_dir, name)
    with _open_w(path) as fh:
        fh.write("index,eigenvalue\n")
        for i, lam in enumerate(eigenvalues, start=1):
            fh.write(f"{i},{fmt_float(lam)}\n")
    return path


def _rows_of(arr, component, t):
    if arr.ndim == 0 or np.isscalar(arr):
        vals = [arr]
    else:
        vals = arr
    for idx, v in enumerate(np.atleast_1d(vals)):
        yield (fmt_float(t), component, idx, fmt_float(np.real(v)), fmt_float(np.imag(v)))


def write_control_csv(out_dir, signal):
    path = os.path.join(out_dir, "control.csv")
    with _open_w(path) as fh:
        fh.write("t,component,index,value_re,value_im\n")
        for k in sorted(signal.values):
            arr = signal.values[k]
            for n, t in enumerate(signal.t):
                sample = arr[n] if arr.ndim > 1 else arr[n : n + 1]
                for row in _rows_of(np.atleast_1d(sample), k, t):
                    fh.write(",".join(str(c) for c in row) + "\n")
    return path


def write_state_csv(out_dir, state, name="initial_state.csv"):
    path = os.path.join(out_dir, name)
    with _open_w(path) as fh:
        fh.write("component,kind,index,value_re,value_im\n")
        for i in range(state.w.shape[0]):
            for idx, v in enumerate(state.w[i]):
                fh.write(f"{i + 1},w,{idx},{fmt_float(np.real(v))},{fmt_float(np.imag(v))}\n")
            if state.wp is not None:
                for idx, v in enumerate(state.wp[i]):
                    fh.write(f"{i + 1},wp,{idx},{fmt_float(np.real(v))},{fmt_float(np.imag(v))}\n")
    return path


def write_trajectory_csv(out_dir, snapshots):
    path = os.path.join(out_dir, "trajectory.csv")
    with _open_w(path) as fh:
        fh.write("t,component,index,value_re,value_im\n")
        for t, state in snapshots:
            for i in range(state.w.shape[0]):
                for row in _rows_of(state.w[i], i + 1, t):
                    fh.write(",".join(str(c) for c in row) + "\n")
    return path


def _base_report(exp, subcommand):
    return {
        "subcommand": subcommand,
        "config": exp.cfg,
        "config_hash": config_hash(exp.cfg),
        "resolved": {"T": exp.T, "dt": exp.dt, "K_filter": exp.K_filter,
                     "steps": step_count(exp.T, exp.dt)},
        "versions": {
            "cascade_lab": __version__,
            "numpy": np.__version__,
            "scipy": _scipy_version(),
            "python": _sys.version.split()[0],
        },
        "notes": list(exp.notes),
    }


def _out_dir(exp, args):
    out = args.out or exp.cfg.get("output_dir") or "runs/latest"
    os.makedirs(out, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _cmd_gcc(args):
    exp = build_experiment(load_config(args.config))
    gcc_cfg = exp.cfg.get("gcc", {})
    horizon = float(gcc_cfg.get("T") or exp.T)
    n_rays = int(gcc_cfg.get("n_rays", 402 if exp.grid.dim == 1 else 648))
    regions = exp.coupling_regions + exp.control_regions
    if not regions:
        raise ConfigError("gcc needs at least one coupling or distributed control region")
    reports = []
    for region in regions:
        dt_ray = gcc_cfg.get("dt_ray") or region.min_part_width() / 5.0
        rep = gcc_check(region, exp.grid.extents, horizon, n_rays, float(dt_ray))
        entry = rep.to_dict()
        if exp.grid.dim == 1:
            entry["worst_entry_time_exact"] = interval_entry_time(region, exp.grid.extents[0])
        reports.append(entry)
    verdict = all(r["verdict"] == "pass" for r in reports)
    out = _out_dir(exp, args)
    payload = _base_report(exp, "gcc")
    payload["gcc"] = reports
    payload["verdict"] = "pass" if verdict else "fail"
    write_report(out, payload)
    print(f"gcc: {'pass' if verdict else 'fail'} "
          f"({sum(r['rays_hit'] for r in reports)}/{sum(r['rays_total'] for r in reports)} rays hit) "
          f"-> {out}")
    return 0 if verdict else 2


def _cmd_check(args):
    exp = build_experiment(load_config(args.config))
    ana = exp.cfg.get("analysis", {})
    lam1 = verify_operator_coercivity(exp.basis)
    couplings = [verify_coupling_bounds(region, exp.grid, n_samples=int(ana.get("n_samples", 100)),
                                        seed=exp.seed)
                 for region in exp.coupling_regions]
    boundary = any(e.get("kind") == "boundary" for e in exp.cfg.get("control", []))
    default_levels = [exp.grid.n[0], 2 * exp.grid.n[0]] if boundary else [exp.grid.n[0]]
    levels = ana.get("levels") or default_levels
    adm = admissibility_ratio(exp.sys, int(ana.get("n_samples", 5)), min(exp.T, 1.0), exp.dt,
                              levels, seed=exp.seed)
    slack_tol = -1e-9
    coupling_ok = all(c.slack_bound >= slack_tol and c.slack_coercivity >= slack_tol
                      for c in couplings)
    ratios_ok = all(math.isfinite(r) for r in adm.max_ratios)
    if adm.observation == "distributed" and exp.control_regions:
        bound = max(max(r.amplitudes) for r in exp.control_regions) ** 2
        ratios_ok &= all(r <= bound * (1 + 1e-9) + 1e-12 for r in adm.max_ratios)
    verdict = lam1 > 0 and coupling_ok and ratios_ok
    out = _out_dir(exp, args)
    payload = _base_report(exp, "check")
    report = HypothesisReport(
        coercivity_constant=lam1,
        coupling=couplings,
        admissibility_ratios=adm.max_ratios,
        flags={"coercivity": lam1 > 0, "coupling": coupling_ok, "admissibility": ratios_ok},
        notes=["multiplier bounds certified in the base space only; "
               "smoothness-scale boundedness is untested"],
    )
    payload["hypotheses"] = report.to_dict()
    payload["hypotheses"]["admissibility"] = adm.to_dict()
    payload["verdict"] = "pass" if verdict else "fail"
    write_report(out, payload)
    write_spectra_csv(out, exp.basis.eigenvalues)
    print(f"check: {'pass' if verdict else 'fail'} "
          f"(coercivity {lam1:.6g}, max admissibility ratio "
          f"{max(adm.max_ratios):.4g}) -> {out}")
    return 0 if verdict else 2


def _run_control(exp, args):
    return synthesize_control(exp.sys, exp.Y0, exp.T, exp.dt, exp.K_filter,
                              eps=exp.eps, cg_tol=exp.cg_tol, max_iter=exp.max_iter)


def _quick_hypotheses(exp):
    lam1 = verify_operator_coercivity(exp.basis)
    couplings = [verify_coupling_bounds(region, exp.grid, n_samples=20, seed=exp.seed)
                 for region in exp.coupling_regions]
    return {
        "coercivity_constant": lam1,
        "coupling": [c.to_dict() for c in couplings],
    }


def _quick_gcc(exp):
    from .geometry import default_horizon

    regions = exp.coupling_regions + exp.control_regions
    if not regions:
        return []
    # the heat/phase family is controllable in any positive time; report the
    # geometric sweep against an adequate horizon instead of the parabolic T
    horizon = exp.T if exp.sys.is_hyperbolic else max(exp.T, default_horizon(regions, exp.grid.extents))
    reports = []
    for region in regions:
        dt_ray = region.min_part_width() / 5.0
        rep = gcc_check(region, exp.grid.extents, horizon, 402 if exp.grid.dim == 1 else 648, dt_ray)
        reports.append(rep.to_dict())
    return reports


def _cmd_control(args):
    exp = build_experiment(load_config(args.config))
    result = _run_control(exp, args)
    out = _out_dir(exp, args)
    payload = _base_report(exp, "control")
    payload["hum"] = result.to_dict()
    payload["hum"]["control_sampling"] = result.control.sampling
    payload["hypotheses"] = _quick_hypotheses(exp)
    payload["gcc"] = _quick_gcc(exp)
    payload["verdict"] = "pass" if result.success else "fail"
    paths = {"control": write_control_csv(out, result.control),
             "initial_state": write_state_csv(out, result.initial_state),
             "spectra": write_spectra_csv(out, exp.basis.eigenvalues)}
    if args.snapshots:
        times = np.linspace(0.0, exp.T, args.snapshots + 1)
        times = [round(t / exp.dt) * exp.dt for t in times]
        if exp.sys.is_hyperbolic:
            rec, _ = solve_hyperbolic(exp.sys, exp.Y0, result.control, exp.T, exp.dt,
                                      snapshot_times=times)
        else:
            rec, _ = solve_dissipative(exp.sys, exp.Y0, result.control, exp.T, exp.dt,
                                       snapshot_times=times)
        paths["trajectory"] = write_trajectory_csv(out, rec.snapshots)
    payload["artifacts"] = {k: os.path.basename(v) for k, v in paths.items()}
    write_report(out, payload)
    ratio = (result.terminal_energy_filtered / result.initial_energy
             if result.initial_energy > 0 else 0.0)
    print(f"control: {'pass' if result.success else 'fail'} "
          f"(filtered terminal/initial energy {ratio:.3e}, "
          f"{result.cg_iterations} cg iterations) -> {out}")
    return 0 if result.success else 2


def _cmd_observability(args):
    exp = build_experiment(load_config(args.config))
    ana = exp.cfg.get("analysis", {})
    t_grid = [float(t) for t in ana.get("t_grid", [exp.T])]
    K = int(ana.get("K", min(exp.K_filter, 5)))
    reports = []
    for T in t_grid:
        rep = observability_constants(exp.sys, T, exp.dt, K, which="control")
        entry = rep.to_dict()
        if exp.coupling_regions:
            rep2 = observability_constants(exp.sys, T, exp.dt, K, which="coupling")
            entry["c2_est"] = rep2.c2_est
            entry["coupling_eigenvalues"] = rep2.eigenvalues
        reports.append(entry)
    out = _out_dir(exp, args)
    payload = _base_report(exp, "observability")
    payload["observability"] = reports
    payload["verdict"] = "pass"
    write_report(out, payload)
    write_spectra_csv(out, reports[-1]["eigenvalues"])
    print(f"observability: c1_est {reports[-1]['c1_est']:.6g} at T={t_grid[-1]:g} -> {out}")
    return 0


def _cmd_kalman(args):
    exp = build_experiment(load_config(args.config))
    ana = exp.cfg.get("analysis", {})
    K = int(ana.get("K", exp.K_filter))
    report = kalman_mode_test(exp.sys.coupling, exp.sys.control, exp.basis, K)
    out = _out_dir(exp, args)
    payload = _base_report(exp, "kalman")
    payload["kalman"] = report.to_dict()
    payload["verdict"] = "pass" if report.full_rank else "fail"
    write_report(out, payload)
    write_spectra_csv(out, exp.basis.eigenvalues)
    print(f"kalman: {'full rank' if report.full_rank else 'rank deficient'} "
          f"over {len(report.modes)} modes -> {out}")
    return 0 if report.full_rank else 2


def _cmd_sweep(args):
    exp = build_experiment(load_config(args.config))
    if not exp.eps_list:
        raise ConfigError("sweep-eps needs hum.eps_list in the config")
    sweep = epsilon_sweep(exp.sys, exp.Y0, exp.T, exp.dt, exp.K_filter,
                          exp.eps_list, cg_tol=exp.cg_tol, max_iter=exp.max_iter)
    out = _out_dir(exp, args)
    payload = _base_report(exp, "sweep-eps")
    payload["sweep"] = sweep.to_dict()
    payload["verdict"] = "fail" if sweep.partial else "pass"
    write_report(out, payload)
    best = sweep.results[-1]
    if best.control is not None:
        write_control_csv(out, best.control)
        write_state_csv(out, exp.Y0)
    print(f"sweep-eps: slope {sweep.slope:.3f} over {len(sweep.eps_list)} eps values "
          f"({'partial' if sweep.partial else 'complete'}) -> {out}")
    return 2 if sweep.partial else 0


# ---------------------------------------------------------------------------
# replay
# ---------------------------------------------------------------------------


def _read_control_csv(path, exp, sampling):
    M = step_count(exp.T, exp.dt)
    t = exp.dt * np.arange(M + 1)
    dtype = exp.sys.state_dtype
    vals = {}
    for k, kind, data in exp.sys._control_ops:
        shape = (M + 1, exp.grid.n_total) if kind == "distributed" else (M + 1,)
        vals[k] = np.zeros(shape, dtype=dtype)
    with open(path, "r", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            k = int(row["component"])
            n = int(round(float(row["t"]) / exp.dt))
            v = float(row["value_re"]) + 1j * float(row["value_im"])
            v = v if dtype == np.complex128 else float(np.real(v))
            if vals[k].ndim == 2:
                vals[k][n, int(row["index"])] = v
            else:
                vals[k][n] = v
    weights = trapezoid_weights(M, exp.dt) if sampling == "node" else interval_weights(M, exp.dt)
    return ControlSignal(t, vals, weights, sampling)


def _read_state_csv(path, exp):
    state = SystemState(0.0,
                        np.zeros((exp.sys.N, exp.grid.n_total), dtype=exp.sys.state_dtype),
                        np.zeros((exp.sys.N, exp.grid.n_total)) if exp.sys.is_hyperbolic else None)
    with open(path, "r", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            i = int(row["component"]) - 1
            idx = int(row["index"])
            v = float(row["value_re"]) + 1j * float(row["value_im"])
            if row["kind"] == "w":
                state.w[i, idx] = v if exp.sys.state_dtype == np.complex128 else float(np.real(v))
            else:
                state.wp[i, idx] = float(np.real(v))
    return state


def _cmd_replay(args):
    run_dir = args.directory
    report_path = os.path.join(run_dir, "report.json")
    control_path = os.path.join(run_dir, "control.csv")
    state_path = os.path.join(run_dir, "initial_state.csv")
    for path in (report_path, control_path, state_path):
        if not os.path.exists(path):
            print(f"replay: missing {os.path.basename(path)} in {run_dir}", file=_sys.stderr)
            return 1
    with open(report_path, "r", encoding="utf-8") as fh:
        report = json.load(fh)
    if "hum" not in report:
        print("replay: report carries no control synthesis", file=_sys.stderr)
        return 1
    exp = build_experiment(report["config"])
    stored = report["hum"]
    signal = _read_control_csv(control_path, exp, stored.get("control_sampling", "node"))
    initial = _read_state_csv(state_path, exp)
    seeds = SeedSpace(exp.sys, exp.K_filter)
    if exp.sys.is_hyperbolic:
        rec, terminal = solve_hyperbolic(exp.sys, initial, signal, exp.T, exp.dt)
        X = seeds.readout(rec.terminal_levels, exp.dt)
    else:
        _, terminal = solve_dissipative(exp.sys, initial, signal, exp.T, exp.dt)
        X = seeds.readout(terminal.w, exp.dt)
    _, filt_total = seeds.energy_of(X)
    full = energy(exp.sys, terminal)

    def rel(a, b):
        scale = max(abs(a), abs(b), 1e-300)
        return abs(a - b) / scale

    mismatch = max(rel(full.total, stored["terminal_energy_full"]),
                   rel(filt_total, stored["terminal_energy_filtered"]))
    ok = mismatch <= 1e-9
    print(f"replay: {'pass' if ok else 'fail'} (max energy mismatch {mismatch:.3e})")
    return 0 if ok else 2


# ---------------------------------------------------------------------------
# demo configs
# ---------------------------------------------------------------------------


def demo_configs():
    """Canned desk-scale scenarios, including the disjoint-regions headline."""
    wave = {
        "domain": {"extents": [1.0], "n": [200]},
        "family": {"kind": "hyperbolic"},
        "N": 2, "p": 1,
        "coupling": [{"pair": [1, 2], "boxes": [[[0.2, 0.4]]], "amplitude": 1.0}],
        "control": [{"component": 2, "kind": "distributed", "boxes": [[[0.7, 0.9]]],
                     "amplitude": 1.0}],
        "time": {"T": 6.0, "dt": None},
        "hum": {"K_filter": 30, "eps": 0.0, "cg_tol": 1e-10, "max_iter": 500},
        "initial": [
            {"component": 1, "position_modes": [[1, 1.0]], "velocity_modes": []},
            {"component": 2, "position_modes": [[2, 0.5]], "velocity_modes": []},
        ],
        "gcc": {"n_rays": 402, "dt_ray": 0.005, "T": None},
        "output_dir": "runs/demo_wave_cascade",
        "seed": 20240501,
    }
    # the coupling amplitude is deliberately large: indirect observability
    # through disjoint regions is weak for the heat pair, and the sweep needs
    # the Gramian spectrum to straddle the eps range (no smallness condition
    # on couplings is required anywhere)
    heat = {
        "domain": {"extents": [1.0], "n": [100]},
        "family": {"kind": "dissipative", "theta": 0.0},
        "N": 2, "p": 1,
        "coupling": [{"pair": [1, 2], "boxes": [[[0.2, 0.4]]], "amplitude": 16.0}],
        "control": [{"component": 2, "kind": "distributed", "boxes": [[[0.7, 0.9]]],
                     "amplitude": 1.0}],
        "time": {"T": 0.4, "dt": 0.0016},
        "hum": {"K_filter": 12, "cg_tol": 1e-9,
                "eps_list": [1e-2, 1e-3, 1e-4, 1e-5, 1e-6]},
        "initial": [
            {"component": 1, "modes": [[1, 1.0]]},
            {"component": 2, "modes": [[1, 1.0]]},
        ],
        "output_dir": "runs/demo_heat_cascade",
        "seed": 20240502,
    }
    strip = {
        "domain": {"extents": [1.0, 1.0], "n": [20, 20]},
        "family": {"kind": "hyperbolic"},
        "N": 2, "p": 1,
        "coupling": [{"pair": [1, 2], "boxes": [[[0.4, 0.6], [0.0, 1.0]]],
                      "amplitude": 1.0, "label": "vertical strip"}],
        "control": [],
        "time": {"T": 10.0, "dt": None},
        "hum": {"K_filter": 5},
        "initial": [{"component": 1, "position_modes": [[1, 1.0]], "velocity_modes": []}],
        "gcc": {"n_rays": 648, "dt_ray": 0.02, "T": 10.0},
        "output_dir": "runs/strip_square",
        "seed": 20240503,
    }
    zero = {
        "domain": {"extents": [1.0], "n": [80]},
        "family": {"kind": "hyperbolic"},
        "N": 2, "p": 1,
        "coupling": [{"pair": [1, 2], "boxes": [[[0.2, 0.4]]], "amplitude": 0.0}],
        "control": [{"component": 2, "kind": "distributed", "boxes": [[[0.7, 0.9]]],
                     "amplitude": 1.0}],
        "time": {"T": 4.0, "dt": None},
        "hum": {"K_filter": 12, "eps": 0.0, "cg_tol": 1e-10, "max_iter": 200},
        "initial": [
            {"component": 1, "position_modes": [[1, 1.0]], "velocity_modes": []},
            {"component": 2, "position_modes": [[1, 0.5]], "velocity_modes": []},
        ],
        "output_dir": "runs/zero_coupling",
        "seed": 20240504,
    }
    # two coupling hops make the Gramian brutally ill-conditioned; generous
    # overlapping regions and amplitude 3 keep plain CG inside its budget
    chain = {
        "domain": {"extents": [1.0], "n": [120]},
        "family": {"kind": "hyperbolic"},
        "N": 3, "p": 2,
        "coupling": [
            {"pair": [1, 2], "boxes": [[[0.15, 0.45]]], "amplitude": 3.0},
            {"pair": [2, 3], "boxes": [[[0.4, 0.7]]], "amplitude": 3.0},
        ],
        "control": [{"component": 3, "kind": "distributed", "boxes": [[[0.65, 0.95]]],
                     "amplitude": 1.0}],
        "time": {"T": 12.0, "dt": None},
        "hum": {"K_filter": 12, "eps": 0.0, "cg_tol": 1e-6, "max_iter": 2000},
        "initial": [
            {"component": 1, "position_modes": [[1, 1.0]], "velocity_modes": []},
            {"component": 2, "position_modes": [[2, 0.3]], "velocity_modes": []},
            {"component": 3, "position_modes": [[3, 0.3]], "velocity_modes": []},
        ],
        "output_dir": "runs/chain3",
        "seed": 20240505,
    }
    return {
        "demo_wave_cascade.json": wave,
        "demo_heat_cascade.json": heat,
        "strip_square.json": strip,
        "zero_coupling.json": zero,
        "chain3_single_control.json": chain,
    }


def _cmd_demo(args):
    out = args.out or "demo_configs"
    os.makedirs(out, exist_ok=True)
    configs = demo_configs()
    for name, cfg in configs.items():
        with _open_w(os.path.join(out, name)) as fh:
            json.dump(cfg, fh, indent=2, sort_keys=True)
            fh.write("\n")
    print(f"demo: wrote {len(configs)} configs to {out} "
          f"(run e.g. `cascade-lab control --config {out}/demo_wave_cascade.json`)")
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def _parser():
    parser = argparse.ArgumentParser(
        prog="cascade-lab",
        description="Null-control experiments for cascade-coupled evolution systems",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def with_config(p):
        p.add_argument("--config", required=True, help="experiment JSON config")
        p.add_argument("--out", default=None, help="output directory override")

    for name, fn, helptext in (
        ("gcc", _cmd_gcc, "ray-sampled geometric control condition per region"),
        ("check", _cmd_check, "coercivity, coupling-bound and admissibility checks"),
        ("control", _cmd_control, "synthesize a null control and verify by re-simulation"),
        ("observability", _cmd_observability, "filtered observability constants"),
        ("kalman", _cmd_kalman, "per-mode rank test for constant couplings"),
        ("sweep-eps", _cmd_sweep, "penalized synthesis over a decreasing eps list"),
    ):
        p = sub.add_parser(name, help=helptext)
        with_config(p)
        if name == "control":
            p.add_argument("--snapshots", type=int, default=0,
                           help="write trajectory.csv with this many snapshots")
        p.set_defaults(fn=fn)

    p = sub.add_parser("replay", help="re-simulate a stored run and compare energies")
    p.add_argument("directory", help="run directory with report.json and CSVs")
    p.set_defaults(fn=_cmd_replay)

    p = sub.add_parser("demo", help="write the canned demo configs")
    p.add_argument("--out", default=None, help="directory for the configs")
    p.set_defaults(fn=_cmd_demo)
    return parser


def main(argv=None):
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    try:
        return args.fn(args)
    except (ConfigError, NotApplicableError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return 1
    except CascadeLabError as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
