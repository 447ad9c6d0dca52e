"""Command-line entry point.

    vibron-ratchet <subcommand> --config <path> [--out-dir <dir>] [--jobs N]

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional

import numpy as np
import scipy

from . import __version__
from .config import ConfigError, RunConfig, load_config, quantity
from .crossing import direct_crossing, reverse_crossing
from .dynamics import IntegrationError, Trajectory, evolve, run_two_stage
from .experiments import (
    default_jobs,
    energy_matching_check,
    lz_validation_sweep,
    measure_direct,
    mutation_experiment,
    parameter_sweep,
    ratchet_experiment,
)
from .model import StateVector

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4
CSV_HEADER = "t,re_c1,im_c1,re_c2,im_c2,rho11,rho22,diag1,diag2,gap"
SUBCOMMANDS = ("simulate", "lz-validate", "crossing", "ratchet", "sweep", "mutate")


def trajectory_table(traj: Trajectory) -> np.ndarray:
    a = traj.amplitudes
    return np.column_stack([
        traj.times, a[:, 0].real, a[:, 0].imag, a[:, 1].real, a[:, 1].imag,
        traj.rho11, traj.rho22, traj.diag1, traj.diag2, traj.gap,
    ])


def write_csv(path: Path, header: str, rows: np.ndarray) -> None:
    np.savetxt(path, rows, fmt="%.17g", delimiter=",", header=header, comments="")


def write_trajectory(path: Path, traj: Trajectory) -> None:
    write_csv(path, CSV_HEADER, trajectory_table(traj))


def versions(cfg: RunConfig) -> dict:
    return {
        "tool": __version__,
        "fixture": cfg.fixture_version,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
    }


def _finite(x):
    if isinstance(x, float) and not np.isfinite(x):
        return None
    if isinstance(x, dict):
        return {k: _finite(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_finite(v) for v in x]
    if isinstance(x, np.generic):
        return _finite(x.item())
    return x


def write_summary(path: Path, cfg: RunConfig, results: dict) -> None:
    doc = {"config": cfg.resolved, "results": _finite(results), "versions": versions(cfg)}
    path.write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")


def _fmt(x) -> str:
    return "none" if x is None else f"{x:.6g}"


def _simulate(cfg: RunConfig, out: Path, jobs: int) -> str:
    model, integ, exp = cfg.model(), cfg.integrator(), cfg.experiment
    horizon = exp["horizon_periods"] * model.period1
    psi0 = StateVector.basis(exp["initial_state"])
    if model.vibron2 is not None and exp["initial_state"] == 1:
        traj, t2 = run_two_stage(model, exp["threshold"], horizon, integ, initial=psi0)
    else:
        fixed = model.with_vibron2_on(exp["t2"]) if model.vibron2 is not None else model
        traj = evolve(fixed, psi0, model.t1, model.t1 + horizon, integ)
        t2 = exp["t2"]
    write_trajectory(out / cfg.output["trajectory_csv"], traj)
    results = {
        "rho11_final": float(traj.rho11[-1]),
        "rho22_final": float(traj.rho22[-1]),
        "t2": t2,
        "max_norm_error": traj.max_norm_error,
        "samples": len(traj),
    }
    write_summary(out / cfg.output["summary_json"], cfg, results)
    return f"rho11={_fmt(results['rho11_final'])} rho22={_fmt(results['rho22_final'])} t2={_fmt(t2)}"


def _lz_validate(cfg: RunConfig, out: Path, jobs: int) -> str:
    exp = cfg.experiment
    rows = lz_validation_sweep(exp["gammas"], cfg.integrator(), exp["lz_residual"])
    table = np.array([r[:4] for r in rows], dtype=float)
    write_csv(out / cfg.output["table_csv"], "gamma,p_numeric,p_analytic,rel_error", table)
    results = {"rows": [r._asdict() for r in rows], "max_rel_error": max(r.rel_error for r in rows)}
    write_summary(out / cfg.output["summary_json"], cfg, results)
    return f"max_rel_error={_fmt(results['max_rel_error'])} gammas={len(rows)}"


def _crossing(cfg: RunConfig, out: Path, jobs: int) -> str:
    model, exp = cfg.model(), cfg.experiment
    dcr = direct_crossing(model)
    results = {"direct": dcr.to_dict()}
    t2 = exp["t2"]
    if model.vibron2 is not None:
        if t2 is None:
            t2 = measure_direct(model, exp["threshold"], exp["horizon_periods"], cfg.integrator()).t2_detected
        results["t2"] = t2
        results["reverse"] = reverse_crossing(model, t2).to_dict()
    else:
        results["reverse"] = reverse_crossing(model, None).to_dict()
    write_summary(out / cfg.output["summary_json"], cfg, results)
    return (
        f"direct_solvable={dcr.solvable} reverse_solvable={results['reverse']['solvable']} "
        f"t2={_fmt(t2)}"
    )


def _ratchet(cfg: RunConfig, out: Path, jobs: int) -> str:
    model, exp = cfg.model(), cfg.experiment
    rep = ratchet_experiment(model, exp["threshold"], exp["horizon_periods"], cfg.integrator())
    write_trajectory(out / cfg.output["trajectory_csv"], rep.direct_trajectory)
    write_trajectory(out / cfg.output["reverse_csv"], rep.reverse_trajectory)
    results = rep.to_dict()
    results["energy_matching"] = energy_matching_check(model)._asdict()
    write_summary(out / cfg.output["summary_json"], cfg, results)
    return f"p_direct={_fmt(rep.p_direct)} p_reverse={_fmt(rep.p_reverse)} t2={_fmt(rep.t2_detected)}"


def _sweep(cfg: RunConfig, out: Path, jobs: int) -> str:
    exp = cfg.experiment
    if not exp["sweep"]:
        raise ConfigError("experiment.sweep: required for the sweep command")
    axes = []
    for name, axis in exp["sweep"]["axes"].items():
        if name == "threshold":
            vals = axis["values"]
        else:
            vals = [quantity({"value": v, "unit": axis["unit"]}, f"experiment.sweep.axes.{name}") for v in axis["values"]]
        axes.append((name, vals))
    res = parameter_sweep(cfg.model(), axes, exp["threshold"], exp["horizon_periods"], cfg.integrator(), jobs)
    names = [n for n, _ in axes]
    rows = []
    shape = res.shape
    for flat, point in enumerate(res.grid):
        idx = np.unravel_index(flat, shape)
        coords = [exp["sweep"]["axes"][n]["values"][i] for n, i in zip(names, idx)]
        rows.append(coords + [
            point["p_direct"], np.nan if point["p_reverse"] is None else point["p_reverse"],
            point["irreversibility"], np.nan if point["t2"] is None else point["t2"],
        ])
    write_csv(out / cfg.output["table_csv"], ",".join(names + ["p_direct", "p_reverse", "irreversibility", "t2"]), np.array(rows))
    results = res.to_dict()
    best = res.at(*res.best_index)
    write_summary(out / cfg.output["summary_json"], cfg, results)
    return f"p_direct={_fmt(best['p_direct'])} p_reverse={_fmt(best['p_reverse'])} t2={_fmt(best['t2'])} (best point)"


def _mutate(cfg: RunConfig, out: Path, jobs: int) -> str:
    exp = cfg.experiment
    res = mutation_experiment(cfg.model(), exp["perturbation"], cfg.integrator(), exp["threshold"], exp["horizon_periods"])
    write_summary(out / cfg.output["summary_json"], cfg, res._asdict())
    return (
        f"p_direct={_fmt(res.p_direct_baseline)} p_direct_perturbed={_fmt(res.p_direct_perturbed)} "
        f"p_reverse={_fmt(res.p_reverse_baseline)} p_reverse_no_vibron2={_fmt(res.p_reverse_no_vibron2)}"
    )


HANDLERS = {
    "simulate": _simulate,
    "lz-validate": _lz_validate,
    "crossing": _crossing,
    "ratchet": _ratchet,
    "sweep": _sweep,
    "mutate": _mutate,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vibron-ratchet", description="Vibron-driven feedback ratchet simulator.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", required=True, help="YAML config or a previous summary JSON")
        s.add_argument("--out-dir", default=".", help="output directory (default: current)")
        s.add_argument("--jobs", type=int, default=None, help="worker processes for sweeps (default: all cores)")
    return p


def run(command: str, cfg: RunConfig, out_dir: Path, jobs: Optional[int] = None) -> str:
    """Execute one subcommand and return the headline line."""
    out_dir.mkdir(parents=True, exist_ok=True)
    return HANDLERS[command](cfg, out_dir, jobs or default_jobs())


def main(argv: Optional[list] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.jobs is not None and args.jobs < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        line = run(args.command, cfg, Path(args.out_dir), args.jobs)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IntegrationError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    print(line)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
