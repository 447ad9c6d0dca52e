"""Composite experiments built on the dynamics, crossing and LZ modules.

Readout convention: probabilities are sampled at
``start + horizon_periods * 2 pi / omega1``; the mean over the last vibron-1
period is reported alongside. The reverse move starts from ``|2>`` at the
first vibron-1 maximum at or after ``t2`` (``t_r``), so the first vibron
keeps the phase it had in the direct run.
"""

from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from importlib import resources
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .config import DEFAULT_GAMMAS, RunConfig, parse_text, validate
from .crossing import CrossingReport, direct_crossing, reverse_crossing
from .dynamics import IntegratorConfig, Trajectory, evolve, run_two_stage
from .landau_zener import LinearSweep, lz_transition_probability, passage_estimate
from .model import RatchetModel, StateVector

CLOSE_TO_ONE = 0.9
CLOSE_TO_ZERO = 0.05
REFERENCE_FIXTURE = "reference.yaml"
NONPARALLEL_FIXTURE = "nonparallel.yaml"


@dataclass(frozen=True)
class TransitionReport:
    p_direct: Optional[float]
    p_reverse: Optional[float]
    t2_detected: Optional[float]
    direct_crossings: Optional[CrossingReport]
    reverse_crossings: Optional[CrossingReport]
    per_passage_estimates: tuple
    adiabatic_gap_at_t1: float
    degenerate_passages: tuple = ()
    p_direct_mean: Optional[float] = None
    p_reverse_mean: Optional[float] = None
    reverse_start: Optional[float] = None
    max_norm_error: float = 0.0
    direct_trajectory: Optional[Trajectory] = field(default=None, repr=False, compare=False)
    reverse_trajectory: Optional[Trajectory] = field(default=None, repr=False, compare=False)

    @property
    def irreversibility(self) -> float:
        return (self.p_direct or 0.0) - (self.p_reverse or 0.0)

    def to_dict(self) -> dict:
        return {
            "p_direct": self.p_direct,
            "p_reverse": self.p_reverse,
            "p_direct_mean": self.p_direct_mean,
            "p_reverse_mean": self.p_reverse_mean,
            "irreversibility": self.irreversibility,
            "t2_detected": self.t2_detected,
            "reverse_start": self.reverse_start,
            "adiabatic_gap_at_t1": self.adiabatic_gap_at_t1,
            "per_passage_estimates": list(self.per_passage_estimates),
            "degenerate_passages": list(self.degenerate_passages),
            "max_norm_error": self.max_norm_error,
            "direct_crossings": self.direct_crossings.to_dict() if self.direct_crossings else None,
            "reverse_crossings": self.reverse_crossings.to_dict() if self.reverse_crossings else None,
        }

    def summary(self) -> dict:
        return {
            "p_direct": self.p_direct,
            "p_reverse": self.p_reverse,
            "irreversibility": self.irreversibility,
            "t2": self.t2_detected,
        }


def initial_gap(model: RatchetModel) -> float:
    """Adiabatic gap at t1 for the state ``|1>``: feedback pins diag2 at zero."""
    return math.hypot(model.direct_drive(model.t1), 2.0 * model.coupling_J)


def reverse_start_time(model: RatchetModel, t2: Optional[float]) -> float:
    """First vibron-1 maximum at or after ``t2`` (``t1`` when ``t2`` is absent)."""
    t1, period = model.t1, model.period1
    if t2 is None or t2 <= t1:
        return t1
    k = math.ceil((t2 - t1) / period - 1e-12)
    return t1 + k * period


def _tail_mean(traj: Trajectory, values: np.ndarray, span: float) -> float:
    mask = traj.times >= traj.t_end - span
    t, v = traj.times[mask], values[mask]
    if len(t) < 2:
        return float(values[-1])
    return float(np.trapezoid(v, t) / (t[-1] - t[0]))


def measure_direct(
    model: RatchetModel,
    threshold: float = 0.5,
    horizon_periods: int = 3,
    cfg: Optional[IntegratorConfig] = None,
) -> TransitionReport:
    """Direct move from ``|1>`` at t1 with vibron 2 switched on at the Markov moment."""
    horizon = horizon_periods * model.period1
    traj, t2 = run_two_stage(model, threshold, horizon, cfg)
    window = (model.t1, model.t1 + horizon)
    dcr = direct_crossing(model, window)
    est = [passage_estimate(model.coupling_J, s) for s in dcr.slopes_at_crossings]
    return TransitionReport(
        p_direct=float(traj.rho22[-1]),
        p_reverse=None,
        t2_detected=t2,
        direct_crossings=dcr,
        reverse_crossings=None,
        per_passage_estimates=tuple(p for p, _ in est),
        adiabatic_gap_at_t1=initial_gap(model),
        degenerate_passages=tuple(d for _, d in est),
        p_direct_mean=_tail_mean(traj, traj.rho22, model.period1),
        max_norm_error=traj.max_norm_error,
        direct_trajectory=traj,
    )


def measure_reverse(
    model: RatchetModel,
    t2: Optional[float],
    horizon_periods: int = 3,
    cfg: Optional[IntegratorConfig] = None,
    *,
    start: Optional[float] = None,
) -> TransitionReport:
    """Reverse move from ``|2>`` with vibron 2 (if any) switched on at ``t2``."""
    active = model.with_vibron2_on(t2)
    t_r = reverse_start_time(model, t2) if start is None else start
    horizon = horizon_periods * model.period1
    traj = evolve(active, StateVector.basis(2), t_r, t_r + horizon, cfg)
    rcr = reverse_crossing(model, t2 if model.vibron2 is not None else None, default_reverse_window(model, t_r))
    return TransitionReport(
        p_direct=None,
        p_reverse=float(traj.rho11[-1]),
        t2_detected=t2,
        direct_crossings=None,
        reverse_crossings=rcr,
        per_passage_estimates=(),
        adiabatic_gap_at_t1=initial_gap(model),
        p_reverse_mean=_tail_mean(traj, traj.rho11, model.period1),
        reverse_start=t_r,
        max_norm_error=traj.max_norm_error,
        reverse_trajectory=traj,
    )


def default_reverse_window(model: RatchetModel, t_r: float) -> tuple[float, float]:
    """Five periods of the slower vibron from the reverse start."""
    longest = model.period1
    if model.vibron2 is not None and model.vibron2.omega > 0:
        longest = max(longest, model.vibron2.period)
    return (t_r, t_r + 5.0 * longest)


def ratchet_experiment(
    model: RatchetModel,
    threshold: float = 0.5,
    horizon_periods: int = 3,
    cfg: Optional[IntegratorConfig] = None,
    *,
    reverse_t2: Optional[float] = None,
) -> TransitionReport:
    """Direct run, then the reverse run seeded with the detected ``t2``.

    ``reverse_t2`` overrides the switch time used by the reverse run (the
    start time still follows from it).
    """
    d = measure_direct(model, threshold, horizon_periods, cfg)
    t2 = d.t2_detected if reverse_t2 is None else reverse_t2
    r = measure_reverse(model, t2, horizon_periods, cfg)
    return replace(
        d,
        p_reverse=r.p_reverse,
        p_reverse_mean=r.p_reverse_mean,
        reverse_crossings=r.reverse_crossings,
        reverse_start=r.reverse_start,
        max_norm_error=max(d.max_norm_error, r.max_norm_error),
        reverse_trajectory=r.reverse_trajectory,
    )


class LzValidationRow(NamedTuple):
    gamma: float
    p_numeric: float
    p_analytic: float
    rel_error: float
    max_norm_error: float


def lz_half_window(gamma: float, residual: float = 0.004) -> float:
    """Half-width ``T`` of the validation sweep (``|u - v| = 1``).

    Truncating the sweep at ``+-T`` leaves an oscillating residual in the
    final population of relative size about ``2 J / T * sqrt((1 - P) / P)``;
    ``T`` is chosen to bring that below ``residual``, and never below the
    ``50 J`` floor.
    """
    sweep = LinearSweep.for_gamma(gamma)
    J = sweep.coupling_J
    p = lz_transition_probability(sweep.params)
    tail = 2.0 * J * math.sqrt((1.0 - p) / p) / residual
    return sweep.half_window(50.0, minimum=tail)


def lz_sweep_run(gamma: float, cfg: Optional[IntegratorConfig] = None, residual: float = 0.004) -> Trajectory:
    """Linear sweep with ``|u - v| = 1`` over ``[-T, T]`` from ``|1>``."""
    sweep = LinearSweep.for_gamma(gamma)
    T = lz_half_window(gamma, residual)
    cfg = cfg or IntegratorConfig()
    cfg = replace(cfg, record_stride=max(cfg.record_stride, 2 * T / 1000))
    return evolve(sweep, StateVector.basis(1), -T, T, cfg)


def lz_validation_sweep(
    gamma_values: Sequence[float] = DEFAULT_GAMMAS,
    cfg: Optional[IntegratorConfig] = None,
    residual: float = 0.004,
) -> list[LzValidationRow]:
    rows = []
    for g in gamma_values:
        if not 0 < g <= 3:
            raise ValueError(f"gamma must lie in (0, 3], got {g}")
        traj = lz_sweep_run(g, cfg, residual)
        p_num = float(traj.rho22[-1])
        p_an = lz_transition_probability(LinearSweep.for_gamma(g).params)
        rows.append(LzValidationRow(float(g), p_num, p_an, abs(p_num - p_an) / p_an, traj.max_norm_error))
    return rows


@dataclass(frozen=True)
class SweepResult:
    axes: tuple  # ((name, values), ...)
    grid: tuple  # row-major over the axes, one summary dict per point
    best_index: Optional[tuple] = None

    @property
    def shape(self) -> tuple:
        return tuple(len(v) for _, v in self.axes)

    def __post_init__(self):
        if len(self.grid) != int(np.prod(self.shape)):
            raise ValueError("grid size does not match the axes")

    def at(self, *index) -> dict:
        return self.grid[int(np.ravel_multi_index(index, self.shape))]

    def array(self, key: str) -> np.ndarray:
        return np.array([np.nan if g[key] is None else g[key] for g in self.grid], dtype=float).reshape(self.shape)

    def to_dict(self) -> dict:
        return {
            "axes": {name: list(vals) for name, vals in self.axes},
            "axis_order": [name for name, _ in self.axes],
            "grid": list(self.grid),
            "best_index": list(self.best_index) if self.best_index is not None else None,
        }


def apply_axis(model: RatchetModel, name: str, value: float) -> RatchetModel:
    """Copy of ``model`` with one sweep axis set (value in rad/fs)."""
    if name == "coupling_J":
        return replace(model, coupling_J=value)
    if name == "omega1":
        return replace(model, vibron1=replace(model.vibron1, omega=value))
    if name == "omega2":
        if model.vibron2 is None:
            raise ValueError("model has no second vibron")
        return replace(model, vibron2=replace(model.vibron2, omega=value))
    if name in ("h_v1", "h_v2"):
        vib = model.vibron1 if name == "h_v1" else model.vibron2
        if vib is None:
            raise ValueError("model has no second vibron")
        h = np.asarray(model.h1 if name == "h_v1" else model.h2, dtype=float)
        sign = 1.0 if name == "h_v1" else -1.0  # h = -h2
        d = np.asarray(vib.direction, dtype=float)
        hh = float(h @ h)
        # shift only the component along h, keep the orthogonal part
        d = d + (sign * value - float(h @ d)) * h / hh
        vib = replace(vib, direction=tuple(d))
        return replace(model, vibron1=vib) if name == "h_v1" else replace(model, vibron2=vib)
    raise ValueError(f"unknown sweep axis {name!r}")


def _sweep_point(args) -> dict:
    model, threshold, horizon_periods, cfg, first_slope = args
    rep = ratchet_experiment(model, threshold, horizon_periods, cfg)
    out = rep.summary()
    dcr = rep.direct_crossings
    out["margin"] = dcr.margin
    out["first_slope"] = abs(dcr.slopes_at_crossings[0]) if dcr.solvable else None
    out["first_estimate"] = rep.per_passage_estimates[0] if rep.per_passage_estimates else None
    out["reverse_solvable"] = rep.reverse_crossings.solvable
    out["max_norm_error"] = rep.max_norm_error
    return out


def default_jobs() -> int:
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)


def parameter_sweep(
    template: RatchetModel,
    axes: Sequence[tuple[str, Sequence[float]]],
    threshold: float = 0.5,
    horizon_periods: int = 3,
    cfg: Optional[IntegratorConfig] = None,
    jobs: int = 1,
) -> SweepResult:
    """Ratchet experiment on the Cartesian grid of ``axes`` (values in rad/fs;
    the ``threshold`` axis is dimensionless). Results are stored in row-major
    grid order whatever the completion order."""
    axes = tuple((name, tuple(float(v) for v in vals)) for name, vals in axes)
    tasks = []
    for combo in itertools.product(*(vals for _, vals in axes)):
        m, thr = template, threshold
        for (name, _), val in zip(axes, combo):
            if name == "threshold":
                thr = val
            else:
                m = apply_axis(m, name, val)
        tasks.append((m, thr, horizon_periods, cfg, True))
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            grid = list(pool.map(_sweep_point, tasks))
    else:
        grid = [_sweep_point(t) for t in tasks]
    best = int(np.argmax([g["irreversibility"] for g in grid]))
    shape = tuple(len(v) for _, v in axes)
    return SweepResult(axes, tuple(grid), tuple(int(i) for i in np.unravel_index(best, shape)))


def optimal_regime_search(
    model_template: RatchetModel,
    amplitude_grid: Sequence[float],
    cfg: Optional[IntegratorConfig] = None,
    threshold: float = 0.5,
    horizon_periods: int = 3,
    jobs: int = 1,
) -> SweepResult:
    """Scan ``h . v1`` (rad/fs) and mark the amplitude of largest irreversibility."""
    return parameter_sweep(model_template, [("h_v1", amplitude_grid)], threshold, horizon_periods, cfg, jobs)


class EnergyMatch(NamedTuple):
    gap_at_t1: float
    vibron_energy: float
    relative_mismatch: float


def energy_matching_check(model: RatchetModel) -> EnergyMatch:
    gap = initial_gap(model)
    w = model.vibron1.omega
    return EnergyMatch(gap, w, abs(gap - w) / gap)


class MutationResult(NamedTuple):
    p_direct_baseline: float
    p_direct_perturbed: float
    p_direct_no_vibron2: float
    p_reverse_no_vibron2: float
    p_reverse_baseline: float
    margin_perturbed: float


def mutation_experiment(
    model: RatchetModel,
    perturbation: float,
    cfg: Optional[IntegratorConfig] = None,
    threshold: float = 0.5,
    horizon_periods: int = 3,
) -> MutationResult:
    """Shrink ``h . v1`` by ``perturbation`` and, separately, drop vibron 2.

    The vibron-2-free reverse run starts at the same time as the baseline
    reverse run so the two are compared over the same horizon.
    """
    if not 0 <= perturbation < 1:
        raise ValueError("perturbation must lie in [0, 1)")
    base = ratchet_experiment(model, threshold, horizon_periods, cfg)
    perturbed = model.scaled_amplitude(1.0 - perturbation) if perturbation else model
    p_pert = measure_direct(perturbed, threshold, horizon_periods, cfg) if perturbation else base
    bare = model.without_vibron2()
    d0 = measure_direct(bare, threshold, horizon_periods, cfg)
    r0 = measure_reverse(bare, None, horizon_periods, cfg, start=base.reverse_start)
    return MutationResult(
        base.p_direct, p_pert.p_direct, d0.p_direct, r0.p_reverse, base.p_reverse,
        p_pert.direct_crossings.margin,
    )


def single_vibron_nonparallel(
    model: RatchetModel,
    cfg: Optional[IntegratorConfig] = None,
    threshold: float = 0.5,
    horizon_periods: int = 3,
) -> tuple[TransitionReport, bool]:
    """Single-vibron ratchet from non-parallel ``h1``, ``h2``.

    Returns the report and whether the configuration is the intended
    scenario: the ``h1`` crossing is reachable and the ``h2`` one is not.
    """
    if model.dim < 2:
        raise ValueError("non-parallel couplings need dimension >= 2")
    if model.vibron2 is not None:
        raise ValueError("expected a single-vibron model")
    rep = ratchet_experiment(model, threshold, horizon_periods, cfg)
    accepted = rep.direct_crossings.solvable and not rep.reverse_crossings.solvable
    return rep, accepted


def are_parallel(a, b, tol: float = 1e-12) -> bool:
    a, b = np.asarray(a, float), np.asarray(b, float)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return True
    return abs(abs(float(a @ b)) - na * nb) <= tol * na * nb


class PassageCheck(NamedTuple):
    p_numeric: float
    p_estimate: float
    rel_error: float
    crossing_time: float
    slope: float


def per_passage_check(model: RatchetModel, cfg: Optional[IntegratorConfig] = None) -> PassageCheck:
    """Population after the first direct crossing versus the collapsed estimate.

    ``rho22`` is read at the first vibron-1 turning point, which lies between
    the first and second crossings of each period.
    """
    window = (model.t1, model.t1 + model.period1)
    dcr = direct_crossing(model, window)
    if not dcr.solvable:
        raise ValueError("direct crossing is not reachable")
    t_turn = model.t1 + model.period1 / 2.0
    traj = evolve(model.without_vibron2(), StateVector.basis(1), model.t1, t_turn, cfg)
    p_num = float(traj.rho22[-1])
    est, _ = passage_estimate(model.coupling_J, dcr.slopes_at_crossings[0])
    return PassageCheck(p_num, est, abs(p_num - est) / est, dcr.crossing_times[0], dcr.slopes_at_crossings[0])


def load_fixture(name: str = REFERENCE_FIXTURE) -> RunConfig:
    """Frozen configuration shipped in the package ``data`` directory."""
    text = resources.files("vibron_ratchet").joinpath("data", name).read_text()
    return validate(parse_text(text, name))


def load_reference() -> RunConfig:
    return load_fixture(REFERENCE_FIXTURE)


def reference_model() -> RatchetModel:
    return load_reference().model()


def reference_settings() -> dict:
    """Threshold, horizon and perturbation frozen with the reference fixture."""
    exp = load_reference().experiment
    return {k: exp[k] for k in ("threshold", "horizon_periods", "perturbation")}


def nonparallel_model() -> RatchetModel:
    return load_fixture(NONPARALLEL_FIXTURE).model()
