"""Integration of the population-feedback Schrodinger equation.

``d psi/dt = -i H(psi, t) psi`` with

    H = [[x1(t) * rho11,  J           ],
         [J,              x2(t) * rho22]]

where ``x1``, ``x2`` are the diagonal drives supplied by the model and
``rho_nn = |<n|psi>|^2``. The instantaneous generator is Hermitian, so the
norm is conserved by the exact flow; drift is monitored, never corrected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .model import StateVector


class IntegrationError(RuntimeError):
    """The adaptive stepper failed (typically step-size underflow)."""

    def __init__(self, message: str, t_fail: float):
        super().__init__(f"{message} (at t = {t_fail:.6f} fs)")
        self.t_fail = t_fail


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-11
    abs_tol: float = 1e-11
    # None: one two-hundredth of the shortest vibron period
    max_step: Optional[float] = None
    record_stride: float = 0.5
    method: str = "DOP853"

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_step is not None and self.max_step <= 0:
            raise ValueError("max_step must be positive")
        if self.record_stride <= 0:
            raise ValueError("record_stride must be positive")

    def resolve_max_step(self, model) -> float:
        hint = model.max_step_hint() if hasattr(model, "max_step_hint") else None
        if self.max_step is not None:
            return self.max_step if hint is None else min(self.max_step, hint)
        return hint if hint is not None else np.inf


@dataclass(frozen=True)
class GeneratorSample:
    diag1: float
    diag2: float
    off_diag: float

    @property
    def adiabatic_gap(self) -> float:
        """Separation of the instantaneous eigenvalues, ``E2 - E1``."""
        return math.hypot(self.diag1 - self.diag2, 2.0 * self.off_diag)

    def matrix(self) -> np.ndarray:
        return np.array([[self.diag1, self.off_diag], [self.off_diag, self.diag2]])


def generator_at(model, state: StateVector, t: float) -> GeneratorSample:
    x1, x2 = model.diagonal_drives(t)
    if model.feedback_enabled:
        x1 *= state.rho11
        x2 *= state.rho22
    return GeneratorSample(x1, x2, model.coupling_J)


def _rhs(model) -> Callable:
    drives = model.drive_function()
    J = model.coupling_J
    feedback = model.feedback_enabled

    def f(t, y):
        c1, c2 = y[0], y[1]
        x1, x2 = drives(t)
        if feedback:
            x1 *= c1.real * c1.real + c1.imag * c1.imag
            x2 *= c2.real * c2.real + c2.imag * c2.imag
        return np.array([-1j * (x1 * c1 + J * c2), -1j * (J * c1 + x2 * c2)])

    return f


@dataclass(frozen=True)
class Trajectory:
    """Recorded samples of one evolution.

    ``amplitudes`` has shape (n, 2); ``interpolant`` (when present) evaluates
    the dense output of the integrator at any time inside the run.
    """

    times: np.ndarray
    amplitudes: np.ndarray
    diag1: np.ndarray
    diag2: np.ndarray
    coupling: float
    record_stride: float
    interpolant: Optional[Callable[[float], np.ndarray]] = field(
        default=None, repr=False, compare=False
    )

    def __len__(self) -> int:
        return len(self.times)

    @property
    def rho11(self) -> np.ndarray:
        return np.abs(self.amplitudes[:, 0]) ** 2

    @property
    def rho22(self) -> np.ndarray:
        return np.abs(self.amplitudes[:, 1]) ** 2

    @property
    def norm_errors(self) -> np.ndarray:
        return np.abs(self.rho11 + self.rho22 - 1.0)

    @property
    def max_norm_error(self) -> float:
        return float(self.norm_errors.max())

    @property
    def gap(self) -> np.ndarray:
        return np.hypot(self.diag1 - self.diag2, 2.0 * self.coupling)

    @property
    def states(self) -> list[StateVector]:
        return [StateVector.from_array(a) for a in self.amplitudes]

    @property
    def generators(self) -> list[GeneratorSample]:
        return [GeneratorSample(float(a), float(b), self.coupling) for a, b in zip(self.diag1, self.diag2)]

    @property
    def final_state(self) -> StateVector:
        return StateVector.from_array(self.amplitudes[-1])

    @property
    def t_start(self) -> float:
        return float(self.times[0])

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    def state_at(self, t: float) -> StateVector:
        if self.interpolant is None:
            raise ValueError("trajectory has no dense output")
        return StateVector.from_array(self.interpolant(t))

    def window(self, t_from: float, t_to: float) -> np.ndarray:
        """Boolean mask of samples in ``[t_from, t_to]``."""
        return (self.times >= t_from) & (self.times <= t_to)

    def concatenate(self, other: "Trajectory") -> "Trajectory":
        """Append ``other``, dropping its first sample if it repeats our last time."""
        start = 1 if other.times[0] <= self.times[-1] else 0
        pieces = [(self.times[-1], self.interpolant), (np.inf, other.interpolant)]

        def dense(t):
            for t_hi, fn in pieces:
                if t <= t_hi:
                    return fn(t)
            return pieces[-1][1](t)

        return Trajectory(
            np.concatenate([self.times, other.times[start:]]),
            np.concatenate([self.amplitudes, other.amplitudes[start:]]),
            np.concatenate([self.diag1, other.diag1[start:]]),
            np.concatenate([self.diag2, other.diag2[start:]]),
            self.coupling,
            self.record_stride,
            dense if self.interpolant and other.interpolant else None,
        )


def _record_grid(t_start: float, t_end: float, stride: float, origin: float) -> np.ndarray:
    k0 = math.ceil((t_start - origin) / stride - 1e-9)
    k1 = math.floor((t_end - origin) / stride + 1e-9)
    grid = origin + stride * np.arange(k0, k1 + 1)
    eps = 1e-9 * stride
    grid = grid[(grid > t_start + eps) & (grid < t_end - eps)]
    return np.concatenate([[t_start], grid, [t_end]])


def _diagonals(model, times: np.ndarray, amps: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    x = np.array([model.diagonal_drives(float(t)) for t in times]).reshape(-1, 2)
    d1, d2 = x[:, 0].copy(), x[:, 1].copy()
    if model.feedback_enabled:
        d1 *= np.abs(amps[:, 0]) ** 2
        d2 *= np.abs(amps[:, 1]) ** 2
    return d1, d2


def evolve(
    model,
    initial: StateVector,
    t_start: float,
    t_end: float,
    cfg: Optional[IntegratorConfig] = None,
    *,
    stop_threshold: Optional[float] = None,
    grid_origin: Optional[float] = None,
) -> Trajectory:
    """Integrate from ``t_start`` to ``t_end`` with an adaptive RK pair.

    The run is split at the model's switch-on times so no step straddles a
    derivative kink. With ``stop_threshold`` the run terminates at the first
    time ``rho22`` rises through the threshold, which becomes the last sample.
    Samples are taken every ``record_stride`` on a grid anchored at
    ``grid_origin`` (default ``t_start``), plus both end points.
    """
    cfg = cfg or IntegratorConfig()
    if not t_end > t_start:
        raise ValueError("t_end must exceed t_start")
    if not initial.is_normalized(1e-6):
        raise ValueError(f"initial state is not normalized (norm^2 = {initial.norm_sq})")
    origin = t_start if grid_origin is None else grid_origin
    max_step = cfg.resolve_max_step(model)
    f = _rhs(model)

    cuts = [t for t in getattr(model, "breakpoints", lambda: [])() if t_start < t < t_end]
    edges = [t_start, *cuts, t_end]

    events = None
    if stop_threshold is not None:
        if initial.rho22 > stop_threshold:
            t_end = t_start
            edges = [t_start]

        def crossed(t, y):
            return abs(y[1]) ** 2 - stop_threshold

        crossed.terminal = True
        crossed.direction = 1
        events = crossed

    y = initial.as_array()
    segments = []
    stopped_at = None
    for a, b in zip(edges[:-1], edges[1:]):
        sol = solve_ivp(
            f, (a, b), y, method=cfg.method, rtol=cfg.rel_tol, atol=cfg.abs_tol,
            max_step=max_step, dense_output=True, events=events,
        )
        if sol.status == -1:
            raise IntegrationError(sol.message, float(sol.t[-1]))
        segments.append((a, float(sol.t[-1]), sol.sol))
        y = sol.y[:, -1]
        if sol.status == 1:
            stopped_at = float(sol.t_events[0][0])
            y = sol.y_events[0][0]
            segments[-1] = (a, stopped_at, sol.sol)
            break

    if stopped_at is not None:
        t_end = stopped_at
    if not segments:
        # threshold already exceeded at t_start
        amps = initial.as_array()[None, :]
        times = np.array([t_start])
        d1, d2 = _diagonals(model, times, amps)
        return Trajectory(times, amps, d1, d2, model.coupling_J, cfg.record_stride, lambda t: initial.as_array())

    def dense(t: float) -> np.ndarray:
        for a, b, fn in segments:
            if t <= b:
                return fn(t)
        return segments[-1][2](t)

    times = _record_grid(t_start, t_end, cfg.record_stride, origin) if t_end > t_start else np.array([t_start])
    amps = np.empty((len(times), 2), dtype=complex)
    seg = 0
    for i, t in enumerate(times):
        while seg < len(segments) - 1 and t > segments[seg][1]:
            seg += 1
        amps[i] = segments[seg][2](t)
    amps[0] = initial.as_array()
    amps[-1] = y
    d1, d2 = _diagonals(model, times, amps)
    return Trajectory(times, amps, d1, d2, model.coupling_J, cfg.record_stride, dense)


def detect_markov_moment(traj: Trajectory, threshold: float) -> Optional[float]:
    """First time ``rho22`` exceeds ``threshold``, or ``None``.

    The bracketing pair of samples is refined by bisection on the dense
    output (linear interpolation if the trajectory has none).
    """
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie in (0, 1)")
    above = np.nonzero(traj.rho22 > threshold)[0]
    if above.size == 0:
        return None
    i = int(above[0])
    if i == 0:
        return float(traj.times[0])
    ta, tb = float(traj.times[i - 1]), float(traj.times[i])
    if traj.interpolant is None:
        ra, rb = traj.rho22[i - 1], traj.rho22[i]
        return ta + (threshold - ra) / (rb - ra) * (tb - ta)

    def excess(t):
        return abs(traj.interpolant(t)[1]) ** 2 - threshold

    if excess(ta) > 0:
        return ta
    return brentq(excess, ta, tb, xtol=traj.record_stride * 1e-9, rtol=4 * np.finfo(float).eps)


def run_two_stage(
    model,
    threshold: float,
    horizon: float,
    cfg: Optional[IntegratorConfig] = None,
    *,
    initial: Optional[StateVector] = None,
    t_start: Optional[float] = None,
) -> tuple[Trajectory, Optional[float]]:
    """Evolve with vibron 1 only until ``rho22`` exceeds ``threshold``, then
    switch vibron 2 on at that moment and continue to ``t_start + horizon``.

    Returns the stitched trajectory and the detected switch time (``None`` if
    the threshold was never crossed, in which case vibron 2 stays off).
    Without a second vibron the moment is still detected and reported.
    """
    cfg = cfg or IntegratorConfig()
    t0 = model.t1 if t_start is None else t_start
    t_end = t0 + horizon
    psi0 = initial or StateVector.basis(1)
    stage_model = model.with_vibron2_on(None)

    if model.vibron2 is None or threshold >= 1.0:
        traj = evolve(stage_model, psi0, t0, t_end, cfg)
        t2 = detect_markov_moment(traj, threshold) if threshold < 1.0 else None
        return traj, t2

    first = evolve(stage_model, psi0, t0, t_end, cfg, stop_threshold=threshold)
    if first.t_end >= t_end:
        return first, None
    t2 = first.t_end
    second = evolve(
        model.with_vibron2_on(t2), first.final_state, t2, t_end, cfg, grid_origin=t0
    )
    return first.concatenate(second), t2
