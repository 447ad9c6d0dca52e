"""Analytic Landau-Zener probabilities and crossing linearisation."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .model import RatchetModel


class DegeneratePassage(ValueError):
    """Zero local slope at a crossing: the linearised formula is undefined."""


@dataclass(frozen=True)
class LzParams:
    coupling_J: float
    slope_u: float
    slope_v: float

    def __post_init__(self):
        if self.coupling_J < 0:
            raise ValueError("coupling_J must be >= 0")

    @property
    def gamma(self) -> float:
        du = abs(self.slope_u - self.slope_v)
        if du == 0:
            raise ValueError("equal slopes: gamma is undefined")
        return self.coupling_J**2 / du


def lz_transition_probability(p: LzParams) -> float:
    """Asymptotic diabatic transition probability ``1 - exp(-2 pi gamma)``."""
    return -math.expm1(-2.0 * math.pi * p.gamma)


def lz_collapsed_probability(coupling_J: float, slope_local: float) -> float:
    """Per-passage probability when only one diagonal moves.

    The other diagonal is pinned at zero by the feedback, so the slope of the
    moving diagonal replaces the slope difference.
    """
    if slope_local == 0:
        raise DegeneratePassage("zero slope at the crossing (adiabatic limit)")
    return lz_transition_probability(LzParams(coupling_J, slope_local, 0.0))


def passage_estimate(coupling_J: float, slope_local: float) -> tuple[float, bool]:
    """``(probability, degenerate)``; a zero slope is reported as probability 1."""
    try:
        return lz_collapsed_probability(coupling_J, slope_local), False
    except DegeneratePassage:
        return 1.0, True


def local_slope_at_crossing(model: RatchetModel, crossing_time: float, which_move: str = "direct") -> float:
    """Time derivative of the active diagonal drive at a crossing.

    Direct move: ``d/dt (h1 . q1)``. Reverse move: ``d/dt (h . (q1 + q2))``
    with ``h = -h2`` (so it equals ``h . (dq1/dt + dq2/dt)`` for symmetric
    couplings). Computed from the analytic derivative of the ansatz.
    """
    if which_move == "direct":
        return model.direct_drive_rate(crossing_time)
    if which_move == "reverse":
        return -model.reverse_drive_rate(crossing_time)
    raise ValueError(f"which_move must be 'direct' or 'reverse', got {which_move!r}")


@dataclass(frozen=True)
class LinearSweep:
    """Diagonal drives ``u t`` and ``v t`` with constant coupling, no feedback.

    Duck-types the model interface consumed by :func:`dynamics.evolve`.
    """

    coupling_J: float
    slope_u: float
    slope_v: float
    max_step: Optional[float] = None
    feedback_enabled: bool = False

    @classmethod
    def for_gamma(cls, gamma: float, sweep_rate: float = 1.0) -> "LinearSweep":
        """Antisymmetric sweep ``u = -v = rate/2`` with ``J^2 / |u - v| = gamma``."""
        if gamma <= 0:
            raise ValueError("gamma must be positive")
        return cls(math.sqrt(gamma * sweep_rate), sweep_rate / 2.0, -sweep_rate / 2.0)

    @property
    def params(self) -> LzParams:
        return LzParams(self.coupling_J, self.slope_u, self.slope_v)

    def half_window(self, factor: float = 50.0, minimum: float = 0.0) -> float:
        """Half-width ``T`` with ``|u - v| T >= factor * J``."""
        return max(factor * self.coupling_J / abs(self.slope_u - self.slope_v), minimum)

    def diagonal_drives(self, t: float) -> tuple[float, float]:
        return self.slope_u * t, self.slope_v * t

    def drive_function(self):
        u, v = self.slope_u, self.slope_v
        return lambda t: (u * t, v * t)

    def breakpoints(self) -> list[float]:
        return []

    def max_step_hint(self) -> Optional[float]:
        return self.max_step
