"""Avoided-crossing equations for the direct and reverse moves.

Direct move: roots of ``f(t) = h1 . q1(t)``. Reverse move: roots of
``g(t) = h . (q1(t) + q2(t))`` with ``h = -h2``. Both are evaluated with
bare projections (saturated populations), not with the feedback factors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .landau_zener import local_slope_at_crossing
from .model import RatchetModel

SAMPLES_PER_PERIOD = 400
TANGENCY_TOL = 1e-8


@dataclass(frozen=True)
class CrossingReport:
    solvable: bool
    crossing_times: tuple
    slopes_at_crossings: tuple
    margin: float
    window: tuple
    move: str = "direct"
    tangential: tuple = field(default=())

    def __len__(self) -> int:
        return len(self.crossing_times)

    def to_dict(self) -> dict:
        return {
            "move": self.move,
            "solvable": self.solvable,
            "window": list(self.window),
            "margin": self.margin,
            "crossing_times": list(self.crossing_times),
            "slopes_at_crossings": list(self.slopes_at_crossings),
            "tangential": list(self.tangential),
        }


def find_roots(
    fn: Callable[[float], float],
    window: tuple[float, float],
    period: float,
    scale: float,
    samples_per_period: int = SAMPLES_PER_PERIOD,
) -> tuple[list[float], list[bool]]:
    """Sign changes and tangential zeros of ``fn`` in ``window``.

    Brackets by uniform sampling at ``samples_per_period`` per ``period``,
    refines sign changes with Brent's method and local minima of ``|fn|``
    with a bounded scalar minimisation; a minimum counts as a tangential
    root when ``|fn| <= TANGENCY_TOL * scale`` there.
    """
    a, b = window
    n = max(int(math.ceil((b - a) / period * samples_per_period)), 8)
    ts = np.linspace(a, b, n + 1)
    vals = np.array([fn(t) for t in ts])
    roots: list[float] = []
    tangent: list[bool] = []
    xtol = max(1e-12 * max(abs(a), abs(b), period), 1e-15)

    for i in range(n + 1):
        if vals[i] == 0.0:
            # exact hit: tangential when the neighbours share a sign
            left = vals[i - 1] if i > 0 else -vals[i + 1]
            right = vals[i + 1] if i < n else -vals[i - 1]
            roots.append(float(ts[i]))
            tangent.append(bool(left * right > 0))
        elif i < n and vals[i] * vals[i + 1] < 0:
            roots.append(brentq(fn, ts[i], ts[i + 1], xtol=xtol, rtol=4 * np.finfo(float).eps))
            tangent.append(False)

    absv = np.abs(vals)
    for i in range(1, n):
        if absv[i] <= absv[i - 1] and absv[i] < absv[i + 1] and vals[i - 1] * vals[i + 1] > 0:
            res = minimize_scalar(
                lambda t: abs(fn(t)), bounds=(ts[i - 1], ts[i + 1]), method="bounded",
                options={"xatol": xtol},
            )
            if abs(fn(res.x)) <= TANGENCY_TOL * scale and not any(abs(res.x - r) < 2 * (ts[1] - ts[0]) for r in roots):
                roots.append(float(res.x))
                tangent.append(True)
    order = np.argsort(roots)
    return [roots[k] for k in order], [tangent[k] for k in order]


def default_window(model: RatchetModel, start: Optional[float] = None, periods: float = 5.0) -> tuple[float, float]:
    """``[start, start + periods * longest vibron period]``; start defaults to t1."""
    t0 = model.t1 if start is None else start
    longest = model.vibron1.period
    if model.vibron2 is not None and model.vibron2.omega > 0:
        longest = max(longest, model.vibron2.period)
    return (t0, t0 + periods * longest)


def _shortest_period(model: RatchetModel) -> float:
    p = model.vibron1.period
    if model.vibron2 is not None and model.vibron2.omega > 0:
        p = min(p, model.vibron2.period)
    return p


def direct_margin(model: RatchetModel) -> float:
    """``2 h1.v1 - h1.q0``: non-negative iff the direct crossing is reachable
    (for positive projections)."""
    p = model.h_projection("h1")
    return 2.0 * p["h_v1"] - p["h_q0"]


def direct_crossing(model: RatchetModel, window: Optional[tuple[float, float]] = None) -> CrossingReport:
    window = window or default_window(model)
    scale = abs(model.h_projection("h1")["h_q0"]) or 1.0
    roots, tangent = find_roots(model.direct_drive, window, _shortest_period(model), scale)
    slopes = tuple(local_slope_at_crossing(model, t, "direct") for t in roots)
    return CrossingReport(
        bool(roots), tuple(roots), slopes, direct_margin(model), tuple(window), "direct", tuple(tangent)
    )


def reverse_crossing(model: RatchetModel, t2: Optional[float], window: Optional[tuple[float, float]] = None) -> CrossingReport:
    """Roots of the reverse-move crossing function with vibron 2 switched on at ``t2``.

    ``margin`` is the minimum of ``h . (q1 + q2)`` over the window (positive
    means the reverse crossing is out of reach there).
    """
    m = model.with_vibron2_on(t2)
    window = window or default_window(m, start=t2 if t2 is not None else None)

    def g(t):
        return -m.reverse_drive(t)

    scale = abs(m.h_projection("h1")["h_q0"]) or 1.0
    roots, tangent = find_roots(g, window, _shortest_period(m), scale)
    slopes = tuple(local_slope_at_crossing(m, t, "reverse") for t in roots)
    ts = np.linspace(window[0], window[1], 20001)
    margin = float(min(g(t) for t in ts))
    if roots:
        margin = min(margin, 0.0)
    return CrossingReport(bool(roots), tuple(roots), slopes, margin, tuple(window), "reverse", tuple(tangent))


def solvability_margin_scan(model: RatchetModel, amplitude_range: Sequence[float]) -> list[tuple[float, bool, float]]:
    """Direct-move solvability over a list of ``h.v1`` values.

    Each amplitude is checked over one full vibron-1 period, which contains
    every value the crossing function takes.
    """
    p = model.h_projection("h1")
    if p["h_q0"] <= 0:
        raise ValueError("solvability scan needs a positive h.q0")
    base = p["h_v1"]
    out = []
    for amp in amplitude_range:
        m = model.scaled_amplitude(amp / base) if base != 0 else _with_amplitude(model, amp)
        win = (m.t1, m.t1 + m.vibron1.period)
        rep = direct_crossing(m, win)
        out.append((float(amp), rep.solvable, rep.margin))
    return out


def _with_amplitude(model: RatchetModel, amp: float) -> RatchetModel:
    h = np.asarray(model.h1)
    direction = amp * h / float(h @ h)
    return replace(model, vibron1=replace(model.vibron1, direction=tuple(direction)))


def solvability_boundary(model: RatchetModel, lo: float, hi: float, tol: float = 1e-9) -> float:
    """Bisection on the root-existence predicate of the direct crossing."""
    def solvable(amp):
        m = _with_amplitude(model, amp)
        return direct_crossing(m, (m.t1, m.t1 + m.vibron1.period)).solvable

    if solvable(lo) or not solvable(hi):
        raise ValueError("boundary is not bracketed by [lo, hi]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if solvable(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)
