"""Fixed-step classical RK4 reference integrator.

Deliberately shares nothing with :mod:`vibron_ratchet.dynamics` beyond the
model parameters: drives are rebuilt from the raw vectors, the stepper is a
plain loop and the threshold moment is located by bisection on the length of
a single RK4 sub-step.
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np

from .model import RatchetModel


def _scalar_drives(model: RatchetModel, t2: Optional[float]):
    h1 = np.asarray(model.h1)
    h2 = np.asarray(model.h2)
    v1 = model.vibron1
    a10, a11 = float(h1 @ v1.offset), float(h1 @ v1.direction)
    a20, a21 = float(h2 @ v1.offset), float(h2 @ v1.direction)
    w1, t1 = v1.omega, v1.t_on
    b2 = w2 = 0.0
    if model.vibron2 is not None:
        b2 = float(h2 @ model.vibron2.direction)
        w2 = model.vibron2.omega
        if t2 is None:
            t2 = model.vibron2.t_on
    c20 = float(h2 @ model.vibron2.offset) if model.vibron2 is not None else 0.0

    def drives(t):
        s = math.cos(w1 * (t - t1)) - 1.0 if t1 is not None and t >= t1 else 0.0
        x1 = a10 + a11 * s
        x2 = a20 + a21 * s + c20
        if t2 is not None and t >= t2:
            x2 += b2 * (math.cos(w2 * (t - t2)) - 1.0)
        return x1, x2

    return drives


def _step(drives, J, feedback, t, c1, c2, dt):
    def f(t, c1, c2):
        x1, x2 = drives(t)
        if feedback:
            x1 *= (c1 * c1.conjugate()).real
            x2 *= (c2 * c2.conjugate()).real
        return -1j * (x1 * c1 + J * c2), -1j * (J * c1 + x2 * c2)

    k1 = f(t, c1, c2)
    k2 = f(t + dt / 2, c1 + dt / 2 * k1[0], c2 + dt / 2 * k1[1])
    k3 = f(t + dt / 2, c1 + dt / 2 * k2[0], c2 + dt / 2 * k2[1])
    k4 = f(t + dt, c1 + dt * k3[0], c2 + dt * k3[1])
    return (
        c1 + dt / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
        c2 + dt / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]),
    )


def rk4_reference(
    model: RatchetModel,
    psi0,
    t_start: float,
    t_end: float,
    dt: float = 1e-3,
    threshold: Optional[float] = None,
) -> tuple[np.ndarray, Optional[float]]:
    """Final amplitudes after fixed-step RK4 from ``t_start`` to ``t_end``.

    With ``threshold`` and a second vibron whose ``t_on`` is unset, vibron 2
    is switched on when ``rho22`` first exceeds the threshold; the switch
    time is returned alongside the amplitudes.
    """
    c1, c2 = complex(psi0[0]), complex(psi0[1])
    J = model.coupling_J
    fb = model.feedback_enabled
    watch = threshold is not None and model.vibron2 is not None and model.vibron2.t_on is None
    t2 = None
    drives = _scalar_drives(model, None)
    # vibron-1 switch-on inside the window: land a step on it exactly
    stops = [t_end]
    if model.vibron1.t_on is not None and t_start < model.vibron1.t_on < t_end:
        stops.insert(0, model.vibron1.t_on)
    if model.vibron2 is not None and model.vibron2.t_on is not None and t_start < model.vibron2.t_on < t_end:
        stops.insert(-1, model.vibron2.t_on)
        stops.sort()
    t = t_start
    for stop in stops:
        while t < stop - 1e-12:
            h = min(dt, stop - t)
            n1, n2 = _step(drives, J, fb, t, c1, c2, h)
            if watch and t2 is None and abs(n2) ** 2 > threshold:
                lo, hi = 0.0, h
                for _ in range(60):
                    mid = 0.5 * (lo + hi)
                    m2 = _step(drives, J, fb, t, c1, c2, mid)[1]
                    if abs(m2) ** 2 > threshold:
                        hi = mid
                    else:
                        lo = mid
                c1, c2 = _step(drives, J, fb, t, c1, c2, hi)
                t = t + hi
                t2 = t
                drives = _scalar_drives(model, t2)
                continue
            c1, c2 = n1, n2
            t = t + h
    return np.array([c1, c2]), t2
