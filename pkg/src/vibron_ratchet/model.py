"""Domain types shared by the dynamics, crossing and experiment modules.

Internal units: hbar = 1, time in fs, energies and angular frequencies in
rad/fs. Wavenumbers (cm^-1) are converted at the configuration boundary with
:func:`wavenumber_to_omega`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable, Optional, Sequence

import numpy as np

SPEED_OF_LIGHT_CM_PER_FS = 2.99792458e-5


@dataclass(frozen=True)
class UnitSystem:
    wavenumber_to_angular: float = 2.0 * math.pi * SPEED_OF_LIGHT_CM_PER_FS

    def to_angular(self, nu: float) -> float:
        return nu * self.wavenumber_to_angular

    def to_wavenumber(self, omega: float) -> float:
        return omega / self.wavenumber_to_angular


UNITS = UnitSystem()


def wavenumber_to_omega(nu: float) -> float:
    """Convert a wavenumber in cm^-1 to an angular frequency in rad/fs."""
    if nu < 0:
        raise ValueError(f"wavenumber must be non-negative, got {nu}")
    return UNITS.to_angular(nu)


@dataclass(frozen=True)
class StateVector:
    """Electronic wave function in the diabatic basis {|1>, |2>}."""

    c1: complex
    c2: complex

    @classmethod
    def basis(cls, n: int) -> "StateVector":
        if n == 1:
            return cls(1.0 + 0j, 0j)
        if n == 2:
            return cls(0j, 1.0 + 0j)
        raise ValueError(f"basis index must be 1 or 2, got {n}")

    @classmethod
    def from_array(cls, psi: Sequence[complex]) -> "StateVector":
        return cls(complex(psi[0]), complex(psi[1]))

    def as_array(self) -> np.ndarray:
        return np.array([self.c1, self.c2], dtype=complex)

    @property
    def rho11(self) -> float:
        return abs(self.c1) ** 2

    @property
    def rho22(self) -> float:
        return abs(self.c2) ** 2

    @property
    def norm_sq(self) -> float:
        return self.rho11 + self.rho22

    def is_normalized(self, tol: float = 1e-8) -> bool:
        return abs(self.norm_sq - 1.0) <= tol


def _as_vector(x) -> tuple:
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if arr.ndim != 1:
        raise ValueError("vibron vectors must be one-dimensional")
    return tuple(float(v) for v in arr)


@dataclass(frozen=True)
class VibronAnsatz:
    """Switched cosine trajectory of a classical vibron.

    ``q(t) = offset`` before ``t_on`` and
    ``q(t) = offset + direction * (cos(omega (t - t_on)) - 1)`` afterwards.
    ``t_on = None`` means the vibron has not been switched on yet; it then
    stays at ``offset`` for all times.
    """

    offset: tuple
    direction: tuple
    omega: float
    t_on: Optional[float] = 0.0

    def __post_init__(self):
        object.__setattr__(self, "offset", _as_vector(self.offset))
        object.__setattr__(self, "direction", _as_vector(self.direction))
        if len(self.offset) != len(self.direction):
            raise ValueError("offset and direction must have the same dimension")
        if self.omega < 0:
            raise ValueError("omega must be non-negative")

    @property
    def dim(self) -> int:
        return len(self.offset)

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.omega

    def switched_on(self, t_on: Optional[float]) -> "VibronAnsatz":
        return replace(self, t_on=t_on)

    def value(self, t: float) -> np.ndarray:
        return vibron_value(self, t)

    def velocity(self, t: float) -> np.ndarray:
        return vibron_velocity(self, t)

    def projected(self, h) -> "ScalarVibron":
        """Scalar trajectory ``h . q(t)``."""
        h = np.asarray(h, dtype=float)
        return ScalarVibron(
            float(np.dot(h, self.offset)),
            float(np.dot(h, self.direction)),
            self.omega,
            self.t_on,
        )


@dataclass(frozen=True)
class ScalarVibron:
    """Projection of a :class:`VibronAnsatz` onto a coupling vector."""

    offset: float
    direction: float
    omega: float
    t_on: Optional[float]

    def value(self, t: float) -> float:
        if self.t_on is None or t < self.t_on:
            return self.offset
        return self.offset + self.direction * (math.cos(self.omega * (t - self.t_on)) - 1.0)

    def velocity(self, t: float) -> float:
        if self.t_on is None or t < self.t_on:
            return 0.0
        return -self.direction * self.omega * math.sin(self.omega * (t - self.t_on))


def vibron_value(v: VibronAnsatz, t: float) -> np.ndarray:
    offset = np.asarray(v.offset)
    # theta(0) = 1, but the ansatz is continuous across t_on anyway
    if v.t_on is None or t < v.t_on:
        return offset.copy()
    return offset + np.asarray(v.direction) * (math.cos(v.omega * (t - v.t_on)) - 1.0)


def vibron_velocity(v: VibronAnsatz, t: float) -> np.ndarray:
    if v.t_on is None or t < v.t_on:
        return np.zeros(v.dim)
    return -np.asarray(v.direction) * v.omega * math.sin(v.omega * (t - v.t_on))


@dataclass(frozen=True)
class RatchetModel:
    """Two-level feedback model driven by one or two vibrons.

    The diagonal generator entries are ``h1 . q1(t) * rho11`` and
    ``h2 . (q1(t) + q2(t)) * rho22``; with ``feedback_enabled=False`` the
    population factors are dropped. ``vibron2`` may be absent (single-vibron
    variant) or present with ``t_on=None`` (switched on later by the
    two-stage run).
    """

    h1: tuple
    h2: tuple
    coupling_J: float
    vibron1: VibronAnsatz
    vibron2: Optional[VibronAnsatz] = None
    feedback_enabled: bool = True
    label: str = field(default="", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "h1", _as_vector(self.h1))
        object.__setattr__(self, "h2", _as_vector(self.h2))
        if self.coupling_J < 0:
            raise ValueError(f"coupling_J must be >= 0, got {self.coupling_J}")
        dims = {len(self.h1), len(self.h2), self.vibron1.dim}
        if self.vibron2 is not None:
            dims.add(self.vibron2.dim)
        if len(dims) != 1:
            raise ValueError(f"all vectors must share one dimension, got {sorted(dims)}")

    @classmethod
    def symmetric(cls, h, coupling_J, vibron1, vibron2=None, feedback_enabled=True):
        h = np.asarray(h, dtype=float)
        return cls(tuple(h), tuple(-h), coupling_J, vibron1, vibron2, feedback_enabled)

    @classmethod
    def from_projections(
        cls,
        h_q0: float,
        h_v1: float,
        omega1: float,
        coupling_J: float,
        h_v2: Optional[float] = None,
        omega2: Optional[float] = None,
        t1: float = 0.0,
        dim: int = 2,
        feedback_enabled: bool = True,
    ) -> "RatchetModel":
        """Symmetric model parameterised by the scalar products with ``h``.

        Uses ``h = e_1`` so that each projection is the first component of
        the corresponding vibron vector.
        """
        if dim < 1:
            raise ValueError("dim must be >= 1")
        e = np.zeros(dim)
        e[0] = 1.0
        v1 = VibronAnsatz(h_q0 * e, h_v1 * e, omega1, t1)
        v2 = None
        if h_v2 is not None:
            if omega2 is None:
                raise ValueError("omega2 is required when h_v2 is given")
            v2 = VibronAnsatz(np.zeros(dim), h_v2 * e, omega2, None)
        return cls.symmetric(e, coupling_J, v1, v2, feedback_enabled)

    @property
    def dim(self) -> int:
        return len(self.h1)

    @property
    def symmetric_h(self) -> bool:
        return bool(np.allclose(self.h1, -np.asarray(self.h2)))

    @property
    def t1(self) -> float:
        return self.vibron1.t_on if self.vibron1.t_on is not None else 0.0

    @property
    def period1(self) -> float:
        return self.vibron1.period

    def with_vibron2_on(self, t2: Optional[float]) -> "RatchetModel":
        if self.vibron2 is None:
            return self
        return replace(self, vibron2=self.vibron2.switched_on(t2))

    def without_vibron2(self) -> "RatchetModel":
        return replace(self, vibron2=None)

    def with_feedback(self, enabled: bool) -> "RatchetModel":
        return replace(self, feedback_enabled=enabled)

    def scaled_amplitude(self, factor: float) -> "RatchetModel":
        """Copy with the first vibron's direction vector scaled by ``factor``."""
        v1 = self.vibron1
        scaled = replace(v1, direction=tuple(factor * np.asarray(v1.direction)))
        return replace(self, vibron1=scaled)

    # scalar projections used by the dynamics and the crossing analysis
    @cached_property
    def _projections(self) -> tuple:
        h1, h2 = np.asarray(self.h1), np.asarray(self.h2)
        p11 = self.vibron1.projected(h1)
        p21 = self.vibron1.projected(h2)
        p22 = self.vibron2.projected(h2) if self.vibron2 is not None else None
        return p11, p21, p22

    def direct_drive(self, t: float) -> float:
        """``h1 . q1(t)``: first diagonal entry before population weighting."""
        return self._projections[0].value(t)

    def reverse_drive(self, t: float) -> float:
        """``h2 . (q1(t) + q2(t))``: second diagonal entry before weighting."""
        _, p21, p22 = self._projections
        x = p21.value(t)
        if p22 is not None:
            x += p22.value(t)
        return x

    def direct_drive_rate(self, t: float) -> float:
        return self._projections[0].velocity(t)

    def reverse_drive_rate(self, t: float) -> float:
        _, p21, p22 = self._projections
        x = p21.velocity(t)
        if p22 is not None:
            x += p22.velocity(t)
        return x

    def diagonal_drives(self, t: float) -> tuple[float, float]:
        return self.direct_drive(t), self.reverse_drive(t)

    def drive_function(self) -> Callable[[float], tuple[float, float]]:
        return self.diagonal_drives

    def max_step_hint(self) -> Optional[float]:
        """One two-hundredth of the shortest vibron period."""
        omegas = [self.vibron1.omega]
        if self.vibron2 is not None:
            omegas.append(self.vibron2.omega)
        w = max(omegas)
        return 2.0 * math.pi / w / 200.0 if w > 0 else None

    def breakpoints(self) -> list[float]:
        """Switch-on times where the drive has a derivative kink."""
        pts = [self.vibron1.t_on] if self.vibron1.t_on is not None else []
        if self.vibron2 is not None and self.vibron2.t_on is not None:
            pts.append(self.vibron2.t_on)
        return sorted(pts)

    def h_projection(self, which: str = "h1") -> dict:
        """Scalar products of ``h1`` (or ``h2``) with q0, v1 and v2."""
        h = np.asarray(self.h1 if which == "h1" else self.h2)
        out = {
            "h_q0": float(h @ np.asarray(self.vibron1.offset)),
            "h_v1": float(h @ np.asarray(self.vibron1.direction)),
        }
        if self.vibron2 is not None:
            out["h_v2"] = float(h @ np.asarray(self.vibron2.direction))
        return out
