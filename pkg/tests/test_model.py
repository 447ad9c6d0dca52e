import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vibron_ratchet.model import (
    UNITS,
    RatchetModel,
    StateVector,
    VibronAnsatz,
    vibron_value,
    vibron_velocity,
    wavenumber_to_omega,
)

C = 2.99792458e-5
finite = st.floats(-10, 10, allow_nan=False)


def ansatz(t_on=3.0):
    return VibronAnsatz((1.0, -0.5), (0.6, 0.2), 0.7, t_on)


def test_value_at_switch_on_is_offset():
    v = ansatz()
    np.testing.assert_allclose(vibron_value(v, v.t_on), v.offset)


def test_value_half_period_after_switch_on():
    v = ansatz()
    q = vibron_value(v, v.t_on + math.pi / v.omega)
    np.testing.assert_allclose(q, np.array(v.offset) - 2 * np.array(v.direction), atol=1e-14)


def test_second_vibron_rests_before_switch_on():
    v = VibronAnsatz((0.0, 0.0), (0.3, 0.1), 0.2, 10.0)
    np.testing.assert_array_equal(vibron_value(v, 5.0), [0.0, 0.0])
    np.testing.assert_array_equal(vibron_velocity(v, 5.0), [0.0, 0.0])


def test_unset_switch_on_means_resting():
    v = VibronAnsatz((0.0,), (0.3,), 0.2, None)
    assert vibron_value(v, 1e6)[0] == 0.0


def test_velocity_zero_at_switch_on():
    v = ansatz()
    np.testing.assert_array_equal(vibron_velocity(v, v.t_on), [0.0, 0.0])


def test_velocity_quarter_period():
    v = ansatz()
    dq = vibron_velocity(v, v.t_on + math.pi / (2 * v.omega))
    np.testing.assert_allclose(dq, -np.array(v.direction) * v.omega, atol=1e-14)


@given(st.floats(1e-3, 40.0))
def test_velocity_matches_central_difference(t):
    # away from t_on, where the second derivative jumps
    v = ansatz(t_on=0.0)
    eps = 1e-4
    fd = (vibron_value(v, t + eps) - vibron_value(v, t - eps)) / (2 * eps)
    # O(eps^2) truncation plus rounding of the difference quotient
    np.testing.assert_allclose(fd, vibron_velocity(v, t), atol=1e-8)


def test_wavenumber_conversion_examples():
    assert wavenumber_to_omega(0) == 0
    assert wavenumber_to_omega(115) == pytest.approx(115 * 2 * math.pi * C, rel=1e-15)
    assert wavenumber_to_omega(115) == pytest.approx(0.021663, abs=2e-6)
    assert wavenumber_to_omega(35) == pytest.approx(0.006593, abs=2e-6)
    assert UNITS.wavenumber_to_angular == pytest.approx(1.8837e-4, rel=1e-4)


def test_wavenumber_rejects_negative():
    with pytest.raises(ValueError):
        wavenumber_to_omega(-1.0)


@given(st.floats(0, 1e4), st.floats(0, 100))
def test_wavenumber_linear(x, a):
    assert wavenumber_to_omega(a * x) == pytest.approx(a * wavenumber_to_omega(x), rel=1e-12, abs=1e-300)


@given(st.floats(-5, 5), st.floats(0.1, 3.0), finite, finite)
def test_value_and_velocity_continuous_across_switch_on(t_on, omega, d0, d1):
    v = VibronAnsatz((1.0, 2.0), (d0, d1), omega, t_on)
    for eps in (1e-9, 1e-7):
        left, right = vibron_value(v, t_on - eps), vibron_value(v, t_on + eps)
        np.testing.assert_allclose(left, right, atol=1e-6 * (1 + abs(d0) + abs(d1)))
        vl, vr = vibron_velocity(v, t_on - eps), vibron_velocity(v, t_on + eps)
        np.testing.assert_allclose(vl, vr, atol=1e-6 * omega * (1 + abs(d0) + abs(d1)))


@settings(max_examples=50)
@given(st.floats(-100, 100), finite, finite)
def test_value_within_ball(t, d0, d1):
    v = VibronAnsatz((0.3, -0.2), (d0, d1), 1.3, 0.0)
    dist = np.linalg.norm(vibron_value(v, t) - np.array(v.offset))
    assert dist <= 2 * np.linalg.norm([d0, d1]) * (1 + 1e-12) + 1e-15


def test_state_vector_populations():
    s = StateVector(complex(0.6, 0.0), complex(0.0, 0.8))
    assert s.rho11 == pytest.approx(0.36)
    assert s.rho22 == pytest.approx(0.64)
    assert s.is_normalized()
    assert not StateVector(1.0, 0.1).is_normalized(1e-8)
    with pytest.raises(ValueError):
        StateVector.basis(3)


def test_model_rejects_negative_coupling():
    with pytest.raises(ValueError):
        RatchetModel.from_projections(1.0, 0.6, 1.0, -0.1)


def test_model_rejects_mixed_dimensions():
    v1 = VibronAnsatz((1.0, 0.0), (0.5, 0.0), 1.0)
    with pytest.raises(ValueError):
        RatchetModel((1.0, 0.0, 0.0), (-1.0, 0.0, 0.0), 0.1, v1)


def test_symmetric_flag_and_projections():
    m = RatchetModel.from_projections(1.0, 0.6, 2.0, 0.1, h_v2=-0.3, omega2=0.5, dim=3)
    assert m.symmetric_h and m.dim == 3
    assert m.h_projection("h1") == {"h_q0": 1.0, "h_v1": 0.6, "h_v2": -0.3}
    assert m.direct_drive(0.0) == 1.0
    assert m.reverse_drive(0.0) == -1.0


def test_scaling_h_and_vectors_keeps_drives():
    v1 = VibronAnsatz((2.0, 1.0), (1.2, -0.4), 1.1, 0.0)
    m = RatchetModel.symmetric((0.5, 0.25), 0.1, v1)
    v1s = VibronAnsatz((1.0, 0.5), (0.6, -0.2), 1.1, 0.0)
    ms = RatchetModel.symmetric((1.0, 0.5), 0.1, v1s)
    for t in np.linspace(0, 10, 7):
        assert m.direct_drive(t) == pytest.approx(ms.direct_drive(t), rel=1e-14)
