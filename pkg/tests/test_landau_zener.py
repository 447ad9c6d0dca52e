import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from vibron_ratchet.landau_zener import (
    DegeneratePassage,
    LinearSweep,
    LzParams,
    local_slope_at_crossing,
    lz_collapsed_probability,
    lz_transition_probability,
    passage_estimate,
)
from vibron_ratchet.model import RatchetModel

pos = st.floats(1e-3, 10.0)


def test_zero_coupling_gives_zero():
    assert lz_transition_probability(LzParams(0.0, 1.0, -1.0)) == 0.0


def test_reference_value_one_over_e():
    p = LzParams(1.0, math.pi, -math.pi)
    assert lz_transition_probability(p) == pytest.approx(1 - math.exp(-1), abs=1e-12)
    assert lz_transition_probability(p) == pytest.approx(0.632121, abs=1e-6)


def test_large_coupling_approaches_one():
    assert lz_transition_probability(LzParams(20.0, 1.0, 0.0)) == pytest.approx(1.0, abs=1e-12)


def test_equal_slopes_rejected():
    with pytest.raises(ValueError):
        lz_transition_probability(LzParams(1.0, 2.0, 2.0))


def test_negative_coupling_rejected():
    with pytest.raises(ValueError):
        LzParams(-1.0, 1.0, 0.0)


@given(pos, pos, pos)
def test_monotone_in_coupling(J, dJ, rate):
    a = lz_transition_probability(LzParams(J, rate, 0.0))
    b = lz_transition_probability(LzParams(J + dJ, rate, 0.0))
    assert b >= a


@given(pos, pos, pos)
def test_monotone_in_sweep_rate(J, rate, extra):
    a = lz_transition_probability(LzParams(J, rate, 0.0))
    b = lz_transition_probability(LzParams(J, rate + extra, 0.0))
    assert b <= a


@given(pos, st.floats(-10, 10), st.floats(-10, 10))
def test_symmetric_under_slope_swap(J, u, v):
    if u == v:
        return
    assert lz_transition_probability(LzParams(J, u, v)) == lz_transition_probability(LzParams(J, v, u))


@given(pos, st.floats(-10, 10).filter(lambda s: s != 0))
def test_collapsed_equals_one_sided_formula(J, s):
    assert lz_collapsed_probability(J, s) == lz_transition_probability(LzParams(J, s, 0.0))


def test_collapsed_examples():
    assert lz_collapsed_probability(1.0, 2 * math.pi) == pytest.approx(0.632121, abs=1e-6)
    assert lz_collapsed_probability(1.0, 1e12) < 1e-10
    assert lz_collapsed_probability(1.0, 1e-3) == pytest.approx(1.0, abs=1e-12)


def test_zero_slope_is_degenerate():
    with pytest.raises(DegeneratePassage):
        lz_collapsed_probability(0.5, 0.0)
    assert passage_estimate(0.5, 0.0) == (1.0, True)
    p, degenerate = passage_estimate(0.5, 1.0)
    assert not degenerate and 0 < p < 1


def test_slope_zero_at_turning_point():
    m = RatchetModel.from_projections(1.0, 0.5, 2.0, 0.1)
    assert local_slope_at_crossing(m, math.pi / 2.0, "direct") == pytest.approx(0.0, abs=1e-15)


def test_slope_at_arccos_crossing():
    w = 1.7
    m = RatchetModel.from_projections(1.0, 0.6, w, 0.1)
    t = math.acos(-2 / 3) / w
    s = local_slope_at_crossing(m, t, "direct")
    assert abs(s) == pytest.approx(0.6 * w * math.sqrt(1 - 4 / 9), rel=1e-12)
    assert abs(s) == pytest.approx(0.4472 * w, rel=1e-4)


@given(st.floats(0.01, 30.0))
def test_slope_matches_finite_difference(t):
    m = RatchetModel.from_projections(1.0, 0.6, 1.3, 0.1, h_v2=-0.4, omega2=0.4).with_vibron2_on(0.0)
    eps = 1e-4
    fd = (m.direct_drive(t + eps) - m.direct_drive(t - eps)) / (2 * eps)
    assert local_slope_at_crossing(m, t, "direct") == pytest.approx(fd, abs=1e-8)
    # reverse move: slope of h . (q1 + q2) with h = -h2
    fd = -(m.reverse_drive(t + eps) - m.reverse_drive(t - eps)) / (2 * eps)
    assert local_slope_at_crossing(m, t, "reverse") == pytest.approx(fd, abs=1e-8)


def test_unknown_move_rejected():
    m = RatchetModel.from_projections(1.0, 0.6, 1.3, 0.1)
    with pytest.raises(ValueError):
        local_slope_at_crossing(m, 0.0, "sideways")


def test_linear_sweep_for_gamma():
    s = LinearSweep.for_gamma(0.25, 2.0)
    assert s.params.gamma == pytest.approx(0.25)
    assert s.half_window(50.0) == pytest.approx(50 * s.coupling_J / 2.0)
    assert s.half_window(50.0, minimum=1e3) == 1e3
    assert s.diagonal_drives(2.0) == (2.0, -2.0)
    with pytest.raises(ValueError):
        LinearSweep.for_gamma(0.0)
