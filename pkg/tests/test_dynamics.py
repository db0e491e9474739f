import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bakerskew.dynamics import (
    GEOM_TAIL,
    absorbing_report,
    choose_x0,
    deviation_partial_sum,
    fiber_orbit,
    iterate,
    verify_absorbing,
    verify_onedim,
    x0_preconditions,
)

# 50-digit recomputation: tests/oracles/oracle_onedim.py
ORACLE_MAX_DEVIATION = 0.060356217889333194
ORACLE_TAIL_BOUND = 0.098544419759373468


# ---------------------------------------------------------------------------
# admissible starting point
# ---------------------------------------------------------------------------


def test_geom_tail_value():
    assert GEOM_TAIL == pytest.approx(1 / (1 - math.exp(-0.5)), rel=1e-15)


def test_choose_x0_frozen():
    # 50-digit recomputation: tests/oracles/oracle_stage1.py
    assert choose_x0(0.1) == 3.25
    assert choose_x0(0.05) == 3.95


def test_choose_x0_rejects_bad_delta():
    with pytest.raises(ValueError):
        choose_x0(0.0)
    with pytest.raises(ValueError):
        choose_x0(0.2)


def test_x0_preconditions_bracket_the_grid_choice():
    s, e = x0_preconditions(3.25, 0.1)
    assert s < 0.1 and e < 0.1
    s_prev, e_prev = x0_preconditions(3.20, 0.1)
    assert s_prev >= 0.1 or e_prev >= 0.1  # one grid step earlier fails


# ---------------------------------------------------------------------------
# fiber orbit and deviation bounds
# ---------------------------------------------------------------------------


def test_fiber_orbit_shape_and_recurrence():
    xs = fiber_orbit(3.25, 10)
    assert len(xs) == 11
    for k in range(10):
        assert xs[k + 1] == xs[k] + 1.0 + math.exp(-xs[k])


def test_fiber_orbit_deviation_matches_oracle():
    xs = fiber_orbit(3.25, 200)
    devs = [abs(xs[k] - (3.25 + k)) for k in range(201)]
    assert max(devs) == pytest.approx(ORACLE_MAX_DEVIATION, abs=1e-12)
    assert all(d < 0.1 for d in devs)


def test_deviation_partial_sum_closed_form():
    direct = sum(math.exp(-3.25 - j / 2) for j in range(7))
    assert deviation_partial_sum(3.25, 7) == pytest.approx(direct, rel=1e-14)
    assert deviation_partial_sum(3.25, 10**6) == pytest.approx(
        math.exp(-3.25) * GEOM_TAIL, rel=1e-12
    )


@given(st.floats(min_value=0.5, max_value=40.0))
@settings(max_examples=200, deadline=None)
def test_monotone_drift(x):
    # f(x) - x = 1 + e^(-x) lies in (1, 1 + e^(-1/2)]; in binary64 the
    # increment is absorbed into 1.0 once e^(-x) < ulp(1)/2 (x ~ 36.7)
    assert math.exp(-x) > 0.0
    step = 1.0 + math.exp(-x)
    assert 1.0 <= step <= 1.0 + math.exp(-0.5)


@given(st.integers(min_value=1, max_value=150))
@settings(max_examples=60, deadline=None)
def test_deviation_is_monotone_and_bounded_by_partial_sum(k):
    xs = fiber_orbit(3.25, k)
    dev = xs[k] - (3.25 + k)
    assert dev >= 0.0
    assert dev <= deviation_partial_sum(3.25, k) + 1e-10


# ---------------------------------------------------------------------------
# the one-dimensional certificate
# ---------------------------------------------------------------------------


def test_verify_onedim_frozen():
    cert = verify_onedim(3.25, 0.1, 200)
    assert cert.passed and cert.failure is None
    assert cert.max_deviation == pytest.approx(0.06035621788932133, rel=1e-12)
    assert cert.max_deviation == pytest.approx(ORACLE_MAX_DEVIATION, abs=1e-12)
    assert cert.worst_k == 30  # binary64 plateau; precision-dependent
    assert cert.partial_sum_slack == 0.0
    assert cert.max_pair_diff == pytest.approx(0.7961552852157621, rel=1e-12)
    assert cert.max_pair_diff < 1.0  # the 10-delta distortion bound
    d = cert.to_dict()
    assert d["kind"] == "onedim"
    assert d["precondition_sum"] == pytest.approx(ORACLE_TAIL_BOUND, abs=1e-15)


def test_verify_onedim_deterministic():
    assert verify_onedim(3.25, 0.1, 200).to_dict() == verify_onedim(3.25, 0.1, 200).to_dict()


def test_verify_onedim_rejects_inadmissible_x0():
    cert = verify_onedim(0.8, 0.1, 50)
    assert not cert.passed
    assert cert.failure is not None


# ---------------------------------------------------------------------------
# absorbing half-plane
# ---------------------------------------------------------------------------


def test_absorbing_frozen():
    rep = absorbing_report(1.0, 0.5, 10000)
    assert rep["passed"] and rep["violations"] == 0
    assert rep["min_margin"] == pytest.approx(0.5339862493817464, rel=1e-12)
    assert verify_absorbing(1.0, 0.5, 10000)


def test_absorbing_deterministic():
    assert absorbing_report(1.0, 0.5, 1000) == absorbing_report(1.0, 0.5, 1000)


def test_absorbing_validation():
    with pytest.raises(ValueError):
        absorbing_report(-1.0, 0.5, 10)
    with pytest.raises(ValueError):
        absorbing_report(0.1, 0.5, 10)  # need R > |log Re a| = 2.3


# ---------------------------------------------------------------------------
# orbit iteration and verdicts
# ---------------------------------------------------------------------------


def test_iterate_escaped_continues_to_budget(drift_F):
    tr = iterate(drift_F, (3.25 + 0j, 0j), 100, escape_re=50.0, return_radius=3.0)
    assert tr.verdict == "escaped"
    # drift reaches 50 near step 47, then ten more monotone steps certify
    assert 50 <= tr.verdict_step <= 60
    assert len(tr.points) == 101  # certification does not stop the trace


def test_iterate_returned(drift_F):
    # f(-1) = e = 2.718... lands inside the return disk at the first step
    tr = iterate(drift_F, (-1 + 0j, 0j), 50, escape_re=50.0, return_radius=3.0)
    assert tr.verdict == "returned"
    assert tr.verdict_step == 1
    assert len(tr.points) == 2


def test_iterate_budget_exhausted(drift_F):
    tr = iterate(drift_F, (3.25 + 0j, 0j), 30, escape_re=500.0, return_radius=3.0)
    assert tr.verdict == "budget-exhausted"
    assert tr.verdict_step is None


def test_iterate_overflow(cubic_F):
    # w z^3 triples the exponent each step; binary64 gives out within ~8 steps
    tr = iterate(cubic_F, (3.25 + 0j, 0.45 + 0j), 100, escape_re=50.0, return_radius=3.0)
    assert tr.verdict == "overflow"
    assert tr.verdict_step <= 10
    assert len(tr.points) == tr.verdict_step  # points stop before the bad step


def test_iterate_start_point_does_not_return(drift_F):
    # |z_0| <= radius must not count: return requires k >= 1
    tr = iterate(drift_F, (2.0 + 0j, 0j), 20, escape_re=50.0, return_radius=3.0)
    assert tr.verdict == "budget-exhausted"


def test_iterate_validation(drift_F):
    with pytest.raises(ValueError):
        iterate(drift_F, (0j, 0j), 0, 50.0, 3.0)
    with pytest.raises(ValueError):
        iterate(drift_F, (0j, 0j), 10, 3.0, 50.0)


def test_trace_csv_shape(drift_F):
    tr = iterate(drift_F, (3.25 + 0j, 0.5 + 0j), 5, escape_re=50.0, return_radius=3.0)
    lines = tr.to_csv().splitlines()
    assert lines[0] == "k,re_z,im_z,abs_z,re_w,im_w"
    assert len(lines) == len(tr.points) + 1
    k, re_z, im_z, abs_z, re_w, im_w = lines[1].split(",")
    assert k == "0" and float(re_z) == 3.25 and float(re_w) == 0.5
    # repr floats round-trip exactly
    assert float(lines[2].split(",")[1]) == tr.points[1][0].real


def test_trace_deterministic(drift_F):
    a = iterate(drift_F, (3.25 + 0j, 0.5 + 0j), 40, 50.0, 3.0).to_csv()
    b = iterate(drift_F, (3.25 + 0j, 0.5 + 0j), 40, 50.0, 3.0).to_csv()
    assert a == b


def test_iterate_w_plane_contracts(cubic_F):
    tr = iterate(cubic_F, (3.25 + 0j, 1e-8 + 0j), 30, 50.0, 3.0)
    assert tr.abs_w[-1] == pytest.approx(1e-8 * 0.5**30, rel=1e-12)
