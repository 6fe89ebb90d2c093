import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clfsynth.cegis import choose_level, synthesize
from clfsynth.model import load_benchmark
from clfsynth.poly import Polynomial, parse_polynomial
from clfsynth.runtime import (
    CertificateViolation,
    check_rws,
    ctrl,
    dwell,
    dwell_from_bounds,
    make_controller,
    rk4_flow,
    simulate,
    write_trace_csv,
)

PENDULUM_A = [2.2539, 0.69043, 0.65625]
XY = ("x", "y")
CIRCLE = [1.0, 0.0, 1.0]  # x^2 + xy coefficient 0 + y^2


@pytest.fixture(scope="module")
def first():
    return load_benchmark(1)


@pytest.fixture(scope="module")
def circle(first):
    # V = x^2 + y^2 is not a certificate for this system; only the rule is exercised
    return make_controller(first, CIRCLE, 0.9, verified=True)


@pytest.fixture(scope="module")
def pendulum():
    inst = load_benchmark(6)
    V = inst.template.polynomial(PENDULUM_A)
    beta, _, _ = choose_level(inst, V)
    spec = make_controller(inst, PENDULUM_A, beta, lam=2.5, verified=True)
    return inst, spec, dwell(inst, spec, delta=1e-5)


@pytest.fixture(scope="module")
def pendulum_trace(pendulum):
    inst, spec, dw = pendulum
    return simulate(inst, spec, dw, [1.0, -2.0], horizon=20.0)


@pytest.fixture(scope="module")
def first_closed_loop(first):
    res = synthesize(first)
    spec = make_controller(first, res.a, res.beta, verified=True)
    return spec, dwell(first, spec, delta=first.delta)


# -- controller construction -------------------------------------------------------------


def test_lie_derivatives_of_circle(circle):
    assert circle.vdot[0].allclose(parse_polynomial("-2 * y", XY))
    assert circle.vdot[1].allclose(parse_polynomial("2 * y", XY))


def test_pendulum_decrease_rate_degree(pendulum):
    _, spec, _ = pendulum
    assert max(p.degree for p in spec.vdot) == 4


@pytest.mark.parametrize("lam", [1.0, 0.5])
def test_lambda_at_most_one_rejected(first, lam):
    with pytest.raises(ValueError, match="lambda"):
        make_controller(first, CIRCLE, 0.9, lam=lam, verified=True)


def test_unverified_certificate_rejected(first):
    with pytest.raises(CertificateViolation):
        make_controller(first, CIRCLE, 0.9)


# -- dwell times ----------------------------------------------------------------------------


def test_dwell_formula_example():
    dw = dwell_from_bounds([10.0], eps_q=1.0, lam=2.0, horizon=5.0)
    assert dw.dwell == pytest.approx((0.05,))
    assert dw.tau == pytest.approx(0.05)


def test_nonpositive_curvature_gives_horizon():
    dw = dwell_from_bounds([-1.0, 0.0, 4.0], eps_q=0.1, lam=3.0, horizon=7.0)
    assert dw.dwell[:2] == (7.0, 7.0)
    assert dw.tau == pytest.approx(2 * 0.1 / 12)


@settings(max_examples=100)
@given(st.floats(1e-3, 1e3), st.floats(1e-4, 1.0), st.floats(1.01, 10.0))
def test_dwell_identity(eps1, eps_q, lam):
    # from -eps_Q with slope eps1 the rate reaches -eps_Q / lam after exactly one dwell
    (dm,) = dwell_from_bounds([eps1], eps_q, lam, 1e9).dwell
    assert -eps_q + eps1 * dm == pytest.approx(-eps_q / lam, rel=1e-9, abs=1e-12)


def test_dwell_region_validated(pendulum):
    inst, spec, _ = pendulum
    with pytest.raises(ValueError):
        dwell(inst, spec, region="T")


def test_sublevel_dwell_is_no_shorter(pendulum):
    inst, spec, dw = pendulum
    wide = dwell(inst, spec, delta=1e-5, region="S")
    assert wide.tau <= dw.tau


# -- switching rule --------------------------------------------------------------------------


def test_increasing_mode_is_abandoned(circle):
    assert ctrl(circle, 1, [0.0, 0.5]) == 0


def test_goal_keeps_mode(circle):
    assert ctrl(circle, 1, [0.0, 0.05]) == 1


def test_sufficient_decrease_keeps_mode(circle, first):
    assert ctrl(circle, 0, [0.0, first.eps_q / 2]) == 0


def test_no_decreasing_mode_inside_w(circle):
    with pytest.raises(CertificateViolation):
        ctrl(circle, 0, [0.5, 0.0])


def test_no_decreasing_mode_outside_w_is_tolerated(first):
    spec = make_controller(first, CIRCLE, 0.2, verified=True)
    assert ctrl(spec, 0, [0.5, 0.0]) == 0


# -- integration -----------------------------------------------------------------------------


def test_rk4_is_fourth_order():
    rot = [Polynomial.var(1), -Polynomial.var(0)]  # x' = y, y' = -x
    exact = np.array([np.cos(1.0), -np.sin(1.0)])
    errs = [np.linalg.norm(rk4_flow(rot, [1.0, 0.0], 1.0, h) - exact) for h in (0.1, 0.05, 0.025)]
    for coarse, fine in zip(errs, errs[1:]):
        assert 12 < coarse / fine < 20


def test_start_in_goal_is_immediate(pendulum):
    inst, spec, dw = pendulum
    tr = simulate(inst, spec, dw, spec.G_center, horizon=1.0)
    assert tr.reason == "in goal" and len(tr) == 1


def test_start_outside_w_rejected(pendulum):
    inst, spec, dw = pendulum
    with pytest.raises(ValueError, match="not in W"):
        simulate(inst, spec, dw, [1.4, 3.9], horizon=1.0)


def test_first_system_reaches_goal(first, first_closed_loop):
    spec, dw = first_closed_loop
    tr = simulate(first, spec, dw, [0.3, 0.0], horizon=50.0)
    v = check_rws(tr, spec)
    assert v.ok and tr.t[-1] < 50


def test_pendulum_reaches_goal(pendulum, pendulum_trace):
    _, spec, dw = pendulum
    assert 2e-5 <= dw.tau <= 2e-3
    v = check_rws(pendulum_trace, spec)
    assert v.ok and v.v_decreasing


def test_long_runs_are_thinned(pendulum, pendulum_trace):
    inst, spec, dw = pendulum
    full = simulate(inst, spec, dw, [1.0, -2.0], horizon=20.0, max_samples=10**7)
    assert full.stride == 1 and len(full) > len(pendulum_trace)
    assert full.t[-1] == pendulum_trace.t[-1]
    np.testing.assert_array_equal(full.switch_times, pendulum_trace.switch_times)
    assert np.diff(full.V).max() == pytest.approx(pendulum_trace.max_dv, rel=1e-9)


def test_trace_invariants(pendulum_trace):
    tr = pendulum_trace
    assert tr.t[0] == 0
    assert np.all(np.diff(tr.t) > 0)
    assert np.all(np.diff(tr.switch_times) > 0)
    assert np.all(np.diff(tr.switch_times) >= tr.tau - tr.h)


def test_per_period_decrease_bound(pendulum, pendulum_trace):
    _, spec, dw = pendulum
    tr = pendulum_trace
    bound = dw.tau * spec.eps_q * (spec.lam - 3) / (2 * spec.lam)
    assert tr.max_dv <= bound + 1e-12


# -- verdicts ----------------------------------------------------------------------------------


def _fake_trace(pendulum_trace, x, V, reason):
    from dataclasses import replace

    n = len(V)
    return replace(
        pendulum_trace,
        t=np.arange(n) * pendulum_trace.tau,
        mode=np.zeros(n, dtype=int),
        x=np.asarray(x, dtype=float),
        V=np.asarray(V, dtype=float),
        switch_times=np.array([0.0]),
        reason=reason,
        stride=1,
    )


def test_exit_from_safe_set_fails(pendulum, pendulum_trace):
    _, spec, _ = pendulum
    out = spec.S_hi + 0.5
    tr = _fake_trace(pendulum_trace, [[1.0, -2.0], out], [3.0, 2.0], "left S")
    v = check_rws(tr, spec)
    assert not v.ok and not v.stayed_in_safe and v.first_violation == pytest.approx(tr.t[1])


def test_horizon_without_goal_fails(pendulum, pendulum_trace):
    _, spec, _ = pendulum
    tr = _fake_trace(pendulum_trace, [[1.0, -2.0], [1.0, -1.9]], [3.0, 2.9], "horizon")
    v = check_rws(tr, spec)
    assert not v.ok and v.stayed_in_safe and not v.reached_goal


def test_increase_is_reported(pendulum, pendulum_trace):
    _, spec, _ = pendulum
    tr = _fake_trace(pendulum_trace, [[1.0, -2.0], [1.0, -1.9], spec.G_center], [3.0, 3.1, 0.0], "in goal")
    v = check_rws(tr, spec)
    assert v.ok and not v.v_decreasing and v.worst_rate > 0


def test_trace_csv(tmp_path, pendulum, pendulum_trace):
    inst, _, _ = pendulum
    path = tmp_path / "trace.csv"
    write_trace_csv(pendulum_trace, path, inst.system.vars, inst.system.modes)
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "mode", *inst.system.vars, "V"]
    assert len(rows) == len(pendulum_trace) + 1
    assert rows[1][1] in inst.system.modes
