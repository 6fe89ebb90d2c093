import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from clfsynth.lp import max_slack, simplex_max


def test_textbook_lp():
    # maximize 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18
    M = np.array([[1.0, 0], [0, 2], [3, 2]])
    y, value, _ = simplex_max(np.array([3.0, 5.0]), M, np.array([4.0, 12, 18]))
    assert value == pytest.approx(36)
    assert y == pytest.approx([2, 6])


def test_empty_system_gives_box_centre():
    res = max_slack(np.zeros((0, 2)), np.zeros(0), np.array([0.0, -1]), np.array([2.0, 3]))
    assert res.slack == pytest.approx(1)
    assert res.point[0] == pytest.approx(1)


def test_half_interval():
    # 0.5 - a < 0 on [0, 1]: the centre of (0.5, 1)
    res = max_slack(np.array([[-1.0]]), np.array([0.5]), np.zeros(1), np.ones(1))
    assert res.feasible
    assert res.point[0] == pytest.approx(0.75)
    assert res.slack == pytest.approx(0.25)


def test_contradiction_is_infeasible():
    A = np.array([[1.0], [-1.0]])
    b = np.array([-0.3, 0.7])  # a < 0.3 and a > 0.7
    assert not max_slack(A, b, np.zeros(1), np.ones(1)).feasible


def test_touching_constraints_are_not_strictly_feasible():
    # a <= 0.5 and a >= 0.5 leave a single point, no interior
    A = np.array([[1.0], [-1.0]])
    b = np.array([-0.5, 0.5])
    assert max_slack(A, b, np.zeros(1), np.ones(1)).slack == pytest.approx(0, abs=1e-12)


def test_zero_row_rejected():
    with pytest.raises(ValueError):
        max_slack(np.zeros((1, 2)), np.ones(1), np.zeros(2), np.ones(2))


def _oracle(A, b, lo, hi):
    """Same program through scipy: variables (c, s), maximize s."""
    d = lo.size
    norms = np.linalg.norm(A, axis=1)
    rows = [np.hstack([A / norms[:, None], np.ones((len(A), 1))])]
    rhs = [-b / norms]
    rows += [np.hstack([-np.eye(d), np.ones((d, 1))]), np.hstack([np.eye(d), np.ones((d, 1))])]
    rhs += [-lo, hi]
    obj = np.zeros(d + 1)
    obj[-1] = -1
    bounds = [(None, None)] * d + [(None, None)]
    out = linprog(obj, A_ub=np.vstack(rows), b_ub=np.concatenate(rhs), bounds=bounds, method="highs")
    return -out.fun


@settings(max_examples=150, deadline=None)
@given(st.integers(1, 5), st.integers(0, 12), st.integers(0, 2**31 - 1))
def test_matches_scipy_oracle(d, m, seed):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(m, d))
    b = rng.normal(size=m)
    lo = rng.uniform(-3, 0, size=d)
    hi = lo + rng.uniform(0.5, 4, size=d)
    res = max_slack(A, b, lo, hi)
    ref = _oracle(A, b, lo, hi)
    assert (res.slack > 1e-9) == (ref > 1e-9)
    if ref > 1e-9:
        assert res.slack == pytest.approx(ref, rel=1e-7, abs=1e-9)
        # the point is a genuine centre: every row has the claimed clearance
        norms = np.linalg.norm(A, axis=1)
        assert np.all(A @ res.point + b <= -res.slack * norms + 1e-8)
        assert np.all(res.point >= lo + res.slack - 1e-8)
        assert np.all(res.point <= hi - res.slack + 1e-8)
