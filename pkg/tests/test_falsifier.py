import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize

from clfsynth.cegis import choose_level
from clfsynth.falsifier import FalsifierUnknown, NlQuery, Unsat, Witness, bound_max, delta_check
from clfsynth.model import BallRegion, BoxRegion, Region, load_benchmark
from clfsynth.poly import Monomial, Polynomial, lie, parse_polynomial
from grid_oracle import grid_margins, inside

LINE = Region(BoxRegion((-1.0,), (1.0,)))
X = Polynomial.var(0)
PENDULUM_A = [2.2539, 0.69043, 0.65625]


# -- examples ------------------------------------------------------------------------------


def test_square_never_reaches_two():
    assert isinstance(delta_check(NlQuery(LINE, ((X**2, 2.0),))), Unsat)


def test_square_quarter_has_witness():
    v = delta_check(NlQuery(LINE, ((X**2, 0.25),), delta=1e-4))
    assert isinstance(v, Witness)
    assert abs(v.x[0]) >= 0.5 - 1e-3
    assert LINE.contains(v.x)


def test_gamma_raises_the_bar():
    q = NlQuery(LINE, ((X**2, 0.5),), delta=1e-4, gamma=0.6)
    assert isinstance(delta_check(q), Unsat)


def test_query_validation():
    with pytest.raises(ValueError):
        NlQuery(LINE, ((X, 0.0),), delta=0)
    with pytest.raises(ValueError):
        NlQuery(LINE, ((X, 0.0),), gamma=-1)


@pytest.fixture(scope="module")
def pendulum():
    inst = load_benchmark(6)
    V = inst.template.polynomial(PENDULUM_A)
    beta, _, _ = choose_level(inst, V)
    return inst, V, beta


def test_pendulum_decrease_query_is_unsat(pendulum):
    inst, V, beta = pendulum
    cons = tuple((lie(V, f), -inst.eps_q) for f in inst.system.dynamics) + ((-V, -beta),)
    q = NlQuery(inst.spec.safe_minus_goal, cons, delta=1e-5)
    assert isinstance(delta_check(q), Unsat)


def test_pendulum_decrease_fails_outside_sublevel_set(pendulum):
    # without the level restriction some state of S \ G has no decreasing mode
    inst, V, _ = pendulum
    cons = tuple((lie(V, f), -inst.eps_q) for f in inst.system.dynamics)
    v = delta_check(NlQuery(inst.spec.safe_minus_goal, cons, delta=1e-5))
    assert isinstance(v, Witness)
    assert V.eval(v.x) > pendulum[2]


def test_budget_exhaustion_is_not_unsat(pendulum):
    inst, V, beta = pendulum
    cons = tuple((lie(V, f), -inst.eps_q) for f in inst.system.dynamics) + ((-V, -beta),)
    with pytest.raises(FalsifierUnknown) as err:
        delta_check(NlQuery(inst.spec.safe_minus_goal, cons, delta=1e-5), budget=50)
    assert err.value.boxes > 50


def test_deterministic_witness():
    q = NlQuery(Region(BoxRegion((-1.0, -1.0), (1.0, 1.0))), ((parse_polynomial("x*y", "xy"), 0.3),))
    a, b = delta_check(q), delta_check(q)
    assert np.array_equal(a.x, b.x) and a.boxes == b.boxes


# -- bound_max -----------------------------------------------------------------------------


def test_bound_max_square():
    assert bound_max(X**2, LINE, 1e-4) == pytest.approx(1, abs=1e-3)
    assert bound_max(X**2, LINE, 1e-4) >= 1


def test_bound_max_shifted_parabola():
    p = parse_polynomial("-x^2 + x + 1.75", ("x",))  # -(x - 0.5)^2 + 2
    U = bound_max(p, Region(BoxRegion((0.0,), (1.0,))), 1e-4)
    assert 2 <= U <= 2 + 1e-3


def test_bound_max_empty_region_list():
    assert bound_max(X, [], 1e-3) == -np.inf


def test_pendulum_second_derivative_bound(pendulum):
    inst, V, _ = pendulum
    f = inst.system.dynamics[1]  # u = 30
    vdd = lie(lie(V, f), f)
    region = inst.spec.safe_minus_goal
    delta = 1e-4
    U = bound_max(vdd, region, delta)
    pts, vals = grid_margins(region, [(vdd, 0.0)])
    best = pts[np.argmax(vals)]
    # polish the grid maximum locally to approach the true maximum
    res = minimize(lambda x: -vdd.eval(x), best, bounds=list(zip(region.box.lo, region.box.hi)))
    true_max = max(vals.max(), -res.fun)
    L = max(np.hypot(vdd.partial(0).eval(x), vdd.partial(1).eval(x)) for x in pts[::97])
    assert vals.max() <= U
    assert U <= true_max + 10 * delta * (1 + L)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_bound_max_dominates_samples(seed):
    rng = np.random.default_rng(seed)
    terms = [(Monomial.from_exponents(rng.integers(0, 4, size=2)), rng.uniform(-3, 3)) for _ in range(4)]
    p = Polynomial(terms)
    region = Region(BoxRegion((-1.0, -2.0), (1.5, 1.0)), (), (BallRegion((0.2, -0.5), 0.4),))
    U = bound_max(p, region, 1e-3)
    X = rng.uniform((-1.0, -2.0), (1.5, 1.0), size=(1000, 2))
    X = X[inside(region, X)]
    assert np.all(p.eval_many(X) <= U)


# -- grid oracle agreement -----------------------------------------------------------------

REGIONS = [
    Region(BoxRegion((-1.0, -1.0), (1.0, 1.0)), (), (BallRegion((0.0, 0.0), 0.1),)),
    Region(BoxRegion((-0.5, -0.5), (0.5, 0.5)), (BallRegion((0.0, 0.0), 0.5),), (BallRegion((0.0, 0.0), 0.1),)),
]


@st.composite
def queries(draw):
    rng = np.random.default_rng(draw(st.integers(0, 2**31 - 1)))
    region = REGIONS[draw(st.integers(0, len(REGIONS) - 1))]
    cons = []
    for _ in range(draw(st.integers(1, 3))):
        terms = [(Monomial.from_exponents(rng.integers(0, 3, size=2)), rng.uniform(-2, 2)) for _ in range(3)]
        cons.append((Polynomial(terms), float(rng.uniform(-0.5, 0.5))))
    return NlQuery(region, tuple(cons), delta=1e-3)


@settings(max_examples=30, deadline=None)
@given(queries())
def test_agrees_with_grid_oracle(q):
    v = delta_check(q)
    _, margins = grid_margins(q.region, q.constraints)
    if isinstance(v, Unsat):
        assert not np.any(margins >= q.delta)
    else:
        assert q.region.contains(v.x)
        assert np.all(v.residuals >= -q.delta)
        resid = np.array([p.eval(v.x) - b for p, b in q.constraints])
        assert np.allclose(resid, v.residuals)
    if np.any(margins >= 2 * q.delta):
        assert isinstance(v, Witness)
