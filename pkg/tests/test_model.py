import copy
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clfsynth.model import (
    BallRegion,
    BoxRegion,
    ProblemError,
    Region,
    benchmark_names,
    boundary_faces,
    load_benchmark,
    load_problem,
    member,
    print_problem,
    problem_to_dict,
)
from clfsynth.poly import parse_polynomial

# (n, number of modes) per bundled system, in file order
SHAPES = {
    1: (2, 2), 2: (2, 2), 3: (2, 2), 4: (2, 5), 5: (2, 2), 6: (2, 3), 7: (2, 2), 8: (2, 2), 9: (3, 4), 10: (3, 4),
    11: (3, 3), 12: (3, 5), 13: (3, 2), 14: (3, 2), 15: (4, 5), 16: (4, 2), 17: (4, 2), 18: (5, 6), 19: (6, 4),
    20: (9, 4),
}  # fmt: skip
# nominal mode counts that differ from the number of vector fields actually given
MODE_COUNT_EXCEPTIONS = {6: 2, 8: 3, 16: 8}

SYSTEM1 = {
    "name": "first",
    "dim": 2,
    "vars": ["x", "y"],
    "modes": [{"id": "u=-1", "dynamics": ["y", "-x - 1"]}, {"id": "u=1", "dynamics": ["y", "-x + 1"]}],
    "S": {"lo": [-1, -1], "hi": [1, 1]},
    "I": {"center": [0, 0], "radius": 0.5},
    "G": {"center": [0, 0], "radius": 0.1},
    "template": {"degree": 2, "coef_lo": -10, "coef_hi": 10, "beta_lo": 0, "beta_hi": 100},
    "eps_q": 0.01,
}


def doc(**changes):
    d = copy.deepcopy(SYSTEM1)
    d.update(changes)
    return d


def test_load_first_system():
    inst = load_problem(SYSTEM1)
    assert (inst.n, inst.nmodes) == (2, 2)
    assert inst.system.dynamics[1][1] == parse_polynomial("-x + 1", ("x", "y"))
    assert inst.template.nparams == 4


def test_load_from_json_text():
    assert load_problem(json.dumps(SYSTEM1)) == load_problem(SYSTEM1)


def test_zero_radius_rejected():
    with pytest.raises(ProblemError, match="radius must be positive"):
        load_problem(doc(I={"center": [0, 0], "radius": 0}))


def test_initial_ball_at_corner_rejected():
    with pytest.raises(ProblemError, match=r"I not in interior\(S\)"):
        load_problem(doc(I={"center": [1, 1], "radius": 0.2}))


def test_missing_field_is_named():
    d = doc()
    del d["eps_q"]
    with pytest.raises(ProblemError) as err:
        load_problem(d)
    assert err.value.field == "eps_q"


def test_bad_polynomial_names_mode():
    d = doc(modes=[{"id": "a", "dynamics": ["y", "-x +* 1"]}])
    with pytest.raises(ProblemError, match=r"modes\[0\]"):
        load_problem(d)


def test_invalid_json_reports_line():
    with pytest.raises(ProblemError, match="line 2"):
        load_problem('{\n  "name": ,\n}')


def test_lambda_must_exceed_one():
    with pytest.raises(ProblemError, match="lambda"):
        load_problem(doc(**{"lambda": 1.0}))


def test_empty_basis_rejected():
    with pytest.raises(ProblemError, match="basis"):
        load_problem(doc(template={"basis": []}))


def test_goal_outside_safe_set_rejected():
    with pytest.raises(ProblemError, match="G does not intersect S"):
        load_problem(doc(G={"center": [3, 3], "radius": 0.5}))


# -- geometry -------------------------------------------------------------------------------


def test_square_has_four_faces():
    faces = boundary_faces(BoxRegion((-1, -1), (1, 1)))
    assert len(faces) == 4
    assert BoxRegion((-1, -1), (-1, 1)) in faces


def test_cube_has_six_faces():
    assert len(boundary_faces(BoxRegion((-1,) * 3, (1,) * 3))) == 6


def test_shifted_box_face_present():
    assert BoxRegion((2, -1), (2, 1)) in boundary_faces(BoxRegion((0, -1), (2, 1)))


def test_membership_examples():
    G = BallRegion((0, 0), 0.1)
    S = BoxRegion((-1, -1), (1, 1))
    assert member(G, (0, 0))
    assert not member(Region(S, (), (G,)), (0.05, 0))
    assert member(BoxRegion((1, -1), (1, 1)), (1, 0))


def test_goal_sphere_belongs_to_the_difference():
    # the difference keeps its boundary so it stays compact
    S = BoxRegion((-1, -1), (1, 1))
    assert Region(S, (), (BallRegion((0, 0), 0.1),)).contains((0.1, 0))


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 4), st.data())
def test_faces_cover_exactly_the_boundary(n, data):
    S = BoxRegion((-1.0,) * n, (2.0,) * n)
    faces = boundary_faces(S)
    x = np.array(data.draw(st.lists(st.floats(-0.99, 1.99), min_size=n, max_size=n)))
    assert not any(member(f, x) for f in faces)
    i = data.draw(st.integers(0, n - 1))
    x[i] = data.draw(st.sampled_from([-1.0, 2.0]))
    assert any(member(f, x) for f in faces)


# -- bundled corpus ----------------------------------------------------------------------------


def test_corpus_has_twenty_systems():
    assert benchmark_names() == [f"sys{k:02d}" for k in range(1, 21)]


@pytest.mark.parametrize("k", range(1, 21))
def test_corpus_shapes(k):
    inst = load_benchmark(k)
    n, q = SHAPES[k]
    assert inst.n == n
    assert inst.nmodes == MODE_COUNT_EXCEPTIONS.get(k, q)


@pytest.mark.parametrize("k", range(1, 21))
def test_print_load_round_trip(k):
    inst = load_benchmark(k)
    assert load_problem(print_problem(inst)) == inst
    assert problem_to_dict(load_problem(print_problem(inst))) == problem_to_dict(inst)


def test_first_benchmark_matches_hand_written_document():
    ref = load_problem(SYSTEM1)
    inst = load_benchmark(1)
    assert inst.system.dynamics == ref.system.dynamics
    assert inst.spec == ref.spec
