"""Candidate space: a box of parameters cut down by disjunctive clauses.

Each counterexample ``x_i`` found for condition family ``j`` contributes the
clause ``OR_k F_{j,k}(x_i, c) + eps_T_j < 0``, which is affine in ``c``.
Candidates are drawn by depth-first search over one-atom-per-clause
selections, solving a max-slack linear program at every node.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .conditions import Condition, build_conditions
from .interval import enclose_many
from .lp import max_slack
from .model import ProblemInstance, Region
from .poly import ParamPolynomial

__all__ = [
    "AffineAtom",
    "Clause",
    "CSpace",
    "RefinementError",
    "init_cspace",
    "refine",
    "rebuild",
    "pick_candidate",
    "exclusion_radius",
    "atom_gradient_bound",
    "radius_from_bounds",
]

# max-slack values at or below this count as infeasible
SLACK_TOL = 1e-9
# gradients smaller than this make an atom a constant truth value
_ZERO_GRAD = 1e-13


class RefinementError(ValueError):
    """Witness lies in none of the condition regions."""


@dataclass(frozen=True)
class AffineAtom:
    """``grad @ c + offset < 0``."""

    grad: np.ndarray
    offset: float

    def value(self, c) -> float:
        return float(self.grad @ np.asarray(c, dtype=float) + self.offset)

    def holds(self, c) -> bool:
        return self.value(c) < 0


@dataclass(frozen=True)
class Clause:
    atoms: tuple[AffineAtom, ...]
    condition: int
    x: np.ndarray = field(repr=False)

    def satisfied(self, c) -> bool:
        return any(a.holds(c) for a in self.atoms)

    def margin(self, c) -> float:
        """Most negative atom value (negative means satisfied)."""
        return min(a.value(c) for a in self.atoms)


@dataclass(frozen=True)
class CSpace:
    lo: np.ndarray
    hi: np.ndarray
    conditions: tuple[Condition, ...]
    eps_t: tuple[float, float, float]
    clauses: tuple[Clause, ...] = ()
    history: tuple[tuple[np.ndarray | None, np.ndarray, int], ...] = ()
    contradiction: bool = False

    @property
    def dim(self) -> int:
        return self.lo.size

    def in_box(self, c) -> bool:
        c = np.asarray(c)
        return bool(np.all(c > self.lo) and np.all(c < self.hi))

    def feasible(self, c) -> bool:
        """Does ``c`` satisfy the box and every clause (strictly)?"""
        return not self.contradiction and self.in_box(c) and all(cl.satisfied(c) for cl in self.clauses)

    def to_dict(self) -> dict:
        return {
            "lo": self.lo.tolist(),
            "hi": self.hi.tolist(),
            "eps_t": list(self.eps_t),
            "clauses": [
                {
                    "condition": cl.condition,
                    "x": cl.x.tolist(),
                    "atoms": [{"grad": a.grad.tolist(), "offset": a.offset} for a in cl.atoms],
                }
                for cl in self.clauses
            ],
        }


def init_cspace(
    instance: ProblemInstance,
    eps_t: Sequence[float] | None = None,
    decrease_region: str = "W",
) -> CSpace:
    """Initial box over ``(a, beta)`` from the template bounds; no clauses."""
    t = instance.template
    lo = np.array(list(t.coef_lo) + [t.beta_lo])
    hi = np.array(list(t.coef_hi) + [t.beta_hi])
    if eps_t is None:
        eps_t = (instance.eps_t1, instance.eps_t1, instance.eps_t3)
    eps_t = tuple(float(e) for e in eps_t)
    if len(eps_t) != 3 or min(eps_t) <= 0:
        raise ValueError("eps_t must be three positive numbers")
    return CSpace(lo, hi, build_conditions(instance, decrease_region), eps_t)


def _clause_for(cond: Condition, x: np.ndarray, eps: float) -> Clause | None:
    """Clause for ``cond`` at ``x``; ``None`` if it is trivially true."""
    atoms = []
    for F in cond.atoms:
        offset, grad = F.at(x)
        offset += eps
        if np.max(np.abs(grad), initial=0.0) <= _ZERO_GRAD:
            if offset < 0:
                return None
            continue
        atoms.append(AffineAtom(grad, float(offset)))
    return Clause(tuple(atoms), cond.index, x)


def refine(
    cs: CSpace,
    x,
    tag: int | None = None,
    candidate=None,
    eps_t: Sequence[float] | None = None,
) -> CSpace:
    """Add the clauses of every condition whose region contains ``x``.

    ``tag`` is the condition the witness was found for; it must be one of the
    conditions whose region holds ``x``.
    """
    x = np.asarray(x, dtype=float)
    eps = cs.eps_t if eps_t is None else tuple(eps_t)
    hits = [cond for cond in cs.conditions if cond.contains(x)]
    if not hits:
        raise RefinementError(f"witness {x.tolist()} lies in no condition region")
    if tag is not None and tag not in {c.index for c in hits}:
        raise RefinementError(f"witness {x.tolist()} is not in the region of condition {tag}")
    clauses = list(cs.clauses)
    contradiction = cs.contradiction
    for cond in hits:
        cl = _clause_for(cond, x, eps[cond.index - 1])
        if cl is None:
            continue
        if not cl.atoms:
            contradiction = True
        clauses.append(cl)
    cand = None if candidate is None else np.asarray(candidate, dtype=float)
    return dataclasses.replace(
        cs,
        clauses=tuple(clauses),
        history=cs.history + ((cand, x, tag or hits[0].index),),
        contradiction=contradiction,
    )


def rebuild(cs: CSpace, eps_t: Sequence[float]) -> CSpace:
    """Same witnesses, clauses regenerated with new strengthening constants."""
    fresh = dataclasses.replace(cs, clauses=(), history=(), contradiction=False, eps_t=tuple(float(e) for e in eps_t))
    for cand, x, tag in cs.history:
        fresh = refine(fresh, x, tag, cand)
    return fresh


# -- candidate selection ---------------------------------------------------------------


class _Solver:
    """Max-slack LPs over atom subsets, memoized by atom identity."""

    def __init__(self, cs: CSpace):
        self.lo, self.hi = cs.lo, cs.hi
        self.lp_calls = 0
        self._memo: dict[frozenset, object] = {}

    def solve(self, atoms: Sequence[AffineAtom]):
        key = frozenset(id(a) for a in atoms)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        self.lp_calls += 1
        if not atoms:
            res = max_slack(np.zeros((0, self.lo.size)), np.zeros(0), self.lo, self.hi)
        else:
            A = np.array([a.grad for a in atoms])
            b = np.array([a.offset for a in atoms])
            res = max_slack(A, b, self.lo, self.hi)
        self._memo[key] = res
        return res


def pick_candidate(cs: CSpace, stats: dict | None = None) -> np.ndarray | None:
    """A strictly feasible point of the candidate space, or ``None`` (EMPTY).

    Depth-first search over atom selections. A node holds one chosen atom per
    clause decided so far (unit clauses are always chosen) and the max-slack
    point of that conjunction. If the point already satisfies every clause,
    the search stops; otherwise it branches on the first violated clause in
    insertion order, trying its atoms in stored (mode) order. Branches whose
    conjunction has no positive slack are cut.

    The answer is then re-centred: each clause contributes its atom with the
    most negative value at the point, and the returned
    candidate is the max-slack point of that full selection. The search is
    complete because every feasible point satisfies some atom of each clause.
    """
    if cs.contradiction:
        return None
    solver = _Solver(cs)
    units = [cl.atoms[0] for cl in cs.clauses if len(cl.atoms) == 1]
    multi = [cl for cl in cs.clauses if len(cl.atoms) > 1]

    def dfs(chosen: list[AffineAtom], decided: frozenset):
        res = solver.solve(chosen)
        if res.slack <= SLACK_TOL:
            return None
        for k, cl in enumerate(multi):
            if k not in decided and not cl.satisfied(res.point):
                break
        else:
            return res.point
        for atom in cl.atoms:
            point = dfs(chosen + [atom], decided | {k})
            if point is not None:
                return point
        return None

    point = dfs(list(units), frozenset())
    if point is not None:
        selection = list(units) + [min(cl.atoms, key=lambda a: a.value(point)) for cl in multi]
        centred = solver.solve(selection)
        if centred.slack > SLACK_TOL and cs.feasible(centred.point):
            point = centred.point
    if stats is not None:
        stats["lp_calls"] = stats.get("lp_calls", 0) + solver.lp_calls
    if point is not None and not cs.feasible(point):
        raise RuntimeError("max-slack point failed the strict re-check")
    return point


# -- exclusion radius --------------------------------------------------------------------


def atom_gradient_bound(F: ParamPolynomial, regions: Sequence[Region]) -> float:
    """Interval bound on ``sup_x |grad_c F(x, c)|`` over the regions' boxes."""
    best = 0.0
    for r in regions:
        lo = np.array([r.box.lo])
        hi = np.array([r.box.hi])
        total = 0.0
        for part in F.parts:
            l, h = enclose_many(part, lo, hi)
            total += max(abs(l[0]), abs(h[0])) ** 2
        best = max(best, float(np.sqrt(total)))
    return best


def radius_from_bounds(eps_t: float, bounds: Sequence[float], residuals: Sequence[float] | None = None) -> float:
    """``min_k (eps_t + min(r_k, 0)) / M_k``, clipped at zero."""
    if residuals is None:
        residuals = [0.0] * len(bounds)
    eta = np.inf
    for M, r in zip(bounds, residuals):
        room = eps_t + min(float(r), 0.0)
        if room <= 0:
            return 0.0
        if M > 0:
            eta = min(eta, room / M)
    # guard the sphere itself against rounding
    return float(eta * (1 - 1e-9)) if np.isfinite(eta) else float(eta)


def exclusion_radius(cs: CSpace, clause: Clause, candidate=None) -> float:
    """Radius of a ball around the refuted candidate that the clause removes.

    With ``M_k`` bounding the parameter-gradient of atom ``k`` over its
    region, every ``c`` within ``(eps_T + r_k) / M_k`` of the candidate keeps
    atom ``k`` at or above ``-eps_T``, so the clause fails there. ``r_k`` is
    the atom's value at the candidate (never counted above zero).
    """
    cond = cs.conditions[clause.condition - 1]
    eps = cs.eps_t[clause.condition - 1]
    live = []
    for F in cond.atoms:
        _, grad = F.at(clause.x)
        if np.max(np.abs(grad), initial=0.0) > _ZERO_GRAD:
            live.append(F)
    bounds = [atom_gradient_bound(F, cond.regions) for F in live]
    residuals = None
    if candidate is not None:
        c = np.asarray(candidate, dtype=float)
        residuals = [F.instantiate(c).eval(clause.x) for F in live]
    return radius_from_bounds(eps, bounds, residuals)
