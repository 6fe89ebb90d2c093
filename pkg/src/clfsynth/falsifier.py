"""Interval branch-and-bound for polynomial constraint systems.

``delta_check`` decides ``exists x in region: p_k(x) >= b_k + gamma for all k``
in the delta-satisfiability sense:

* ``Unsat`` is sound. A box is discarded only when an interval enclosure
  proves some constraint strictly below its bound, or when the box lies
  outside the region.
* ``Witness`` carries a point of the region where every constraint holds to
  within ``delta``. Each surviving box is probed at its midpoint and at its
  lowest and highest corners, and the first probe within ``delta`` of every
  bound is returned. Boxes narrower than ``delta`` that survive pruning are
  always probed, so a satisfiable query is found by the time boxes reach
  that width (up to the pruning slack).

Boxes are processed a whole depth level at a time (numpy-vectorized), in
creation order, so the witness returned is the first one in (depth, creation
index) order and results are reproducible.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .interval import enclose_many
from .model import Region
from .poly import Polynomial

__all__ = [
    "NlQuery",
    "Witness",
    "Unsat",
    "FalsifierUnknown",
    "delta_check",
    "bound_max",
    "DEFAULT_BUDGET",
]

DEFAULT_BUDGET = 10_000_000
# largest number of live boxes held at once
MAX_FRONTIER = 2_000_000
_REL = 1e-12


class FalsifierUnknown(RuntimeError):
    """Box budget or deadline exhausted before a verdict was reached."""

    def __init__(self, message: str, boxes: int):
        super().__init__(message)
        self.boxes = boxes


@dataclass(frozen=True)
class NlQuery:
    region: Region
    constraints: tuple[tuple[Polynomial, float], ...]
    delta: float = 1e-4
    gamma: float = 0.0

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if not self.gamma >= 0:
            raise ValueError("gamma must be nonnegative")
        object.__setattr__(self, "constraints", tuple((p, float(b)) for p, b in self.constraints))

    @property
    def bounds(self) -> np.ndarray:
        return np.array([b + self.gamma for _, b in self.constraints])


@dataclass(frozen=True)
class Witness:
    x: np.ndarray
    residuals: np.ndarray
    boxes: int = 0
    exact: bool = True

    @property
    def sat(self) -> bool:
        return True


@dataclass(frozen=True)
class Unsat:
    boxes: int = 0

    @property
    def sat(self) -> bool:
        return False


# -- region geometry on stacks of boxes ------------------------------------------------


def _boxes_outside(region: Region, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Mask of boxes provably disjoint from the region."""
    out = np.zeros(lo.shape[0], dtype=bool)
    for ball in region.include:
        c = np.array(ball.center)
        near = np.clip(c, lo, hi) - c
        d2 = np.einsum("ij,ij->i", near, near)
        out |= d2 > ball.radius**2 * (1 + _REL) + 1e-300
    for ball in region.exclude:
        c = np.array(ball.center)
        far = np.maximum(np.abs(lo - c), np.abs(hi - c))
        d2 = np.einsum("ij,ij->i", far, far)
        out |= d2 < ball.radius**2 * (1 - _REL)
    return out


def _points_inside(region: Region, X: np.ndarray) -> np.ndarray:
    ok = np.all((X >= np.array(region.box.lo)) & (X <= np.array(region.box.hi)), axis=1)
    for ball in region.include:
        d = X - np.array(ball.center)
        ok &= np.einsum("ij,ij->i", d, d) <= ball.radius**2
    for ball in region.exclude:
        d = X - np.array(ball.center)
        ok &= np.einsum("ij,ij->i", d, d) >= ball.radius**2
    return ok


def _fallback_points(region: Region, lo: np.ndarray, hi: np.ndarray) -> list[np.ndarray]:
    """Extra in-box candidates for tiny boxes whose midpoint left the region."""
    pts = []
    for ball in region.include:
        pts.append(np.clip(np.array(ball.center), lo, hi))
    for ball in region.exclude:
        c = np.array(ball.center)
        pts.append(np.where(np.abs(lo - c) > np.abs(hi - c), lo, hi))
    return pts


def _split(lo: np.ndarray, hi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Bisect every box along its widest dimension; children stay adjacent."""
    width = hi - lo
    j = np.argmax(width, axis=1)
    rows = np.arange(lo.shape[0])
    mid = 0.5 * (lo[rows, j] + hi[rows, j])
    nlo = np.repeat(lo, 2, axis=0)
    nhi = np.repeat(hi, 2, axis=0)
    nhi[2 * rows, j] = mid
    nlo[2 * rows + 1, j] = mid
    return nlo, nhi


def _residuals(polys, bounds, X: np.ndarray) -> np.ndarray:
    if not polys:
        return np.zeros((X.shape[0], 0))
    return np.column_stack([p.eval_many(X) - b for p, b in zip(polys, bounds)])


def _initial(region: Region) -> tuple[np.ndarray, np.ndarray]:
    return np.array([region.box.lo], dtype=float), np.array([region.box.hi], dtype=float)


def _check_budget(explored: int, live: int, budget: int, deadline: float | None):
    if explored > budget:
        raise FalsifierUnknown(f"box budget of {budget} exhausted", explored)
    if live > MAX_FRONTIER:
        raise FalsifierUnknown(f"frontier exceeded {MAX_FRONTIER} boxes", explored)
    if deadline is not None and time.monotonic() > deadline:
        raise FalsifierUnknown("deadline reached", explored)


def delta_check(
    q: NlQuery,
    budget: int = DEFAULT_BUDGET,
    deadline: float | None = None,
) -> Witness | Unsat:
    """Search the region for a point satisfying every constraint (up to delta)."""
    region = q.region
    polys = [p for p, _ in q.constraints]
    bounds = q.bounds
    lo, hi = _initial(region)
    explored = 0
    while lo.shape[0]:
        explored += lo.shape[0]
        _check_budget(explored, lo.shape[0], budget, deadline)

        keep = ~_boxes_outside(region, lo, hi)
        for p, b in zip(polys, bounds):
            if not keep.any():
                break
            _, phi = enclose_many(p, lo[keep], hi[keep])
            sub = phi >= b
            keep[np.nonzero(keep)[0][~sub]] = False
        lo, hi = lo[keep], hi[keep]
        if not lo.shape[0]:
            break

        mid = 0.5 * (lo + hi)
        small = np.max(hi - lo, axis=1) < q.delta
        # any probe point meeting every bound to within delta is a witness;
        # midpoints first, then the lowest and highest corners, since
        # solution sets of measure zero often lie on split planes
        for probe in (mid, lo, hi):
            res = _residuals(polys, bounds, probe)
            hit = _points_inside(region, probe) & np.all(res >= -q.delta, axis=1)
            if hit.any():
                k = int(np.argmax(hit))
                return Witness(probe[k].copy(), res[k].copy(), explored, bool(np.all(res[k] >= 0)))
        inside = _points_inside(region, mid)
        # tiny boxes whose midpoint fell outside the region: try other points
        stray = np.nonzero(small & ~inside)[0]
        for k in stray:
            for x in _fallback_points(region, lo[k], hi[k]):
                if region.contains(x):
                    r = np.array([p.eval(x) - b for p, b in zip(polys, bounds)])
                    if np.all(r >= -q.delta):
                        return Witness(x, r, explored, bool(np.all(r >= 0)))
        lo, hi = _split(lo, hi)
    return Unsat(explored)


def _gradient_bound(p: Polynomial, region: Region) -> float:
    lo, hi = _initial(region)
    total = 0.0
    for i in range(region.dim):
        l, h = enclose_many(p.partial(i), lo, hi)
        total += max(abs(l[0]), abs(h[0])) ** 2
    return float(np.sqrt(total))


def bound_max(
    p: Polynomial,
    region: Region | Sequence[Region],
    delta: float = 1e-4,
    constraints: Sequence[tuple[Polynomial, float]] = (),
    budget: int = DEFAULT_BUDGET,
    deadline: float | None = None,
) -> float:
    """Rigorous upper bound ``U`` on ``max p`` over the region (and constraints).

    ``U`` exceeds the true maximum by at most ``delta * (1 + L)`` where ``L``
    bounds the gradient norm of ``p`` over the region's box. Returns ``-inf``
    for an empty region.
    """
    if not isinstance(region, Region):
        return max((bound_max(p, r, delta, constraints, budget, deadline) for r in region), default=-np.inf)
    tol = delta * (1.0 + _gradient_bound(p, region))
    cpolys = [c for c, _ in constraints]
    cbounds = [float(b) for _, b in constraints]
    lo, hi = _initial(region)
    best = -np.inf
    retired = -np.inf
    explored = 0
    while lo.shape[0]:
        explored += lo.shape[0]
        _check_budget(explored, lo.shape[0], budget, deadline)
        keep = ~_boxes_outside(region, lo, hi)
        for c, b in zip(cpolys, cbounds):
            _, chi = enclose_many(c, lo, hi)
            keep &= chi >= b
        lo, hi = lo[keep], hi[keep]
        if not lo.shape[0]:
            break
        _, phi = enclose_many(p, lo, hi)
        mid = 0.5 * (lo + hi)
        feas = _points_inside(region, mid)
        for c, b in zip(cpolys, cbounds):
            feas &= c.eval_many(mid) >= b
        if feas.any():
            best = max(best, float(p.eval_many(mid[feas]).max()))
        live = phi >= best
        # boxes below the precision are charged their enclosure and retired
        small = np.max(hi - lo, axis=1) < delta
        done = live & ((phi <= best + tol) | small)
        if done.any():
            retired = max(retired, float(phi[done].max()))
        live &= ~done
        lo, hi = lo[live], hi[live]
        if lo.shape[0]:
            lo, hi = _split(lo, hi)
    return max(retired, best)
