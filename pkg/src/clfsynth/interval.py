"""Interval enclosures of polynomials over boxes.

Polynomials are enclosed term by term: each variable power uses the
even/odd power rule (``x^2`` over ``[-1, 1]`` is ``[0, 1]``), distinct
variables are combined with plain interval products, and the final sum is
widened by a floating point error bound (a directed nudge, not certified
rounding).

``enclose_many`` is the workhorse used by the branch-and-bound code: it
evaluates one polynomial over a whole stack of boxes at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .poly import Polynomial

__all__ = ["Interval", "interval_eval", "enclose_many", "ipow", "imul"]

# unit roundoff with a safety factor of two
_U = 2.0 * np.finfo(float).eps


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if math.isnan(self.lo) or math.isnan(self.hi) or self.lo > self.hi:
            raise ValueError(f"invalid interval [{self.lo}, {self.hi}]")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def __contains__(self, v: float) -> bool:
        return self.lo <= v <= self.hi

    def __add__(self, other):
        other = _as_interval(other)
        return Interval(self.lo + other.lo, self.hi + other.hi)

    __radd__ = __add__

    def __neg__(self):
        return Interval(-self.hi, -self.lo)

    def __sub__(self, other):
        return self + (-_as_interval(other))

    def __mul__(self, other):
        other = _as_interval(other)
        p = (self.lo * other.lo, self.lo * other.hi, self.hi * other.lo, self.hi * other.hi)
        return Interval(min(p), max(p))

    __rmul__ = __mul__

    def __pow__(self, k: int):
        lo, hi = ipow(np.array([self.lo]), np.array([self.hi]), k)
        return Interval(float(lo[0]), float(hi[0]))


def _as_interval(v) -> Interval:
    return v if isinstance(v, Interval) else Interval(float(v), float(v))


def ipow(lo: np.ndarray, hi: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Tight enclosure of ``x^k`` for ``x`` in ``[lo, hi]`` (elementwise)."""
    if k == 0:
        return np.ones_like(lo), np.ones_like(hi)
    if k == 1:
        return lo, hi
    a, b = lo**k, hi**k
    if k % 2:
        return a, b
    straddle = (lo < 0) & (hi > 0)
    plo = np.where(straddle, 0.0, np.minimum(a, b))
    phi = np.maximum(a, b)
    return plo, phi


def imul(alo, ahi, blo, bhi):
    p1, p2, p3, p4 = alo * blo, alo * bhi, ahi * blo, ahi * bhi
    return np.minimum(np.minimum(p1, p2), np.minimum(p3, p4)), np.maximum(np.maximum(p1, p2), np.maximum(p3, p4))


def enclose_many(p: Polynomial, lo: np.ndarray, hi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Enclose ``p`` over each box ``[lo[k], hi[k]]``; returns ``(lo, hi)`` arrays."""
    lo = np.atleast_2d(lo)
    hi = np.atleast_2d(hi)
    N, n = lo.shape
    coefs, exps = p.packed(n)
    out_lo = np.zeros(N)
    out_hi = np.zeros(N)
    mag = np.zeros(N)
    if coefs.size == 0:
        return out_lo, out_hi
    cache: dict[tuple[int, int], tuple[np.ndarray, np.ndarray]] = {}
    for c, e in zip(coefs, exps):
        tlo = thi = None
        for j in np.nonzero(e)[0]:
            key = (int(j), int(e[j]))
            if key not in cache:
                cache[key] = ipow(lo[:, j], hi[:, j], int(e[j]))
            plo, phi = cache[key]
            if tlo is None:
                tlo, thi = plo, phi
            else:
                tlo, thi = imul(tlo, thi, plo, phi)
        if tlo is None:
            out_lo += c
            out_hi += c
            mag += abs(c)
            continue
        if c >= 0:
            tlo, thi = c * tlo, c * thi
        else:
            tlo, thi = c * thi, c * tlo
        out_lo += tlo
        out_hi += thi
        mag += np.maximum(np.abs(tlo), np.abs(thi))
    slack = (len(coefs) + p.degree + 2) * _U * mag + 1e-300
    return out_lo - slack, out_hi + slack


def interval_eval(p: Polynomial, box: Sequence[Interval]) -> Interval:
    """Sound enclosure of ``{p(x) : x in box}``."""
    if len(box) < p.nvars:
        raise ValueError(f"box has {len(box)} dimensions, polynomial needs {p.nvars}")
    lo = np.array([[b.lo for b in box]], dtype=float)
    hi = np.array([[b.hi for b in box]], dtype=float)
    if lo.shape[1] == 0:
        lo = hi = np.zeros((1, 1))
    l, h = enclose_many(p, lo, hi)
    return Interval(float(l[0]), float(h[0]))
