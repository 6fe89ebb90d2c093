"""Max-slack point of a system of strict linear inequalities inside a box.

Given rows ``A c + b < 0`` and bounds ``lo <= c <= hi`` we solve

    maximize s  subject to  A_k c + b_k <= -s * |A_k|,  lo + s <= c <= hi - s

with a dense tableau simplex. The optimal ``c`` is the centre of the
largest ball that fits in the feasible polytope (a Chebyshev centre), and the
strict system is feasible exactly when the optimal ``s`` is positive.

The slack variable is shifted (``s = t - T``) so that the all-slack basis is
feasible from the start; no phase one is needed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["MaxSlackResult", "max_slack", "simplex_max"]

_PIVOT_TOL = 1e-11


@dataclass(frozen=True)
class MaxSlackResult:
    slack: float
    point: np.ndarray
    pivots: int

    @property
    def feasible(self) -> bool:
        return self.slack > 0


def simplex_max(c: np.ndarray, M: np.ndarray, r: np.ndarray, max_pivots: int = 50_000) -> tuple[np.ndarray, float, int]:
    """Maximize ``c @ y`` subject to ``M y <= r``, ``y >= 0`` with ``r >= 0``.

    Dantzig pricing, switching to Bland's rule after a run of degenerate
    pivots so the method cannot cycle. The problem must be bounded.
    """
    m, n = M.shape
    if np.any(r < 0):
        raise ValueError("right-hand side must be nonnegative")
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = M
    T[:m, n : n + m] = np.eye(m)
    T[:m, -1] = r
    T[m, :n] = -c
    basis = list(range(n, n + m))
    pivots = 0
    degenerate_run = 0
    while True:
        obj = T[m, :-1]
        if degenerate_run > 50:
            cand = np.nonzero(obj < -_PIVOT_TOL)[0]
            if cand.size == 0:
                break
            j = int(cand[0])
        else:
            j = int(np.argmin(obj))
            if obj[j] >= -_PIVOT_TOL:
                break
        col = T[:m, j]
        pos = col > _PIVOT_TOL
        if not pos.any():
            raise ValueError("unbounded linear program")
        ratios = np.full(m, np.inf)
        ratios[pos] = T[:m, -1][pos] / col[pos]
        best = ratios.min()
        ties = np.nonzero(ratios <= best + 1e-14 * max(1.0, abs(best)))[0]
        i = int(min(ties, key=lambda k: basis[k])) if degenerate_run > 50 else int(ties[0])
        degenerate_run = degenerate_run + 1 if best <= 1e-14 else 0
        T[i] /= T[i, j]
        others = np.arange(m + 1) != i
        T[others] -= np.outer(T[others, j], T[i])
        basis[i] = j
        pivots += 1
        if pivots > max_pivots:
            raise RuntimeError("simplex pivot limit reached")
    y = np.zeros(n + m)
    for i, b in enumerate(basis):
        y[b] = T[i, -1]
    return y[:n], float(T[m, -1]), pivots


def max_slack(A: np.ndarray, b: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> MaxSlackResult:
    """Chebyshev centre of ``{c : A c + b < 0, lo < c < hi}``.

    Rows of ``A`` are normalized internally; zero rows must be filtered out
    by the caller.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    A = np.asarray(A, dtype=float).reshape(-1, lo.size)
    b = np.asarray(b, dtype=float).reshape(-1)
    d = lo.size
    norms = np.linalg.norm(A, axis=1)
    if np.any(norms == 0):
        raise ValueError("zero constraint row")
    An = A / norms[:, None]
    bn = b / norms
    width = hi - lo
    # c = lo + z, s = t - T
    off = An @ lo + bn
    shift = max(0.0, float(off.max(initial=0.0)))
    ident = np.eye(d)
    M = np.vstack(
        [
            np.hstack([An, np.ones((An.shape[0], 1))]),
            np.hstack([-ident, np.ones((d, 1))]),
            np.hstack([ident, np.ones((d, 1))]),
        ]
    )
    r = np.concatenate([shift - off, np.full(d, shift), width + shift])
    r = np.maximum(r, 0.0)
    obj = np.zeros(d + 1)
    obj[-1] = 1.0
    y, _, pivots = simplex_max(obj, M, r)
    z, t = y[:d], y[d]
    return MaxSlackResult(slack=t - shift, point=lo + z, pivots=pivots)
