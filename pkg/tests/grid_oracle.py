"""Brute-force grid evaluation used as an independent check on the falsifier."""

import numpy as np


def inside(region, pts):
    """Vectorized ``Region.contains``."""
    ok = np.all((pts >= region.box.lo) & (pts <= region.box.hi), axis=1)
    for b in region.include:
        ok &= np.sum((pts - b.center) ** 2, axis=1) <= b.radius**2
    for b in region.exclude:
        ok &= np.sum((pts - b.center) ** 2, axis=1) >= b.radius**2
    return ok


def grid_margins(region, constraints, k=200):
    """Smallest constraint margin at each point of a k x k grid inside the region.

    Degenerate box sides (faces) get a single grid coordinate.
    """
    lo, hi = np.array(region.box.lo), np.array(region.box.hi)
    axes = [np.linspace(l, h, k if h > l else 1) for l, h in zip(lo, hi)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, lo.size)
    pts = pts[inside(region, pts)]
    if not constraints:
        return pts, np.full(len(pts), np.inf)
    margins = np.min([p.eval_many(pts) - b for p, b in constraints], axis=0)
    return pts, margins
