"""The three CLF condition families as parametric polynomials.

Parameters are ``c = (a_1, ..., a_m, beta)``. Each family ``j`` is a region
``R_j`` and a list of atoms ``F_{j,k}(x, c)``; the requirement is

    for all x in R_j:  OR_k  F_{j,k}(x, c) < 0

1. boundary of S minus G:  ``beta - V(x, a)``
2. I minus G:              ``V(x, a) - beta``
3. S minus G:              ``Vdot_q(x, a) + eps_Q`` for every mode ``q``, plus
   ``beta - V(x, a)`` when the decrease is only required on the sublevel
   set ``W = {V <= beta}`` (the default).

A counterexample for a candidate ``c`` is a point of ``R_j`` where every atom
is ``>= 0``.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import ProblemInstance, Region
from .poly import ParamPolynomial, lie

__all__ = ["Condition", "build_conditions", "clf_template", "DECREASE_REGIONS"]

DECREASE_REGIONS = ("W", "S")


@dataclass(frozen=True)
class Condition:
    index: int
    name: str
    regions: tuple[Region, ...]
    atoms: tuple[ParamPolynomial, ...]

    def contains(self, x) -> bool:
        return any(r.contains(x) for r in self.regions)

    @property
    def vacuous(self) -> bool:
        return not self.regions


def clf_template(instance: ProblemInstance) -> tuple[ParamPolynomial, ParamPolynomial]:
    """``V(x, a)`` and ``beta`` as parametric polynomials over ``c = (a, beta)``."""
    m = instance.template.size
    V = ParamPolynomial.template(instance.template.basis, extra_params=1)
    beta = ParamPolynomial.parameter(m, m + 1)
    return V, beta


def build_conditions(instance: ProblemInstance, decrease_region: str = "W") -> tuple[Condition, Condition, Condition]:
    if decrease_region not in DECREASE_REGIONS:
        raise ValueError(f"decrease_region must be one of {DECREASE_REGIONS}")
    V, beta = clf_template(instance)
    spec = instance.spec
    c1 = Condition(1, "boundary", tuple(spec.boundary_minus_goal), (beta - V,))
    init = spec.init_minus_goal
    c2 = Condition(2, "initial", (init,) if init is not None else (), (V - beta,))
    decrease = [lie(V, f) + instance.eps_q for f in instance.system.dynamics]
    if decrease_region == "W":
        decrease.append(beta - V)
    c3 = Condition(3, "decrease", (spec.safe_minus_goal,), tuple(decrease))
    return c1, c2, c3
