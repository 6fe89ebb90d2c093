"""Counterexample-guided synthesis of a control Lyapunov function.

The loop alternates two solvers:

1. ``pick_candidate`` proposes parameters ``c = (a, beta)`` from the current
   candidate space;
2. ``counterexample`` searches the state space for a point where some
   condition family fails for ``c``, asking for a large violation first
   (``gamma``) and relaxing it level by level down to zero.

Each witness refines the candidate space. When the space runs empty the
strengthening constants are halved and the clauses rebuilt from the
recorded witnesses, a bounded number of times.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .conditions import Condition, build_conditions
from .cspace import CSpace, init_cspace, pick_candidate, rebuild, refine
from .falsifier import DEFAULT_BUDGET, FalsifierUnknown, NlQuery, Witness, bound_max, delta_check
from .model import ProblemInstance
from .poly import Polynomial, lie

__all__ = [
    "CegisConfig",
    "CegisResult",
    "Counterexample",
    "Verification",
    "counterexample",
    "verify_clf",
    "synthesize",
    "default_seeds",
    "choose_level",
    "STATUSES",
]

STATUSES = ("Success", "CSpaceEmpty", "Budget", "FalsifierUnknown")
DEFAULT_GAMMAS = (1.0, 0.1, 0.01, 0.0)


@dataclass(frozen=True)
class CegisConfig:
    eps_t: tuple[float, float, float]
    delta: float
    gamma_schedule: tuple[float, ...] = DEFAULT_GAMMAS
    max_iterations: int = 500
    seeds: tuple[tuple[float, ...], ...] | None = None
    halving_rounds: int = 2
    decrease_region: str = "W"
    timeout: float | None = None
    box_budget: int = DEFAULT_BUDGET

    def __post_init__(self):
        eps = tuple(float(e) for e in self.eps_t)
        if len(eps) != 3 or min(eps) <= 0:
            raise ValueError("eps_t must be three positive numbers")
        object.__setattr__(self, "eps_t", eps)
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        g = tuple(float(v) for v in self.gamma_schedule)
        if not g or g[-1] != 0 or any(a <= b for a, b in zip(g, g[1:])) or min(g) < 0:
            raise ValueError("gamma schedule must be strictly descending and end at 0")
        object.__setattr__(self, "gamma_schedule", g)
        if self.halving_rounds < 0 or self.max_iterations < 0:
            raise ValueError("halving_rounds and max_iterations must be nonnegative")
        if self.seeds is not None:
            object.__setattr__(self, "seeds", tuple(tuple(float(v) for v in s) for s in self.seeds))

    @classmethod
    def for_instance(cls, inst: ProblemInstance, **overrides) -> "CegisConfig":
        """Run defaults stored with the problem, with keyword overrides."""
        base = dict(eps_t=(inst.eps_t1, inst.eps_t1, inst.eps_t3), delta=inst.delta)
        base.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**base)

    def to_dict(self) -> dict:
        return {
            "eps_t": list(self.eps_t),
            "delta": self.delta,
            "gamma_schedule": list(self.gamma_schedule),
            "max_iterations": self.max_iterations,
            "seeds": None if self.seeds is None else [list(s) for s in self.seeds],
            "halving_rounds": self.halving_rounds,
            "decrease_region": self.decrease_region,
            "timeout": self.timeout,
            "box_budget": self.box_budget,
        }


@dataclass(frozen=True)
class Counterexample:
    condition: int
    gamma: float
    witness: Witness
    region: int


@dataclass(frozen=True)
class Verification:
    """Outcome of checking all three families at ``gamma = 0``."""

    status: str  # "verified", "refuted" or "unknown"
    delta: float
    boxes: tuple[int, int, int] = (0, 0, 0)
    counterexample: Counterexample | None = None
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "verified"

    def to_dict(self) -> dict:
        d = {"status": self.status, "delta": self.delta, "boxes": list(self.boxes)}
        if self.counterexample is not None:
            d["condition"] = self.counterexample.condition
            d["witness"] = self.counterexample.witness.x.tolist()
        if self.message:
            d["message"] = self.message
        return d


@dataclass
class CegisResult:
    status: str
    instance: str
    a: list[float] | None = None
    beta: float | None = None
    verification: Verification | None = None
    iterations: int = 0
    witnesses: dict[int, int] = field(default_factory=lambda: {1: 0, 2: 0, 3: 0})
    eps_t: tuple[float, float, float] | None = None
    log: list[dict] = field(default_factory=list)
    timing: dict[str, float] = field(default_factory=lambda: {"candidate": 0.0, "falsifier": 0.0, "total": 0.0})
    boxes: int = 0
    lp_calls: int = 0
    message: str = ""
    cspace: CSpace | None = field(default=None, repr=False)

    @property
    def success(self) -> bool:
        return self.status == "Success"

    def clf(self, inst: ProblemInstance) -> Polynomial:
        if self.a is None:
            raise ValueError("no CLF in this result")
        return inst.template.polynomial(self.a)

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "instance": self.instance,
            "a": self.a,
            "beta": self.beta,
            "verification": None if self.verification is None else self.verification.to_dict(),
            "iterations": self.iterations,
            "witnesses": {str(k): v for k, v in self.witnesses.items()},
            "eps_t": None if self.eps_t is None else list(self.eps_t),
            "boxes": self.boxes,
            "lp_calls": self.lp_calls,
            "message": self.message,
            "log": self.log,
            "timing": dict(self.timing),
        }


def default_seeds(inst: ProblemInstance) -> list[np.ndarray]:
    """Every corner of ``S`` and the centre of ``I``."""
    return inst.spec.S.corners() + [np.array(inst.spec.I.center)]


# -- counterexample search ------------------------------------------------------------


def _gamma_scale(cond: Condition, inst: ProblemInstance) -> float:
    return inst.eps_q if cond.index == 3 else 1.0


def _queries(cond: Condition, c: np.ndarray, delta: float, gamma: float) -> list[NlQuery]:
    polys = tuple((F.instantiate(c), 0.0) for F in cond.atoms)
    return [NlQuery(r, polys, delta, gamma) for r in cond.regions]


def counterexample(
    inst: ProblemInstance,
    c,
    gammas: Sequence[float] = DEFAULT_GAMMAS,
    delta: float | None = None,
    conditions: Sequence[Condition] | None = None,
    budget: int = DEFAULT_BUDGET,
    deadline: float | None = None,
    stats: dict | None = None,
) -> Counterexample | None:
    """First witness at the largest violation level, or ``None`` if verified.

    For each ``gamma`` (scaled by ``eps_Q`` for the decrease family) the
    families are queried in order 1, 2, 3 and, inside a family, region by
    region. ``None`` means every query was refuted at ``gamma = 0``.
    Falsifier budget exhaustion propagates as :class:`FalsifierUnknown`.
    """
    c = np.asarray(c, dtype=float)
    delta = inst.delta if delta is None else delta
    if conditions is None:
        conditions = build_conditions(inst)
    if stats is None:
        stats = {}
    per_cond = stats.setdefault("boxes_by_condition", [0, 0, 0])
    for gamma in gammas:
        for cond in conditions:
            g = gamma * _gamma_scale(cond, inst)
            for k, q in enumerate(_queries(cond, c, delta, g)):
                try:
                    v = delta_check(q, budget=budget, deadline=deadline)
                except FalsifierUnknown as exc:
                    stats["boxes"] = stats.get("boxes", 0) + exc.boxes
                    raise
                stats["boxes"] = stats.get("boxes", 0) + v.boxes
                per_cond[cond.index - 1] += v.boxes
                if isinstance(v, Witness):
                    return Counterexample(cond.index, g, v, k)
    return None


def verify_clf(
    inst: ProblemInstance,
    a,
    beta: float,
    delta: float | None = None,
    decrease_region: str = "W",
    budget: int = DEFAULT_BUDGET,
    deadline: float | None = None,
) -> Verification:
    """Check the three conditions for ``V = sum a_i m_i`` and level ``beta``."""
    delta = inst.delta if delta is None else delta
    c = np.concatenate([np.asarray(a, dtype=float), [float(beta)]])
    stats: dict = {}
    conds = build_conditions(inst, decrease_region)
    try:
        cex = counterexample(inst, c, (0.0,), delta, conds, budget, deadline, stats)
    except FalsifierUnknown as exc:
        return Verification("unknown", delta, tuple(stats.get("boxes_by_condition", (0, 0, 0))), None, str(exc))
    boxes = tuple(stats["boxes_by_condition"])
    if cex is None:
        return Verification("verified", delta, boxes)
    return Verification("refuted", delta, boxes, cex)


def choose_level(
    inst: ProblemInstance,
    V: Polynomial,
    delta: float | None = None,
    fraction: float = 0.95,
    budget: int = DEFAULT_BUDGET,
) -> tuple[float, float, float]:
    """A level ``beta`` for a fixed ``V``, with the bracket it was taken from.

    The lower end bounds ``V`` from above on ``I \\ G``. The upper end bounds
    ``V`` from below on the boundary of ``S`` and on the part of ``S \\ G``
    where no mode decreases ``V`` fast enough, so every ``beta`` strictly
    inside keeps that part outside the sublevel set. Returns
    ``(beta, lower, upper)`` with ``beta = lower + fraction * (upper - lower)``;
    raises ``ValueError`` on an empty bracket.
    """
    delta = inst.delta if delta is None else delta
    spec = inst.spec
    init = spec.init_minus_goal
    lower = bound_max(V, init, delta, budget=budget) if init is not None else 0.0
    upper = -bound_max(-V, spec.boundary_minus_goal, delta, budget=budget)
    stall = [(lie(V, f), -inst.eps_q) for f in inst.system.dynamics]
    bad = bound_max(-V, spec.safe_minus_goal, delta, constraints=stall, budget=budget)
    upper = min(upper, -bad)
    if not lower < upper:
        raise ValueError(f"no admissible level: lower {lower:.6g} >= upper {upper:.6g}")
    return lower + fraction * (upper - lower), lower, upper


# -- main loop ---------------------------------------------------------------------------


def _split_c(c: np.ndarray) -> tuple[list[float], float]:
    return [float(v) for v in c[:-1]], float(c[-1])


def synthesize(
    inst: ProblemInstance,
    config: CegisConfig | None = None,
    on_refine: Callable[[CSpace, CSpace, np.ndarray, Counterexample], None] | None = None,
) -> CegisResult:
    """Run the loop until a verified CLF, an empty candidate space or a budget."""
    cfg = config or CegisConfig.for_instance(inst)
    t_start = time.perf_counter()
    deadline = None if cfg.timeout is None else time.monotonic() + cfg.timeout
    res = CegisResult(status="Budget", instance=inst.name, eps_t=cfg.eps_t)
    cs = init_cspace(inst, cfg.eps_t, cfg.decrease_region)
    seeds = default_seeds(inst) if cfg.seeds is None else [np.array(s) for s in cfg.seeds]
    for x in seeds:
        if any(cond.contains(x) for cond in cs.conditions):
            cs = refine(cs, x)
    eps = cfg.eps_t
    rounds = 0
    stats: dict = {}
    cand_stats: dict = {}

    def finish(status: str, message: str = "") -> CegisResult:
        res.status = status
        res.message = message
        res.cspace = cs
        res.eps_t = eps
        res.boxes = stats.get("boxes", 0)
        res.lp_calls = cand_stats.get("lp_calls", 0)
        res.timing["total"] = time.perf_counter() - t_start
        return res

    while True:
        if deadline is not None and time.monotonic() > deadline:
            return finish("Budget", "timeout")
        t0 = time.perf_counter()
        c = pick_candidate(cs, cand_stats)
        res.timing["candidate"] += time.perf_counter() - t0
        if c is None:
            if rounds < cfg.halving_rounds:
                rounds += 1
                eps = tuple(e / 2 for e in eps)
                t0 = time.perf_counter()
                cs = rebuild(cs, eps)
                res.timing["candidate"] += time.perf_counter() - t0
                res.log.append({"event": "halve", "eps_t": list(eps)})
                continue
            return finish("CSpaceEmpty", "no candidate left")
        if res.iterations >= cfg.max_iterations:
            return finish("Budget", "iteration limit")
        t0 = time.perf_counter()
        try:
            cex = counterexample(
                inst, c, cfg.gamma_schedule, cfg.delta, cs.conditions, cfg.box_budget, deadline, stats
            )
        except FalsifierUnknown as exc:
            res.timing["falsifier"] += time.perf_counter() - t0
            if str(exc).startswith("deadline"):
                return finish("Budget", "timeout")
            return finish("FalsifierUnknown", str(exc))
        res.timing["falsifier"] += time.perf_counter() - t0
        a, beta = _split_c(c)
        if cex is None:
            res.a, res.beta = a, beta
            res.verification = Verification("verified", cfg.delta, tuple(stats["boxes_by_condition"]))
            res.log.append({"iteration": res.iterations, "candidate": c.tolist(), "verified": True})
            return finish("Success")
        res.iterations += 1
        res.witnesses[cex.condition] += 1
        w = cex.witness
        cond = cs.conditions[cex.condition - 1]
        values = np.array([F.instantiate(c).eval(w.x) for F in cond.atoms])
        if np.any(values < cex.gamma - cfg.delta) or not cond.contains(w.x):
            raise RuntimeError(f"falsifier returned an invalid witness {w.x.tolist()}")
        res.log.append(
            {
                "iteration": res.iterations,
                "candidate": c.tolist(),
                "condition": cex.condition,
                "gamma": cex.gamma,
                "witness": w.x.tolist(),
                "exact": w.exact,
            }
        )
        t0 = time.perf_counter()
        new = refine(cs, w.x, cex.condition, c)
        res.timing["candidate"] += time.perf_counter() - t0
        if new.feasible(c):
            raise RuntimeError("refinement left the refuted candidate feasible")
        if on_refine is not None:
            on_refine(cs, new, c, cex)
        cs = new

