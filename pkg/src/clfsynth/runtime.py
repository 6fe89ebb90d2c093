"""Controllers built from a verified CLF, and closed-loop simulation.

Given ``V`` and a level ``beta`` the switching rule keeps the current mode
while ``Vdot_q(x) < -eps_Q / lambda`` and otherwise jumps to the mode with
the most negative ``Vdot``. Bounding the second Lie derivative
``Vddot_q <= eps_1`` gives the time a freshly chosen mode needs before its
``Vdot`` can climb from ``-eps_Q`` to ``-eps_Q / lambda``:

    dwell_q = (lambda - 1) * eps_Q / (eps_1 * lambda)

The deployed controller is time-triggered: it evaluates the rule every
``tau = min_q dwell_q`` time units and holds the mode in between. Over one
period ``V`` changes by at most ``tau * eps_Q * (lambda - 3) / (2 lambda)``,
so sampled ``V`` strictly decreases for ``1 < lambda < 3``.

Simulation uses fixed-step RK4 in a numba kernel. The vector field of each
system is emitted as straight-line Python source and jitted once per process.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numba
import numpy as np

from .cegis import verify_clf
from .falsifier import DEFAULT_BUDGET, bound_max
from .model import ProblemInstance
from .poly import Polynomial, lie

__all__ = [
    "CertificateViolation",
    "ControllerSpec",
    "DwellTimes",
    "Trace",
    "RwsVerdict",
    "make_controller",
    "dwell",
    "ctrl",
    "simulate",
    "check_rws",
    "write_trace_csv",
    "rk4_flow",
    "REASONS",
]

# termination codes shared with the kernel
GOAL, EXIT, HORIZON, VIOLATION = 0, 1, 2, 3
REASONS = ("in goal", "left S", "horizon", "certificate violation")


class CertificateViolation(RuntimeError):
    """No mode decreases ``V`` at a point of ``W \\ G``."""


@dataclass(frozen=True)
class ControllerSpec:
    V: Polynomial
    beta: float
    eps_q: float
    lam: float
    vdot: tuple[Polynomial, ...]
    vddot: tuple[Polynomial, ...]
    modes: tuple[str, ...]
    S_lo: np.ndarray = field(repr=False)
    S_hi: np.ndarray = field(repr=False)
    G_center: np.ndarray = field(repr=False)
    G_radius: float = 0.0

    def in_goal(self, x) -> bool:
        d = np.asarray(x, dtype=float) - self.G_center
        return bool(d @ d <= self.G_radius**2)

    def in_safe(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.S_lo) and np.all(x <= self.S_hi))

    def in_w(self, x) -> bool:
        return self.in_safe(x) and self.V.eval(np.asarray(x, dtype=float)) <= self.beta


@dataclass(frozen=True)
class DwellTimes:
    eps1: tuple[float, ...]
    dwell: tuple[float, ...]
    tau: float
    horizon: float

    def to_dict(self) -> dict:
        return {"eps1": list(self.eps1), "dwell": list(self.dwell), "tau": self.tau, "horizon": self.horizon}


@dataclass
class Trace:
    """Samples every ``stride`` controller periods, at switches and at the end.

    After an S exit the last sample is mid-period. ``max_dv`` is the largest
    change of ``V`` over one period outside G, taken over every period.
    """

    t: np.ndarray
    mode: np.ndarray
    x: np.ndarray
    V: np.ndarray
    switch_times: np.ndarray
    reason: str
    h: float
    tau: float
    stride: int = 1
    max_dv: float = float("-inf")

    def __len__(self) -> int:
        return self.t.size


@dataclass(frozen=True)
class RwsVerdict:
    ok: bool
    reached_goal: bool
    stayed_in_safe: bool
    first_violation: float | None
    min_switch_gap: float
    v_decreasing: bool
    worst_rate: float
    reason: str

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def make_controller(
    inst: ProblemInstance,
    a: Sequence[float],
    beta: float,
    lam: float | None = None,
    verified: bool = False,
    delta: float | None = None,
) -> ControllerSpec:
    """Precompute ``Vdot_q`` and ``Vddot_q``; unverified certificates are rejected.

    Pass ``verified=True`` when ``(a, beta)`` comes from a successful
    synthesis run; otherwise the conditions are checked here.
    """
    lam = inst.lam if lam is None else float(lam)
    if not lam > 1:
        raise ValueError("lambda must be greater than 1")
    if not verified:
        v = verify_clf(inst, a, beta, delta)
        if not v.ok:
            raise CertificateViolation(f"candidate does not verify ({v.status})")
    V = inst.template.polynomial(a)
    vdot = tuple(lie(V, f) for f in inst.system.dynamics)
    vddot = tuple(lie(d, f) for d, f in zip(vdot, inst.system.dynamics))
    spec = inst.spec
    return ControllerSpec(
        V,
        float(beta),
        inst.eps_q,
        lam,
        vdot,
        vddot,
        inst.system.modes,
        np.array(spec.S.lo),
        np.array(spec.S.hi),
        np.array(spec.G.center),
        spec.G.radius,
    )


def dwell_from_bounds(eps1: Sequence[float], eps_q: float, lam: float, horizon: float) -> DwellTimes:
    dm = []
    for e in eps1:
        dm.append((lam - 1) * eps_q / (e * lam) if e > 0 else horizon)
    return DwellTimes(tuple(float(e) for e in eps1), tuple(dm), min(dm), horizon)


def dwell(
    inst: ProblemInstance,
    spec: ControllerSpec,
    delta: float = 1e-4,
    horizon: float = 100.0,
    region: str = "W",
    budget: int = DEFAULT_BUDGET,
) -> DwellTimes:
    """Minimum dwell times from rigorous upper bounds on ``Vddot_q``.

    ``region="W"`` bounds ``Vddot`` over ``W \\ G`` (the only place the
    controller acts); ``"S"`` uses all of ``S \\ G``.
    """
    if region not in ("W", "S"):
        raise ValueError("region must be 'W' or 'S'")
    cons = [(-spec.V, -spec.beta)] if region == "W" else []
    eps1 = [bound_max(p, inst.spec.safe_minus_goal, delta, cons, budget) for p in spec.vddot]
    return dwell_from_bounds(eps1, spec.eps_q, spec.lam, horizon)


def ctrl(spec: ControllerSpec, q: int, x) -> int:
    """The switching rule at one state (modes are indices)."""
    x = np.asarray(x, dtype=float)
    if spec.in_goal(x) or not spec.in_safe(x):
        return q
    rates = np.array([p.eval(x) for p in spec.vdot])
    if rates[q] < -spec.eps_q / spec.lam:
        return q
    best = int(np.argmin(rates))  # first minimum = lowest index
    if rates[best] < -spec.eps_q:
        return best
    if spec.V.eval(x) <= spec.beta:
        raise CertificateViolation(f"no mode decreases V at {x.tolist()}")
    return q


# -- simulation kernel -----------------------------------------------------------------


def _pack(polys: Sequence[Polynomial], n: int):
    T = max(1, max(len(p.terms) for p in polys))
    coefs = np.zeros((len(polys), T))
    exps = np.zeros((len(polys), T, n), dtype=np.int64)
    nterms = np.zeros(len(polys), dtype=np.int64)
    for k, p in enumerate(polys):
        c, e = p.packed(n)
        coefs[k, : c.size] = c
        exps[k, : c.size] = e
        nterms[k] = c.size
    return coefs, exps, nterms


def _term_source(m, c: float) -> str:
    factors = [repr(float(c))]
    for v, p in m.powers:
        factors.append(f"x{v}" if p == 1 else f"x{v} ** {p}")
    return " * ".join(factors)


def field_source(fields: Sequence[Sequence[Polynomial]], n: int) -> str:
    """Python source of ``field(q, x, out)`` with every mode written out."""
    lines = ["def field(q, x, out):"]
    lines += [f"    x{i} = x[{i}]" for i in range(n)]
    for q, f in enumerate(fields):
        lines.append(f"    if q == {q}:")
        for i, p in enumerate(f):
            expr = " + ".join(_term_source(m, c) for m, c in p.items()) or "0.0"
            lines.append(f"        out[{i}] = {expr}")
        lines.append("        return")
    return "\n".join(lines) + "\n"


_FIELD_CACHE: dict[str, object] = {}


def compile_field(fields: Sequence[Sequence[Polynomial]], n: int):
    """Jitted vector field for all modes; compiled once per distinct system."""
    src = field_source(fields, n)
    fn = _FIELD_CACHE.get(src)
    if fn is None:
        scope: dict = {}
        exec(compile(src, "<field>", "exec"), scope)
        fn = _FIELD_CACHE[src] = numba.njit(scope["field"])
    return fn


@numba.njit(cache=True)
def _peval(coefs, exps, nterms, k, x):
    total = 0.0
    for t in range(nterms[k]):
        term = coefs[k, t]
        for i in range(x.size):
            e = exps[k, t, i]
            if e:
                term *= x[i] ** e
        total += term
    return total


@numba.njit
def _rk4(field, q, n, x, h, k1, k2, k3, k4, tmp):
    field(q, x, k1)
    for i in range(n):
        tmp[i] = x[i] + 0.5 * h * k1[i]
    field(q, tmp, k2)
    for i in range(n):
        tmp[i] = x[i] + 0.5 * h * k2[i]
    field(q, tmp, k3)
    for i in range(n):
        tmp[i] = x[i] + h * k3[i]
    field(q, tmp, k4)
    for i in range(n):
        x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])


@numba.njit
def _grow(a, size):
    if size < a.shape[0]:
        return a
    shape = (2 * a.shape[0],) + a.shape[1:]
    b = np.empty(shape, dtype=a.dtype)
    b[: a.shape[0]] = a
    return b


# not cached: the field argument is generated per system
@numba.njit
def _kernel(field, vc, ve, vn, nmodes, x0, q0, s_lo, s_hi, g_c, g_r2, beta, eps_q, lam, tau, steps, max_cycles, stride):
    """Returns (samples, modes, step indices, switch step indices, reason, largest per-period change of V).

    A sample is kept every ``stride`` periods, at every switch and at the
    end. The change of ``V`` is tracked over every period regardless.
    """
    n = x0.size
    cap = 1024
    xs = np.empty((cap, n))
    ks = np.empty(cap, dtype=np.int64)
    qs = np.empty(cap, dtype=np.int64)
    sw = np.empty(cap, dtype=np.int64)
    ns = 0
    nsw = 0
    k = 0
    x = x0.copy()
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    tmp = np.empty(n)
    h = tau / steps
    q = q0
    reason = 2
    cycles = 0
    exited = False
    v_prev = _peval(vc, ve, vn, 0, x)
    max_dv = -np.inf
    while True:
        # status at the sample point
        d2 = 0.0
        for i in range(n):
            d2 += (x[i] - g_c[i]) ** 2
        if cycles > 0 and not exited:
            v = _peval(vc, ve, vn, 0, x)
            if v - v_prev > max_dv:
                max_dv = v - v_prev
            v_prev = v
        if d2 <= g_r2:
            reason = 0
        elif exited:
            reason = 1
        elif cycles >= max_cycles:
            reason = 2
        else:
            reason = -1
        switched = False
        if reason == -1:
            # the switching rule; row 0 of the V block is V, then Vdot_q
            rate_q = _peval(vc, ve, vn, 1 + q, x)
            newq = q
            if not rate_q < -eps_q / lam:
                best = 0
                best_rate = _peval(vc, ve, vn, 1, x)
                for m in range(1, nmodes):
                    r = _peval(vc, ve, vn, 1 + m, x)
                    if r < best_rate:
                        best = m
                        best_rate = r
                if best_rate < -eps_q:
                    newq = best
                elif _peval(vc, ve, vn, 0, x) <= beta:
                    reason = 3
            if reason == -1 and newq != q:
                sw = _grow(sw, nsw)
                sw[nsw] = k
                nsw += 1
                q = newq
                switched = True
        if switched or reason != -1 or cycles % stride == 0:
            xs = _grow(xs, ns)
            ks = _grow(ks, ns)
            qs = _grow(qs, ns)
            xs[ns] = x
            qs[ns] = q
            ks[ns] = k
            ns += 1
        if reason != -1:
            break
        for _ in range(steps):
            _rk4(field, q, n, x, h, k1, k2, k3, k4, tmp)
            k += 1
            # S exit is checked at every step, goal entry at periods
            for i in range(n):
                if x[i] < s_lo[i] or x[i] > s_hi[i]:
                    exited = True
            if exited:
                break
        cycles += 1
    return xs[:ns], qs[:ns], ks[:ns], sw[:nsw], reason, max_dv


class _Packed:
    def __init__(self, inst: ProblemInstance, spec: ControllerSpec):
        n = inst.n
        self.field = compile_field(inst.system.dynamics, n)
        self.vc, self.ve, self.vn = _pack([spec.V, *spec.vdot], n)


_PACK_CACHE: dict[int, tuple[ControllerSpec, _Packed]] = {}


def _packed(inst, spec) -> _Packed:
    hit = _PACK_CACHE.get(id(spec))
    if hit is not None and hit[0] is spec:
        return hit[1]
    pk = _Packed(inst, spec)
    _PACK_CACHE.clear()
    _PACK_CACHE[id(spec)] = (spec, pk)
    return pk


def simulate(
    inst: ProblemInstance,
    spec: ControllerSpec,
    dw: DwellTimes,
    x0,
    horizon: float,
    steps_per_period: int = 20,
    q0: int | None = None,
    check_start: bool = True,
    max_samples: int = 200_000,
) -> Trace:
    """Closed loop under the time-triggered controller with period ``tau``.

    RK4 with ``h = tau / steps_per_period``. Stops when a sample lies in G,
    when the state leaves S (checked every step), at the horizon, or when the
    switching rule finds no decreasing mode inside ``W``. Long runs keep
    every ``stride``-th period sample so that about ``max_samples`` remain.
    """
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (inst.n,):
        raise ValueError(f"x0 must have {inst.n} components")
    if steps_per_period < 10:
        raise ValueError("need h <= tau / 10")
    if check_start and not spec.in_goal(x0) and not spec.in_w(x0):
        raise ValueError(f"x0 is not in W: V(x0) = {spec.V.eval(x0):.6g}, beta = {spec.beta:.6g}")
    tau = dw.tau
    max_cycles = int(np.ceil(horizon / tau))
    stride = max(1, -(-max_cycles // max_samples))
    if q0 is None:
        rates = [p.eval(x0) for p in spec.vdot]
        q0 = int(np.argmin(rates))
    pk = _packed(inst, spec)
    xs, qs, ks, sw, reason, max_dv = _kernel(
        pk.field, pk.vc, pk.ve, pk.vn, len(spec.modes), x0, int(q0),
        spec.S_lo, spec.S_hi, spec.G_center, spec.G_radius**2, spec.beta,
        spec.eps_q, spec.lam, tau, int(steps_per_period), max_cycles, stride,
    )  # fmt: skip
    h = tau / steps_per_period
    # an S exit ends the run mid-period, so times come from step counts
    t = ks * h
    V = spec.V.eval_many(xs)
    return Trace(t, qs, xs, V, sw * h, REASONS[reason], h, tau, stride, float(max_dv))


def rk4_flow(f: Sequence[Polynomial], x0, T: float, h: float) -> np.ndarray:
    """Integrate a single vector field for time ``T`` (``T / h`` steps)."""
    n = len(f)
    field = compile_field([list(f)], n)
    x = np.asarray(x0, dtype=float).copy()
    bufs = [np.empty(n) for _ in range(5)]
    for _ in range(int(round(T / h))):
        _rk4(field, 0, n, x, h, *bufs)
    return x


def check_rws(trace: Trace, spec: ControllerSpec) -> RwsVerdict:
    """Reach-while-stay verdict and controller health figures for one trace."""
    inside = np.all((trace.x >= spec.S_lo) & (trace.x <= spec.S_hi), axis=1)
    d = trace.x - spec.G_center
    goal = np.einsum("ij,ij->i", d, d) <= spec.G_radius**2
    first_goal = int(np.argmax(goal)) if goal.any() else None
    stop = first_goal if first_goal is not None else len(trace) - 1
    bad = np.nonzero(~inside[: stop + 1])[0]
    stayed = bad.size == 0 and trace.reason != "left S"
    first_violation = float(trace.t[bad[0]]) if bad.size else (float(trace.t[-1]) if trace.reason == "left S" else None)
    gaps = np.diff(trace.switch_times)
    min_gap = float(gaps.min()) if gaps.size else float("inf")
    # decrease between consecutive period samples taken outside G
    upto = stop if first_goal is not None else len(trace) - 1
    if trace.reason == "left S":
        upto = min(upto, len(trace) - 2)
    if trace.stride == 1:
        dv = np.diff(trace.V[: upto + 1])
        largest = float(dv.max()) if dv.size else float("-inf")
    else:
        # samples are thinned out; the kernel tracked every period
        largest = trace.max_dv
    worst = largest / trace.tau
    reached = first_goal is not None
    return RwsVerdict(
        ok=reached and stayed,
        reached_goal=reached,
        stayed_in_safe=stayed,
        first_violation=first_violation,
        min_switch_gap=min_gap,
        v_decreasing=largest < 0,
        worst_rate=worst,
        reason=trace.reason,
    )


def write_trace_csv(trace: Trace, path: str | Path, names: Sequence[str], modes: Sequence[str]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "mode", *names, "V"])
        for t, q, x, v in zip(trace.t, trace.mode, trace.x, trace.V):
            w.writerow([repr(float(t)), modes[int(q)], *(repr(float(a)) for a in x), repr(float(v))])
