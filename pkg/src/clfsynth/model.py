"""Problem descriptions: plant, regions, reach-while-stay sets and CLF template.

A problem file is a JSON document::

    {
      "name": "sys01", "dim": 2, "vars": ["x", "y"],
      "modes": [{"id": "u=-1", "dynamics": ["1.0 * y", "-1.0 * x - 1.0"]}, ...],
      "S": {"lo": [-1, -1], "hi": [1, 1]},
      "I": {"center": [0, 0], "radius": 0.5},
      "G": {"center": [0, 0], "radius": 0.1},
      "template": {"degree": 2, "coef_lo": -10, "coef_hi": 10, "beta_lo": 0, "beta_hi": 100},
      "eps_q": 0.01, "lambda": 2.0,
      "eps_t1": 0.1, "eps_t3": 0.01, "delta": 1e-5        # optional run defaults
    }

Set differences such as ``S \\ G`` are never materialized; a :class:`Region`
carries a box plus balls it must lie inside of and balls it must avoid.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .poly import Monomial, Polynomial, monomials_of_degree, parse_polynomial

__all__ = [
    "ProblemError",
    "BoxRegion",
    "BallRegion",
    "Region",
    "SwitchedSystem",
    "RwsSpec",
    "ClfTemplate",
    "ProblemInstance",
    "load_problem",
    "read_problem",
    "print_problem",
    "boundary_faces",
    "member",
    "benchmark_names",
    "benchmark_path",
    "load_benchmark",
]


class ProblemError(ValueError):
    """Invalid problem document; ``field`` names the offending entry."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


def _vec(v) -> tuple[float, ...]:
    return tuple(float(a) for a in v)


@dataclass(frozen=True)
class BoxRegion:
    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "lo", _vec(self.lo))
        object.__setattr__(self, "hi", _vec(self.hi))
        if len(self.lo) != len(self.hi):
            raise ProblemError("S", "lo and hi differ in length")

    @property
    def dim(self) -> int:
        return len(self.lo)

    def is_proper(self) -> bool:
        return all(l < h for l, h in zip(self.lo, self.hi))

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (np.array(self.lo) + np.array(self.hi))

    def corners(self) -> list[np.ndarray]:
        lo, hi = np.array(self.lo), np.array(self.hi)
        n = self.dim
        out = []
        for k in range(2**n):
            bits = [(k >> (n - 1 - i)) & 1 for i in range(n)]
            out.append(np.where(bits, hi, lo))
        return out


@dataclass(frozen=True)
class BallRegion:
    center: tuple[float, ...]
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", _vec(self.center))
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def dim(self) -> int:
        return len(self.center)

    def sqdist(self, x) -> float:
        d = np.asarray(x, dtype=float) - np.array(self.center)
        return float(d @ d)

    def bounding_box(self) -> BoxRegion:
        c = np.array(self.center)
        return BoxRegion(c - self.radius, c + self.radius)


@dataclass(frozen=True)
class Region:
    """``box`` intersected with every ``include`` ball, minus every ``exclude`` ball.

    Ball exclusion keeps the sphere itself (``|x - c|^2 >= r^2``), so the
    region stays compact.
    """

    box: BoxRegion
    include: tuple[BallRegion, ...] = ()
    exclude: tuple[BallRegion, ...] = ()

    @property
    def dim(self) -> int:
        return self.box.dim

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(f"expected a {self.dim}-vector")
        if np.any(x < np.array(self.box.lo)) or np.any(x > np.array(self.box.hi)):
            return False
        if any(b.sqdist(x) > b.radius**2 for b in self.include):
            return False
        if any(b.sqdist(x) < b.radius**2 for b in self.exclude):
            return False
        return True


@dataclass(frozen=True)
class SwitchedSystem:
    vars: tuple[str, ...]
    modes: tuple[str, ...]
    dynamics: tuple[tuple[Polynomial, ...], ...]

    def __post_init__(self):
        n = len(self.vars)
        if not self.modes:
            raise ProblemError("modes", "at least one mode is required")
        if len(set(self.modes)) != len(self.modes):
            raise ProblemError("modes", "mode ids must be unique")
        for q, f in zip(self.modes, self.dynamics):
            if len(f) != n:
                raise ProblemError("modes", f"mode {q!r} has {len(f)} components, expected {n}")
            for p in f:
                if p.nvars > n:
                    raise ProblemError("modes", f"mode {q!r} uses undeclared variables")

    @property
    def n(self) -> int:
        return len(self.vars)

    def field(self, q: int) -> tuple[Polynomial, ...]:
        return self.dynamics[q]

    def rhs(self, q: int, x) -> np.ndarray:
        return np.array([p.eval(x) for p in self.dynamics[q]])


@dataclass(frozen=True)
class RwsSpec:
    S: BoxRegion
    I: BallRegion
    G: BallRegion

    def __post_init__(self):
        if not self.S.is_proper():
            raise ProblemError("S", "need lo < hi in every dimension")
        for name, ball in (("I", self.I), ("G", self.G)):
            if ball.dim != self.S.dim:
                raise ProblemError(name, "dimension differs from S")
            if not ball.radius > 0:
                raise ProblemError(name, "radius must be positive")
        c, r = np.array(self.I.center), self.I.radius
        if np.any(c - r <= np.array(self.S.lo)) or np.any(c + r >= np.array(self.S.hi)):
            raise ProblemError("I", "I not in interior(S)")
        # nearest point of S to the center of G
        g = np.clip(np.array(self.G.center), self.S.lo, self.S.hi)
        if self.G.sqdist(g) > self.G.radius**2:
            raise ProblemError("G", "G does not intersect S")

    @property
    def safe_minus_goal(self) -> Region:
        return Region(self.S, (), (self.G,))

    @property
    def init_minus_goal(self) -> Region | None:
        """``I \\ G``, or ``None`` when ``G`` swallows ``I``."""
        gap = np.linalg.norm(np.array(self.I.center) - np.array(self.G.center))
        if gap + self.I.radius <= self.G.radius:
            return None
        return Region(self.I.bounding_box(), (self.I,), (self.G,))

    @property
    def boundary_minus_goal(self) -> list[Region]:
        return [Region(face, (), (self.G,)) for face in boundary_faces(self.S)]


@dataclass(frozen=True)
class ClfTemplate:
    basis: tuple[Monomial, ...]
    coef_lo: tuple[float, ...]
    coef_hi: tuple[float, ...]
    beta_lo: float
    beta_hi: float

    def __post_init__(self):
        if not self.basis:
            raise ProblemError("template", "basis must be nonempty")
        object.__setattr__(self, "coef_lo", _vec(self.coef_lo))
        object.__setattr__(self, "coef_hi", _vec(self.coef_hi))
        if len(self.coef_lo) != len(self.basis) or len(self.coef_hi) != len(self.basis):
            raise ProblemError("template", "coefficient bounds must match the basis length")
        bounds = list(zip(self.coef_lo, self.coef_hi)) + [(self.beta_lo, self.beta_hi)]
        for lo, hi in bounds:
            if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
                raise ProblemError("template", f"bounds must be finite with lo < hi, got [{lo}, {hi}]")

    @property
    def size(self) -> int:
        return len(self.basis)

    @property
    def nparams(self) -> int:
        """Template coefficients plus the level ``beta``."""
        return len(self.basis) + 1

    def polynomial(self, a) -> Polynomial:
        return Polynomial({m: float(c) for m, c in zip(self.basis, a)})


@dataclass(frozen=True)
class ProblemInstance:
    name: str
    system: SwitchedSystem
    spec: RwsSpec
    template: ClfTemplate
    eps_q: float
    lam: float = 2.0
    eps_t1: float = 0.1
    eps_t3: float = 0.01
    delta: float = 1e-4
    notes: str = ""

    def __post_init__(self):
        if not self.eps_q > 0:
            raise ProblemError("eps_q", "must be positive")
        if not self.lam > 1:
            raise ProblemError("lambda", "must be greater than 1")
        for name in ("eps_t1", "eps_t3", "delta"):
            if not getattr(self, name) > 0:
                raise ProblemError(name, "must be positive")
        if self.spec.S.dim != self.system.n:
            raise ProblemError("S", "dimension differs from dim")
        for m in self.template.basis:
            if m.max_var >= self.system.n:
                raise ProblemError("template", "basis uses undeclared variables")

    @property
    def n(self) -> int:
        return self.system.n

    @property
    def nmodes(self) -> int:
        return len(self.system.modes)


def boundary_faces(S: BoxRegion) -> list[BoxRegion]:
    """The ``2n`` faces of a box: dimension ``i`` pinned to its lower, then upper bound."""
    faces = []
    for i in range(S.dim):
        for bound in (S.lo[i], S.hi[i]):
            lo, hi = list(S.lo), list(S.hi)
            lo[i] = hi[i] = bound
            faces.append(BoxRegion(lo, hi))
    return faces


def member(region, x) -> bool:
    """Exact membership for boxes, balls, faces and :class:`Region` differences."""
    x = np.asarray(x, dtype=float)
    if isinstance(region, Region):
        return region.contains(x)
    if isinstance(region, BoxRegion):
        return bool(np.all(x >= np.array(region.lo)) and np.all(x <= np.array(region.hi)))
    if isinstance(region, BallRegion):
        return region.sqdist(x) <= region.radius**2
    if isinstance(region, (list, tuple)):
        return any(member(r, x) for r in region)
    raise TypeError(f"unsupported region {type(region).__name__}")


# -- serialization -----------------------------------------------------------------


def _require(doc: dict, key: str):
    if key not in doc:
        raise ProblemError(key, "missing field")
    return doc[key]


def _broadcast(v, n: int, fieldname: str) -> tuple[float, ...]:
    if isinstance(v, (int, float)):
        return (float(v),) * n
    if len(v) != n:
        raise ProblemError(fieldname, f"expected {n} values")
    return _vec(v)


def _parse_template(doc: dict, names: Sequence[str]) -> ClfTemplate:
    if "basis" in doc:
        basis = []
        for s in doc["basis"]:
            p = parse_polynomial(s, names)
            if len(p.terms) != 1:
                raise ProblemError("template.basis", f"{s!r} is not a single monomial")
            basis.append(next(iter(p.terms)))
    elif "degree" in doc:
        basis = monomials_of_degree(len(names), int(doc["degree"]))
    else:
        basis = monomials_of_degree(len(names), 2)
    k = len(basis)
    return ClfTemplate(
        tuple(basis),
        _broadcast(doc.get("coef_lo", -10.0), k, "template.coef_lo"),
        _broadcast(doc.get("coef_hi", 10.0), k, "template.coef_hi"),
        float(doc.get("beta_lo", 0.0)),
        float(doc.get("beta_hi", 100.0)),
    )


def load_problem(source: str | dict) -> ProblemInstance:
    """Build a validated instance from a JSON string or an already-decoded dict."""
    if isinstance(source, str):
        try:
            doc = json.loads(source)
        except json.JSONDecodeError as exc:
            raise ProblemError("document", f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    else:
        doc = source
    if not isinstance(doc, dict):
        raise ProblemError("document", "top level must be an object")
    names = tuple(_require(doc, "vars"))
    dim = int(_require(doc, "dim"))
    if dim != len(names):
        raise ProblemError("dim", f"dim={dim} but {len(names)} variable names")
    modes, dynamics = [], []
    for k, mdoc in enumerate(_require(doc, "modes")):
        modes.append(str(mdoc.get("id", k)))
        try:
            dynamics.append(tuple(parse_polynomial(s, names) for s in _require(mdoc, "dynamics")))
        except ValueError as exc:
            if isinstance(exc, ProblemError):
                raise
            raise ProblemError(f"modes[{k}].dynamics", str(exc)) from exc
    system = SwitchedSystem(names, tuple(modes), tuple(dynamics))
    Sd, Id, Gd = _require(doc, "S"), _require(doc, "I"), _require(doc, "G")
    spec = RwsSpec(
        BoxRegion(_require(Sd, "lo"), _require(Sd, "hi")),
        BallRegion(_require(Id, "center"), _require(Id, "radius")),
        BallRegion(_require(Gd, "center"), _require(Gd, "radius")),
    )
    try:
        template = _parse_template(doc.get("template", {}), names)
    except ValueError as exc:
        if isinstance(exc, ProblemError):
            raise
        raise ProblemError("template", str(exc)) from exc
    return ProblemInstance(
        name=str(doc.get("name", "problem")),
        system=system,
        spec=spec,
        template=template,
        eps_q=float(_require(doc, "eps_q")),
        lam=float(doc.get("lambda", 2.0)),
        eps_t1=float(doc.get("eps_t1", 0.1)),
        eps_t3=float(doc.get("eps_t3", 0.01)),
        delta=float(doc.get("delta", 1e-4)),
        notes=str(doc.get("notes", "")),
    )


def read_problem(path: str | Path) -> ProblemInstance:
    return load_problem(Path(path).read_text())


def problem_to_dict(inst: ProblemInstance) -> dict[str, Any]:
    names = inst.system.vars
    t = inst.template
    doc: dict[str, Any] = {
        "name": inst.name,
        "dim": inst.n,
        "vars": list(names),
        "modes": [
            {"id": q, "dynamics": [p.format(names) for p in f]} for q, f in zip(inst.system.modes, inst.system.dynamics)
        ],
        "S": {"lo": list(inst.spec.S.lo), "hi": list(inst.spec.S.hi)},
        "I": {"center": list(inst.spec.I.center), "radius": inst.spec.I.radius},
        "G": {"center": list(inst.spec.G.center), "radius": inst.spec.G.radius},
        "template": {
            "basis": [m.format(names) for m in t.basis],
            "coef_lo": list(t.coef_lo),
            "coef_hi": list(t.coef_hi),
            "beta_lo": t.beta_lo,
            "beta_hi": t.beta_hi,
        },
        "eps_q": inst.eps_q,
        "lambda": inst.lam,
        "eps_t1": inst.eps_t1,
        "eps_t3": inst.eps_t3,
        "delta": inst.delta,
    }
    if inst.notes:
        doc["notes"] = inst.notes
    return doc


def print_problem(inst: ProblemInstance) -> str:
    return json.dumps(problem_to_dict(inst), indent=2)


# -- bundled benchmarks --------------------------------------------------------------


def benchmark_names() -> list[str]:
    root = resources.files("clfsynth") / "benchmarks"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def benchmark_path(name: str | int) -> Path:
    if isinstance(name, int):
        name = f"sys{name:02d}"
    return Path(str(resources.files("clfsynth") / "benchmarks" / f"{name}.json"))


def load_benchmark(name: str | int) -> ProblemInstance:
    return read_problem(benchmark_path(name))
