"""Sparse multivariate polynomials over float coefficients.

Variables are referred to by index; names only matter for parsing and
printing. Terms are kept in a canonical dictionary (no zero coefficients)
and are listed in graded-lexicographic order, highest monomial first.

``ParamPolynomial`` represents a polynomial whose coefficients are affine
in a parameter vector ``c``. It is stored as a constant part plus one
polynomial per parameter, which keeps every operation used here (Lie
derivatives, instantiation, evaluation at a state) linear in ``c`` by
construction.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "Monomial",
    "Polynomial",
    "ParamPolynomial",
    "parse_polynomial",
    "lie",
    "monomials_of_degree",
]


@dataclass(frozen=True, order=False)
class Monomial:
    """Product of variable powers, stored as sorted ``(var, power)`` pairs."""

    powers: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        for var, p in self.powers:
            if var < 0 or p <= 0:
                raise ValueError(f"invalid monomial factor x{var}^{p}")
        if list(self.powers) != sorted(self.powers) or len({v for v, _ in self.powers}) != len(self.powers):
            raise ValueError("monomial factors must be sorted and unique")

    @classmethod
    def from_exponents(cls, exps: Mapping[int, int] | Sequence[int]) -> "Monomial":
        if isinstance(exps, Mapping):
            items = exps.items()
        else:
            items = enumerate(exps)
        return cls(tuple(sorted((int(v), int(p)) for v, p in items if p)))

    @property
    def degree(self) -> int:
        return sum(p for _, p in self.powers)

    @property
    def max_var(self) -> int:
        return self.powers[-1][0] if self.powers else -1

    def exponent(self, var: int) -> int:
        for v, p in self.powers:
            if v == var:
                return p
        return 0

    def dense(self, nvars: int | None = None) -> tuple[int, ...]:
        n = self.max_var + 1 if nvars is None else nvars
        out = [0] * n
        for v, p in self.powers:
            out[v] = p
        return tuple(out)

    def sort_key(self):
        # graded lex: degree first, then exponent of x0, x1, ...
        return (self.degree, self.dense())

    def __mul__(self, other: "Monomial") -> "Monomial":
        acc = dict(self.powers)
        for v, p in other.powers:
            acc[v] = acc.get(v, 0) + p
        return Monomial(tuple(sorted(acc.items())))

    def derivative(self, var: int) -> tuple[int, "Monomial"]:
        """Return ``(factor, monomial)`` with d/dx_var m = factor * monomial."""
        p = self.exponent(var)
        if p == 0:
            return 0, Monomial()
        acc = dict(self.powers)
        if p == 1:
            del acc[var]
        else:
            acc[var] = p - 1
        return p, Monomial(tuple(sorted(acc.items())))

    def evaluate(self, x) -> float:
        r = 1.0
        for v, p in self.powers:
            r *= x[v] ** p
        return r

    def format(self, names: Sequence[str]) -> str:
        parts = []
        for v, p in self.powers:
            parts.append(names[v] if p == 1 else f"{names[v]}^{p}")
        return " * ".join(parts)


ONE = Monomial()


def monomials_of_degree(nvars: int, degree: int) -> list[Monomial]:
    """All monomials of exactly ``degree`` in ``nvars`` variables, grlex descending."""

    def rec(i, left):
        if i == nvars - 1:
            yield (left,)
            return
        for p in range(left, -1, -1):
            for rest in rec(i + 1, left - p):
                yield (p,) + rest

    if nvars == 0:
        return [ONE] if degree == 0 else []
    return [Monomial.from_exponents(e) for e in rec(0, degree)]


class Polynomial:
    """Immutable sparse polynomial ``sum c_m * m`` with float coefficients."""

    __slots__ = ("_terms", "__dict__")

    def __init__(self, terms: Mapping[Monomial, float] | Iterable[tuple[Monomial, float]] = ()):
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict[Monomial, float] = {}
        for m, c in items:
            c = float(c)
            if c == 0.0:
                continue
            acc[m] = acc.get(m, 0.0) + c
        self._terms = {m: c for m, c in acc.items() if c != 0.0}

    # construction helpers -------------------------------------------------
    @classmethod
    def constant(cls, c: float) -> "Polynomial":
        return cls({ONE: c})

    @classmethod
    def var(cls, i: int, coef: float = 1.0) -> "Polynomial":
        return cls({Monomial(((i, 1),)): coef})

    @classmethod
    def zero(cls) -> "Polynomial":
        return cls()

    # basic properties ---------------------------------------------------
    @property
    def terms(self) -> dict[Monomial, float]:
        return dict(self._terms)

    def items(self):
        """Terms in canonical (grlex descending) order."""
        return sorted(self._terms.items(), key=lambda mc: mc[0].sort_key(), reverse=True)

    @property
    def degree(self) -> int:
        return max((m.degree for m in self._terms), default=0)

    @property
    def nvars(self) -> int:
        """One past the highest variable index used."""
        return max((m.max_var for m in self._terms), default=-1) + 1

    def is_zero(self) -> bool:
        return not self._terms

    def coefficient(self, m: Monomial) -> float:
        return self._terms.get(m, 0.0)

    def __eq__(self, other):
        if isinstance(other, (int, float)):
            other = Polynomial.constant(other)
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    def allclose(self, other: "Polynomial", tol: float = 1e-9) -> bool:
        keys = set(self._terms) | set(other._terms)
        return all(abs(self.coefficient(k) - other.coefficient(k)) <= tol * max(1.0, abs(self.coefficient(k))) for k in keys)

    # arithmetic -----------------------------------------------------------
    def __add__(self, other):
        if isinstance(other, (int, float)):
            other = Polynomial.constant(other)
        if not isinstance(other, Polynomial):
            return NotImplemented
        return Polynomial(list(self._terms.items()) + list(other._terms.items()))

    __radd__ = __add__

    def __neg__(self):
        return Polynomial({m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        if isinstance(other, (int, float)):
            other = Polynomial.constant(other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return Polynomial({m: c * other for m, c in self._terms.items()})
        if not isinstance(other, Polynomial):
            return NotImplemented
        out: list[tuple[Monomial, float]] = []
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                out.append((m1 * m2, c1 * c2))
        return Polynomial(out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative power")
        result = Polynomial.constant(1.0)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def partial(self, i: int) -> "Polynomial":
        out = []
        for m, c in self._terms.items():
            f, dm = m.derivative(i)
            if f:
                out.append((dm, c * f))
        return Polynomial(out)

    def substitute(self, subs: Mapping[int, "Polynomial"]) -> "Polynomial":
        """Replace variables by polynomials (variables not in ``subs`` are kept)."""
        result = Polynomial()
        for m, c in self._terms.items():
            term = Polynomial.constant(c)
            for v, p in m.powers:
                term = term * (subs[v] ** p if v in subs else Polynomial({Monomial(((v, p),)): 1.0}))
            result = result + term
        return result

    # evaluation -----------------------------------------------------------
    @cached_property
    def _packed(self) -> tuple[np.ndarray, np.ndarray]:
        items = self.items()
        n = max(self.nvars, 1)
        coefs = np.array([c for _, c in items], dtype=float)
        exps = np.array([m.dense(n) for m, _ in items], dtype=np.int64).reshape(len(items), n)
        return coefs, exps

    def packed(self, nvars: int) -> tuple[np.ndarray, np.ndarray]:
        """Coefficient vector and (terms x nvars) exponent matrix."""
        if nvars < self.nvars:
            raise ValueError(f"polynomial uses {self.nvars} variables, got {nvars}")
        coefs, exps = self._packed
        if exps.shape[1] < nvars:
            exps = np.hstack([exps, np.zeros((exps.shape[0], nvars - exps.shape[1]), dtype=np.int64)])
        return coefs, exps[:, :nvars]

    def __call__(self, x) -> float:
        return self.eval(x)

    def eval(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if x.ndim != 1:
            raise ValueError("eval expects a single state vector; use eval_many for batches")
        if x.shape[0] < self.nvars:
            raise ValueError(f"dimension mismatch: polynomial needs {self.nvars} variables, got {x.shape[0]}")
        total = 0.0
        for m, c in self._terms.items():
            total += c * m.evaluate(x)
        return total

    def eval_many(self, X) -> np.ndarray:
        """Evaluate at each row of ``X`` (shape ``(N, n)``)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] < self.nvars:
            raise ValueError(f"dimension mismatch: polynomial needs {self.nvars} variables, got {X.shape[1]}")
        out = np.zeros(X.shape[0])
        for m, c in self._terms.items():
            t = np.full(X.shape[0], c)
            for v, p in m.powers:
                t = t * X[:, v] ** p
            out += t
        return out

    # text -------------------------------------------------------------------
    def format(self, names: Sequence[str] | None = None) -> str:
        if names is None:
            names = [f"x{i + 1}" for i in range(max(self.nvars, 1))]
        if not self._terms:
            return "0"
        out = []
        for m, c in self.items():
            mag = repr(abs(c))
            body = mag if m == ONE else f"{mag} * {m.format(names)}"
            if not out:
                out.append(body if c > 0 else f"-{body}")
            else:
                out.append(("+ " if c > 0 else "- ") + body)
        return " ".join(out)

    def __repr__(self):
        return f"Polynomial({self.format()!r})"

    __str__ = format


_TOKEN = re.compile(r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>\*\*|[-+*^]))")


def parse_polynomial(text: str, names: Sequence[str]) -> Polynomial:
    """Parse a sum of terms like ``2.5 * x^2 * y - y + 3``.

    Each term is a product of numbers and ``var`` / ``var^k`` factors.
    Whitespace is ignored; ``**`` is accepted as a synonym for ``^``.
    """
    index = {name: i for i, name in enumerate(names)}
    tokens = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ValueError(f"cannot parse polynomial at column {pos + 1}: {text[pos:pos + 10]!r}")
        kind = m.lastgroup
        tokens.append((kind, m.group(kind)))
        pos = m.end()
    if not tokens:
        raise ValueError("empty polynomial")

    terms: list[tuple[Monomial, float]] = []
    i = 0
    sign = 1.0
    expect_factor = True
    coef, powers = 1.0, {}

    def flush():
        terms.append((Monomial(tuple(sorted(powers.items()))), sign * coef))

    while i < len(tokens):
        kind, val = tokens[i]
        if expect_factor:
            if kind == "op" and val in "+-":
                if val == "-":
                    sign = -sign
                i += 1
                continue
            if kind == "num":
                coef *= float(val)
            elif kind == "name":
                if val not in index:
                    raise ValueError(f"unknown variable {val!r}")
                p = 1
                if i + 1 < len(tokens) and tokens[i + 1][1] in ("^", "**"):
                    if i + 2 >= len(tokens) or tokens[i + 2][0] != "num" or not tokens[i + 2][1].isdigit():
                        raise ValueError(f"exponent of {val!r} must be a nonnegative integer")
                    p = int(tokens[i + 2][1])
                    i += 2
                if p:
                    powers[index[val]] = powers.get(index[val], 0) + p
            else:
                raise ValueError(f"unexpected {val!r}")
            expect_factor = False
            i += 1
        else:
            if kind != "op":
                raise ValueError(f"expected operator before {val!r}")
            if val == "*":
                expect_factor = True
            elif val in "+-":
                flush()
                sign = -1.0 if val == "-" else 1.0
                coef, powers = 1.0, {}
                expect_factor = True
            else:
                raise ValueError(f"unexpected {val!r}")
            i += 1
    if expect_factor:
        raise ValueError("polynomial ends with an operator")
    flush()
    return Polynomial(terms)


class ParamPolynomial:
    """Polynomial in ``x`` whose coefficients are affine in parameters ``c``.

    Stored as ``const + sum_j c_j * parts[j]``.
    """

    __slots__ = ("const", "parts")

    def __init__(self, const: Polynomial, parts: Sequence[Polynomial]):
        self.const = const
        self.parts = tuple(parts)

    @property
    def nparams(self) -> int:
        return len(self.parts)

    @classmethod
    def template(cls, basis: Sequence[Monomial], extra_params: int = 0) -> "ParamPolynomial":
        """``sum_i a_i * basis[i]``; ``extra_params`` trailing parameters get zero parts."""
        parts = [Polynomial({m: 1.0}) for m in basis] + [Polynomial()] * extra_params
        return cls(Polynomial(), parts)

    @classmethod
    def parameter(cls, j: int, nparams: int) -> "ParamPolynomial":
        parts = [Polynomial()] * nparams
        parts[j] = Polynomial.constant(1.0)
        return cls(Polynomial(), parts)

    @property
    def terms(self) -> dict[Monomial, tuple[float, ...]]:
        """Monomial -> ``(constant, d/dc_0, d/dc_1, ...)``."""
        keys = set(self.const.terms)
        for p in self.parts:
            keys |= set(p.terms)
        return {
            m: (self.const.coefficient(m),) + tuple(p.coefficient(m) for p in self.parts)
            for m in sorted(keys, key=Monomial.sort_key, reverse=True)
        }

    def _binary(self, other, op):
        if isinstance(other, ParamPolynomial):
            if other.nparams != self.nparams:
                raise ValueError("parameter count mismatch")
            return ParamPolynomial(op(self.const, other.const), [op(a, b) for a, b in zip(self.parts, other.parts)])
        if isinstance(other, (Polynomial, int, float)):
            return ParamPolynomial(op(self.const, other), self.parts)
        return NotImplemented

    def __add__(self, other):
        return self._binary(other, lambda a, b: a + b)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, lambda a, b: a - b)

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return ParamPolynomial(-self.const, [-p for p in self.parts])

    def __mul__(self, other):
        if isinstance(other, (int, float, Polynomial)):
            return ParamPolynomial(self.const * other, [p * other for p in self.parts])
        return NotImplemented

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, ParamPolynomial):
            return NotImplemented
        return self.const == other.const and self.parts == other.parts

    def partial(self, i: int) -> "ParamPolynomial":
        return ParamPolynomial(self.const.partial(i), [p.partial(i) for p in self.parts])

    def instantiate(self, c) -> Polynomial:
        c = np.asarray(c, dtype=float)
        if c.shape != (self.nparams,):
            raise ValueError(f"expected {self.nparams} parameters, got shape {c.shape}")
        out = self.const
        for cj, p in zip(c, self.parts):
            out = out + p * float(cj)
        return out

    def at(self, x) -> tuple[float, np.ndarray]:
        """Affine form in ``c`` at state ``x``: returns ``(offset, gradient)``."""
        return self.const.eval(x), np.array([p.eval(x) for p in self.parts])

    @property
    def nvars(self) -> int:
        return max([self.const.nvars] + [p.nvars for p in self.parts])

    def __repr__(self):
        return f"ParamPolynomial(const={self.const.format()!r}, parts={[p.format() for p in self.parts]!r})"


def lie(V, f: Sequence[Polynomial]):
    """Lie derivative ``sum_i dV/dx_i * f_i`` of a (Param)Polynomial along ``f``."""
    if V.nvars > len(f):
        raise ValueError(f"dimension mismatch: V uses {V.nvars} variables, field has {len(f)} components")
    if isinstance(V, ParamPolynomial):
        return ParamPolynomial(lie(V.const, f), [lie(p, f) for p in V.parts])
    out = Polynomial()
    for i, fi in enumerate(f):
        d = V.partial(i)
        if not d.is_zero():
            out = out + d * fi
    return out
