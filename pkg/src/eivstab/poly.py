"""Sparse multivariate polynomial arithmetic and lag-indexed sequences.

Polynomials are stored as mappings from exponent tuples to coefficients over a
named variable tuple.  Coefficients are usually floats, but any value with
add/multiply semantics (for instance an affine expression in solver variables)
can occupy the coefficient slot; only numeric coefficients participate in
pruning, serialization, and evaluation to numbers.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

#: Terms with numeric |coefficient| at or below this are dropped after arithmetic.
PRUNE_TOL = 1e-12


def _is_number(c) -> bool:
    return isinstance(c, (int, float, np.integer, np.floating))


def _coeff_is_zero(c) -> bool:
    if _is_number(c):
        return abs(c) <= PRUNE_TOL
    probe = getattr(c, "is_zero", None)
    if probe is not None:
        return probe() if callable(probe) else bool(probe)
    return False


def monomial_basis(nvars: int, degree: int) -> list[tuple[int, ...]]:
    """All exponent tuples over ``nvars`` variables of total degree <= ``degree``.

    The list is in graded-lexicographic order (degree first, then earlier
    variables dominate), so truncating to a lower degree is a prefix
    operation.  Its length is ``math.comb(nvars + degree, degree)``.
    """
    if nvars < 0 or degree < 0:
        raise ValueError("nvars and degree must be nonnegative")
    if nvars == 0:
        return [()]
    basis: list[tuple[int, ...]] = []
    for total in range(degree + 1):
        for combo in itertools.combinations_with_replacement(range(nvars), total):
            exp = [0] * nvars
            for idx in combo:
                exp[idx] += 1
            basis.append(tuple(exp))
    return basis


def basis_size(nvars: int, degree: int) -> int:
    """Number of monomials of degree <= ``degree`` in ``nvars`` variables."""
    return math.comb(nvars + degree, degree)


def grlex_key(exp: tuple[int, ...]):
    """Sort key realizing the graded-lex order used by :func:`monomial_basis`."""
    return (sum(exp), tuple(-e for e in exp))


class Polynomial:
    """Sparse polynomial over a named variable tuple.

    ``terms`` maps exponent tuples (one slot per variable) to coefficients.
    Zero-coefficient terms are never stored.
    """

    __slots__ = ("vars", "terms")

    def __init__(self, variables: Sequence[str], terms: Mapping[tuple, object] | None = None):
        self.vars = tuple(variables)
        if len(set(self.vars)) != len(self.vars):
            raise ValueError("duplicate variable names")
        clean: dict[tuple[int, ...], object] = {}
        if terms:
            for exp, c in terms.items():
                exp = tuple(int(e) for e in exp)
                if len(exp) != len(self.vars):
                    raise ValueError(f"exponent {exp} does not match {len(self.vars)} variables")
                if any(e < 0 for e in exp):
                    raise ValueError("negative exponent")
                if _is_number(c):
                    c = float(c)
                if _coeff_is_zero(c):
                    continue
                if exp in clean:
                    c = clean[exp] + c
                    if _coeff_is_zero(c):
                        del clean[exp]
                        continue
                clean[exp] = c
        self.terms = clean

    # -- constructors ------------------------------------------------------

    @classmethod
    def constant(cls, value, variables: Sequence[str] = ()) -> "Polynomial":
        zero = (0,) * len(tuple(variables))
        return cls(variables, {zero: value})

    @classmethod
    def variable(cls, name: str, variables: Sequence[str]) -> "Polynomial":
        variables = tuple(variables)
        idx = variables.index(name)
        exp = tuple(1 if i == idx else 0 for i in range(len(variables)))
        return cls(variables, {exp: 1.0})

    @classmethod
    def zero(cls, variables: Sequence[str] = ()) -> "Polynomial":
        return cls(variables, {})

    # -- structure ---------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        """Total degree; the zero polynomial reports 0."""
        if not self.terms:
            return 0
        return max(sum(e) for e in self.terms)

    def coefficient(self, exp: tuple[int, ...]):
        return self.terms.get(tuple(exp), 0.0)

    def map_vars(self, new_vars: Sequence[str]) -> "Polynomial":
        """Re-express over ``new_vars`` (a superset of the used variables)."""
        new_vars = tuple(new_vars)
        if new_vars == self.vars:
            return self
        pos = {name: i for i, name in enumerate(new_vars)}
        try:
            lut = [pos[name] for name in self.vars]
        except KeyError as exc:
            raise ValueError(f"variable {exc} missing from target registry") from exc
        n = len(new_vars)
        terms = {}
        for exp, c in self.terms.items():
            new_exp = [0] * n
            for i, e in enumerate(exp):
                if e:
                    new_exp[lut[i]] = e
            terms[tuple(new_exp)] = c
        return Polynomial(new_vars, terms)

    # -- arithmetic --------------------------------------------------------

    @staticmethod
    def _merge_vars(u: tuple[str, ...], v: tuple[str, ...]) -> tuple[str, ...]:
        if u == v:
            return u
        merged = list(u)
        seen = set(u)
        for name in v:
            if name not in seen:
                merged.append(name)
                seen.add(name)
        return tuple(merged)

    def __add__(self, other):
        if isinstance(other, Polynomial):
            variables = self._merge_vars(self.vars, other.vars)
            p, q = self.map_vars(variables), other.map_vars(variables)
            terms = dict(p.terms)
            for exp, c in q.terms.items():
                terms[exp] = terms[exp] + c if exp in terms else c
            return Polynomial(variables, terms)
        if other is NotImplemented:
            return NotImplemented
        # scalar-like (number or affine expression): lift to the constant term
        return self + Polynomial.constant(other, self.vars)

    def __radd__(self, other):
        return self.__add__(other)

    def __neg__(self):
        return Polynomial(self.vars, {e: -1.0 * c if _is_number(c) else -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other if isinstance(other, Polynomial) else -1.0 * other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Polynomial):
            variables = self._merge_vars(self.vars, other.vars)
            p, q = self.map_vars(variables), other.map_vars(variables)
            terms: dict[tuple[int, ...], object] = {}
            for e1, c1 in p.terms.items():
                for e2, c2 in q.terms.items():
                    exp = tuple(a + b for a, b in zip(e1, e2))
                    c = c1 * c2
                    terms[exp] = terms[exp] + c if exp in terms else c
            return Polynomial(variables, terms)
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def scale(self, c):
        if _is_number(c) and abs(c) <= PRUNE_TOL:
            return Polynomial.zero(self.vars)
        return Polynomial(self.vars, {e: c * v if _is_number(c) else v * c for e, v in self.terms.items()})

    def __eq__(self, other):
        if not isinstance(other, Polynomial):
            return NotImplemented
        variables = self._merge_vars(self.vars, other.vars)
        return self.map_vars(variables).terms == other.map_vars(variables).terms

    def __hash__(self):
        return hash((self.vars, frozenset(self.terms.items())))

    @staticmethod
    def sum(polys: Iterable["Polynomial"], variables: Sequence[str] | None = None) -> "Polynomial":
        """Single-pass sum; cheaper than repeated ``+`` on long lists."""
        polys = list(polys)
        if variables is None:
            variables = ()
            for p in polys:
                variables = Polynomial._merge_vars(tuple(variables), p.vars)
        variables = tuple(variables)
        acc: dict[tuple[int, ...], object] = {}
        for p in polys:
            for exp, c in p.map_vars(variables).terms.items():
                acc[exp] = acc[exp] + c if exp in acc else c
        return Polynomial(variables, acc)

    # -- evaluation --------------------------------------------------------

    def eval(self, point: Mapping[str, float]):
        """Evaluate at a full variable assignment."""
        vals = []
        for name in self.vars:
            if name not in point:
                raise KeyError(f"no value for variable {name!r}")
            vals.append(point[name])
        total = None
        for exp, c in self.terms.items():
            m = 1.0
            for v, e in zip(vals, exp):
                if e:
                    m *= v ** e
            term = c * m if _is_number(c) else c * m
            total = term if total is None else total + term
        return 0.0 if total is None else total

    def eval_many(self, points: np.ndarray) -> np.ndarray:
        """Vectorized evaluation at rows of ``points`` (numeric coefficients only)."""
        points = np.asarray(points, dtype=float)
        if points.ndim == 1:
            points = points[None, :]
        if points.shape[1] != len(self.vars):
            raise ValueError("point dimension mismatch")
        out = np.zeros(points.shape[0])
        for exp, c in self.terms.items():
            if not _is_number(c):
                raise TypeError("eval_many requires numeric coefficients")
            term = np.full(points.shape[0], float(c))
            for i, e in enumerate(exp):
                if e:
                    term *= points[:, i] ** e
            out += term
        return out

    # -- serialization -----------------------------------------------------

    def to_json(self) -> dict:
        terms = []
        for exp in sorted(self.terms, key=grlex_key):
            c = self.terms[exp]
            if not _is_number(c):
                raise TypeError("only numeric coefficients serialize to JSON")
            terms.append({"exp": list(exp), "c": float(c)})
        return {"vars": list(self.vars), "terms": terms}

    @classmethod
    def from_json(cls, obj: Mapping) -> "Polynomial":
        return cls(tuple(obj["vars"]), {tuple(t["exp"]): float(t["c"]) for t in obj["terms"]})

    def __repr__(self):
        if not self.terms:
            return "Polynomial(0)"
        bits = []
        for exp in sorted(self.terms, key=grlex_key):
            c = self.terms[exp]
            mono = "*".join(
                f"{v}^{e}" if e > 1 else v
                for v, e in zip(self.vars, exp)
                if e
            )
            cs = f"{c:.6g}" if _is_number(c) else f"({c!r})"
            bits.append(f"{cs}*{mono}" if mono else cs)
        return "Polynomial(" + " + ".join(bits) + ")"


def allclose(p: Polynomial, q: Polynomial, tol: float = 1e-9) -> bool:
    """Numeric coefficient-wise comparison."""
    diff = p - q
    return all(_is_number(c) and abs(c) <= tol for c in diff.terms.values())


@dataclass
class CoeffSequence:
    """Finite sequence indexed over a contiguous integer range.

    ``values[i]`` holds the entry at index ``start + i``.  Reads outside the
    range return 0, implementing the zero-padding convention used by the
    cross-correlation below.  Entries may be numbers or polynomial-valued.
    """

    start: int
    values: list = field(default_factory=list)

    @property
    def end(self) -> int:
        return self.start + len(self.values) - 1

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, t: int):
        if self.start <= t <= self.end:
            return self.values[t - self.start]
        return 0.0

    def indices(self) -> range:
        return range(self.start, self.end + 1)

    def to_array(self) -> np.ndarray:
        return np.array([float(v) for v in self.values])

    def l1(self) -> float:
        return float(sum(abs(float(v)) for v in self.values))


def cross_correlate(x: CoeffSequence, y: CoeffSequence) -> CoeffSequence:
    """Finite cross-correlation with zero padding.

    For ``x`` supported on ``l..k`` and ``y`` on ``m..n`` the output is
    supported on ``l..k+n-m`` with entries

        (x ⋆ y)_j = sum_{i=m}^{n} x[i + j - n + m - 1] * y[i],

    where out-of-range reads of ``x`` are zero.  The output length is
    ``len(x) + len(y) - 1``.
    """
    if len(x) == 0 or len(y) == 0:
        raise ValueError("cross_correlate requires nonempty sequences")
    l, k = x.start, x.end
    m, n = y.start, y.end
    out = []
    for j in range(l, k + n - m + 1):
        total = None
        for i in range(m, n + 1):
            xi = x[i + j - n + m - 1]
            yi = y[i]
            if _is_number(xi) and float(xi) == 0.0:
                continue
            if _is_number(yi) and float(yi) == 0.0:
                continue
            term = xi * yi
            total = term if total is None else total + term
        out.append(0.0 if total is None else total)
    return CoeffSequence(l, out)
