"""ARX models, output-feedback compensators, and superstability measures.

Conventions (lag-operator form): a plant with orders (n_a, n_b) obeys

    y_t = - sum_{i=1..n_a} a_i y_{t-i} + sum_{i=1..n_b} b_i u_{t-i},

i.e. the transfer function is G = B / (1 + A) with A = sum a_i lam^i and
B = sum b_i lam^i (strictly proper: B has no constant term).  Connecting a
compensator u = (B~ / (1 + A~)) y in positive feedback yields the closed-loop
denominator 1 + A_cl with

    A_cl = (1 + A)(1 + A~) + B B~ - 1,

a polynomial of degree n_cl = n_a + n~_a whose coefficient vector a_cl is
affine in the compensator parameters and degree 1 in the plant parameters.
Superstability asks ||a_cl||_1 < 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .poly import CoeffSequence, Polynomial, _is_number


@dataclass
class ArxModel:
    """ARX plant with denominator coefficients ``a`` and numerator ``b``."""

    a: list
    b: list

    def __post_init__(self):
        self.a = list(self.a)
        self.b = list(self.b)
        if len(self.a) <= len(self.b) or len(self.b) < 1:
            raise ValueError("ARX orders must satisfy n_a > n_b >= 1")

    @property
    def n_a(self) -> int:
        return len(self.a)

    @property
    def n_b(self) -> int:
        return len(self.b)

    def to_json(self) -> dict:
        return {"a": [float(v) for v in self.a], "b": [float(v) for v in self.b]}

    @classmethod
    def from_json(cls, obj: dict) -> "ArxModel":
        return cls(a=list(obj["a"]), b=list(obj["b"]))


@dataclass
class Compensator:
    """Output-feedback compensator u = (B~ / (1 + A~)) y."""

    a: list
    b: list

    def __post_init__(self):
        self.a = list(self.a)
        self.b = list(self.b)
        if len(self.a) < 1 or len(self.b) < 1:
            raise ValueError("compensator orders must be at least 1")

    @property
    def n_a(self) -> int:
        return len(self.a)

    @property
    def n_b(self) -> int:
        return len(self.b)

    def to_json(self) -> dict:
        return {"a": [float(v) for v in self.a], "b": [float(v) for v in self.b]}

    @classmethod
    def from_json(cls, obj: dict) -> "Compensator":
        return cls(a=list(obj["a"]), b=list(obj["b"]))


@dataclass
class ClosedLoopCoeffs:
    """Coefficients a_cl of the closed-loop denominator (index 1..n_cl)."""

    a_cl: list
    n_cl: int = field(init=False)

    def __post_init__(self):
        self.a_cl = list(self.a_cl)
        self.n_cl = len(self.a_cl)

    def as_array(self) -> np.ndarray:
        return np.array([float(v) for v in self.a_cl])


def simulate(model: ArxModel, u: CoeffSequence, y_init: Sequence[float], T: int,
             w: CoeffSequence | None = None) -> CoeffSequence:
    """Run the ARX recursion for ``T`` steps.

    Parameters
    ----------
    model : ArxModel
    u : CoeffSequence
        Input record; the recursion reads ``u[t-i]`` for t = 1..T, i = 1..n_b,
        i.e. indices (1 - n_b)..(T - 1).  Out-of-range reads are zero.
    y_init : sequence of n_a floats
        Output history y_{1-n_a}, ..., y_0 (chronological order).
    T : int
        Number of steps to simulate.
    w : CoeffSequence, optional
        Additive process disturbance entering as ``+ w[t]``.

    Returns
    -------
    CoeffSequence
        The full output record over (1 - n_a)..T: history followed by the
        T simulated samples.
    """
    n_a, n_b = model.n_a, model.n_b
    y_init = [float(v) for v in y_init]
    if len(y_init) != n_a:
        raise ValueError(f"y_init must supply {n_a} values y_(1-n_a)..y_0")
    y = CoeffSequence(1 - n_a, list(y_init))
    for t in range(1, T + 1):
        acc = 0.0
        for i, ai in enumerate(model.a, start=1):
            acc -= ai * y[t - i]
        for i, bi in enumerate(model.b, start=1):
            acc += bi * u[t - i]
        if w is not None:
            acc += w[t]
        y.values.append(acc)
    return y


def _conv(x: list, y: list) -> list:
    """Polynomial-coefficient convolution; entries may be numbers or polynomials."""
    out: list = [0.0] * (len(x) + len(y) - 1)
    for i, xi in enumerate(x):
        if _is_number(xi) and float(xi) == 0.0:
            continue
        for j, yj in enumerate(y):
            if _is_number(yj) and float(yj) == 0.0:
                continue
            out[i + j] = out[i + j] + xi * yj
    return out


def _coeff_lists(obj) -> tuple[list, list]:
    if isinstance(obj, (ArxModel, Compensator)):
        return list(obj.a), list(obj.b)
    a, b = obj
    return list(a), list(b)


def closed_loop_coefficients(plant, ctrl) -> ClosedLoopCoeffs:
    """Closed-loop denominator coefficients a_cl per the module convention.

    Both arguments may be ArxModel/Compensator instances or (a, b) pairs.
    Entries may be numbers, polynomials (symbolic plant), or solver
    expressions (decision-variable compensator); the result entries are then
    polynomial-valued and affine in the compensator parameters.
    """
    pa, pb = _coeff_lists(plant)
    ca, cb = _coeff_lists(ctrl)
    one_plus = _conv([1.0] + pa, [1.0] + ca)
    bb = _conv([0.0] + pb, [0.0] + cb)
    n_cl = max(len(pa) + len(ca), len(pb) + len(cb))
    coeffs = [0.0] * (n_cl + 1)
    for i, v in enumerate(one_plus):
        coeffs[i] = coeffs[i] + v
    for i, v in enumerate(bb):
        coeffs[i] = coeffs[i] + v
    const = coeffs[0] - 1.0
    if _is_number(const):
        cancelled = abs(float(const)) <= 1e-9
    else:
        cancelled = hasattr(const, "is_zero") and const.is_zero()
    if not cancelled:
        raise AssertionError("closed-loop constant term failed to cancel")
    return ClosedLoopCoeffs(coeffs[1:])


def superstable_margin(a_cl) -> float:
    """l1 norm of the closed-loop coefficient vector; superstable iff < 1."""
    if isinstance(a_cl, ClosedLoopCoeffs):
        vec = a_cl.as_array()
    else:
        vec = np.asarray([float(v) for v in a_cl])
    return float(np.sum(np.abs(vec)))


def decay_envelope(gamma: float, n: int, max_history: float, t: int) -> float:
    """Guaranteed output bound for a superstable loop of order ``n``.

    For ||a_cl||_1 = gamma < 1 and M = max over the n most recent history
    samples |y_0|, ..., |y_{1-n}|, the recursion contracts by gamma over each
    block of n steps:

        |y_t| <= gamma^(floor((t-1)/n) + 1) * M     for t >= 1.

    For t <= 0 the bound is M itself.  gamma = 0 gives the deadbeat envelope
    (0 for every t >= 1).
    """
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    if n < 1:
        raise ValueError("order must be positive")
    if t <= 0:
        return float(max_history)
    return float(gamma ** ((t - 1) // n + 1) * max_history)


def plant_symbols(n_a: int, n_b: int) -> tuple[list[Polynomial], list[Polynomial], tuple[str, ...]]:
    """Indeterminates a_1..a_na, b_1..b_nb as degree-1 polynomials.

    Returns (a polynomials, b polynomials, shared variable registry).
    """
    names = tuple([f"a{i}" for i in range(1, n_a + 1)] + [f"b{i}" for i in range(1, n_b + 1)])
    a = [Polynomial.variable(f"a{i}", names) for i in range(1, n_a + 1)]
    b = [Polynomial.variable(f"b{i}", names) for i in range(1, n_b + 1)]
    return a, b, names
