"""Positivity certificates over basic semialgebraic sets.

Two certificate families are built here, both as blocks inside one conic
program:

* Weighted-SOS (Putinar) membership at truncation degree 2d over an explicit
  set description: q = sigma_0 + sum_i sigma_i g_i + sum_j phi_j h_j with each
  sigma an SOS Gram block (multiplier degrees filled to 2d) and phi free.

* The variable-eliminated form for positivity over the plant projection of a
  data-consistency set: the noise variables are removed by dualizing the inner
  linear program, leaving SOS vectors psi+/-, zeta+/- and free polynomial
  multipliers mu over the plant box Pi, tied together by the cross-correlation
  couplings

      psi+ - psi- = mu * b,      zeta+ - zeta- = mu * [1; a],

  and one final membership -Q in Sigma[Pi] with
  Q = -q + eps_u 1'(psi+ + psi-) + h'mu + eps_y 1'(zeta+ + zeta-).

  With a process-noise allowance eps_w, mu splits into a difference of two
  nonnegative-over-Pi blocks and Q gains + eps_w 1'(mu+ + mu-).

The couplings are aligned so that entry j of (mu * b) (j = 1..T+n_b-1) pairs
with noise coordinate du[j - n_b], and entry j of (mu * [1;a])
(j = 1..T+n_a, with [1;a] supported on 1..n_a+1) pairs with dy[j - n_a]; both
vectors then run over exactly the recorded noise index ranges.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .conic import ConicProgram, GramHandle, LinExpr
from .data import BsaSet, Dataset, plant_var_names, residual_h
from .poly import CoeffSequence, Polynomial, _is_number, cross_correlate, monomial_basis


# ---------------------------------------------------------------------------
# set constructions
# ---------------------------------------------------------------------------

def box_set(names, radius: float | list = 2.0) -> BsaSet:
    """Per-coordinate box {|x_i| <= r_i} written as quadratics r_i^2 - x_i^2 >= 0."""
    names = tuple(names)
    radii = [float(radius)] * len(names) if np.isscalar(radius) else [float(r) for r in radius]
    ineqs = []
    for name, r in zip(names, radii):
        v = Polynomial.variable(name, names)
        ineqs.append(Polynomial.constant(r * r, names) - v * v)
    return BsaSet(names, ineqs, [], box=[(-r, r) for r in radii])


def archimedean_augment(K: BsaSet, radius_sq: float | None = None) -> BsaSet:
    """Append the ball radius_sq - ||x||^2 >= 0, making the description
    syntactically Archimedean.  The default radius is the sum of squared
    per-coordinate bounds read off K.box (or 4 per coordinate)."""
    names = K.vars
    if radius_sq is None:
        if K.box is not None:
            radius_sq = sum(max(abs(lo), abs(hi)) ** 2 for lo, hi in K.box)
        else:
            radius_sq = 4.0 * len(names)
    ball = Polynomial.constant(float(radius_sq), names)
    for name in names:
        v = Polynomial.variable(name, names)
        ball = ball - v * v
    return BsaSet(names, list(K.inequalities) + [ball], list(K.equalities), box=K.box)


def pi_box(n_a: int, n_b: int, radius: float = 2.0) -> BsaSet:
    """Default plant-parameter set Pi: coordinate box plus Archimedean ball."""
    return archimedean_augment(box_set(plant_var_names(n_a, n_b), radius))


# ---------------------------------------------------------------------------
# SOS building blocks
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _gram_template(nvars: int, half_degree: int):
    """Monomial basis and the map exp -> [(packed Gram offset, multiplicity)]."""
    basis = monomial_basis(nvars, half_degree)
    table: dict[tuple[int, ...], list[tuple[int, int]]] = {}
    for i in range(len(basis)):
        for j in range(i + 1):
            exp = tuple(a + b for a, b in zip(basis[i], basis[j]))
            off = i * (i + 1) // 2 + j
            table.setdefault(exp, []).append((off, 1 if i == j else 2))
    return basis, table


class SosBlock:
    """A single SOS polynomial z(x)' G z(x), G a PSD block (or a scalar)."""

    def __init__(self, prog: ConicProgram, variables: tuple[str, ...], half_degree: int):
        self.vars = tuple(variables)
        self.half_degree = half_degree
        basis, table = _gram_template(len(self.vars), half_degree)
        self.basis = basis
        self.dim = len(basis)
        if self.dim == 1:
            self.gram = None
            self.scalar = prog.nonneg(1)[0]
            self.expansion = Polynomial(self.vars, {(0,) * len(self.vars): self.scalar})
        else:
            self.gram = prog.psd(self.dim)
            self.scalar = None
            terms = {
                exp: LinExpr({self.gram.start + off: float(mult) for off, mult in pairs})
                for exp, pairs in table.items()
            }
            self.expansion = Polynomial(self.vars, terms)

    def gram_value(self, x: np.ndarray) -> np.ndarray:
        if self.gram is None:
            return np.array([[self.scalar.value(x)]])
        return self.gram.value(x)

    def min_eig(self, x: np.ndarray) -> float:
        return float(np.linalg.eigvalsh(self.gram_value(x)).min())

    def numeric_poly(self, x: np.ndarray) -> Polynomial:
        """Re-expand z' G z from the solved Gram (independent of the template)."""
        G = self.gram_value(x)
        terms: dict[tuple[int, ...], float] = {}
        for i in range(self.dim):
            for j in range(self.dim):
                exp = tuple(a + b for a, b in zip(self.basis[i], self.basis[j]))
                terms[exp] = terms.get(exp, 0.0) + G[i, j]
        return Polynomial(self.vars, terms)


class FreePoly:
    """A polynomial with free coefficients over a degree-bounded basis."""

    def __init__(self, prog: ConicProgram, variables: tuple[str, ...], degree: int):
        self.vars = tuple(variables)
        self.degree = degree
        self.basis = monomial_basis(len(self.vars), degree)
        self.coeffs = prog.free(len(self.basis))
        self.expansion = Polynomial(self.vars, dict(zip(self.basis, self.coeffs)))

    def numeric_poly(self, x: np.ndarray) -> Polynomial:
        return Polynomial(self.vars, {e: c.value(x) for e, c in zip(self.basis, self.coeffs)})


@dataclass
class WsosBlock:
    """Weighted-SOS membership sigma_0 + sum sigma_i g_i + sum phi_j h_j."""

    sigma0: SosBlock
    ineq_multipliers: list[tuple[Polynomial, SosBlock]]
    eq_multipliers: list[tuple[Polynomial, FreePoly]]
    expansion: Polynomial

    def max_gram_dim(self) -> int:
        dims = [self.sigma0.dim] + [s.dim for _, s in self.ineq_multipliers]
        return max(dims)

    def numeric_poly(self, x: np.ndarray) -> Polynomial:
        parts = [self.sigma0.numeric_poly(x)]
        for g, s in self.ineq_multipliers:
            parts.append(g * s.numeric_poly(x))
        for h, f in self.eq_multipliers:
            parts.append(h * f.numeric_poly(x))
        return Polynomial.sum(parts, self.sigma0.vars)

    def min_gram_eig(self, x: np.ndarray) -> float:
        eigs = [self.sigma0.min_eig(x)] + [s.min_eig(x) for _, s in self.ineq_multipliers]
        return float(min(eigs))

    def reexpand_residual(self, x: np.ndarray) -> float:
        """Max coefficient gap between the assembled expansion (template path)
        and an independent re-expansion from the solved Grams."""
        direct = substitute_solution(self.expansion, x)
        diff = direct - self.numeric_poly(x)
        return max((abs(float(c)) for c in diff.terms.values()), default=0.0)


def wsos_membership(prog: ConicProgram, K: BsaSet, degree: int) -> WsosBlock:
    """Fresh WSOS membership block at (even) truncation ``degree`` over K.

    Inequality multipliers take degree 2*floor((degree - deg g)/2); equality
    multipliers are free polynomials filling to ``degree`` exactly.
    Constraints of degree above ``degree`` get no multiplier.
    """
    if degree < 0 or degree % 2:
        raise ValueError("membership degree must be even and nonnegative")
    sigma0 = SosBlock(prog, K.vars, degree // 2)
    parts: list[Polynomial] = [sigma0.expansion]
    ineq_ms = []
    for g in K.inequalities:
        slack = degree - g.degree()
        if slack < 0:
            continue
        s = SosBlock(prog, K.vars, slack // 2)
        ineq_ms.append((g, s))
        parts.append(g * s.expansion)
    eq_ms = []
    for h in K.equalities:
        slack = degree - h.degree()
        if slack < 0:
            continue
        f = FreePoly(prog, K.vars, slack)
        eq_ms.append((h, f))
        parts.append(h * f.expansion)
    return WsosBlock(sigma0, ineq_ms, eq_ms, Polynomial.sum(parts, K.vars))


# ---------------------------------------------------------------------------
# constraint emission helpers
# ---------------------------------------------------------------------------

def poly_zero(prog: ConicProgram, parts: list[tuple[float, Polynomial]], tol: float = 1e-9):
    """Emit coefficient-matching equalities for sum_k scale_k * p_k = 0."""
    registry: tuple[str, ...] = ()
    for _, p in parts:
        registry = Polynomial._merge_vars(registry, p.vars)
    rows: dict[tuple[int, ...], tuple[dict[int, float], float]] = {}
    for scale, p in parts:
        p = p.map_vars(registry)
        for exp, c in p.terms.items():
            coeffs, const = rows.get(exp, (None, 0.0))
            if coeffs is None:
                coeffs = {}
            if isinstance(c, LinExpr):
                const += scale * c.const
                for j, v in c.coeffs.items():
                    coeffs[j] = coeffs.get(j, 0.0) + scale * v
            else:
                const += scale * float(c)
            rows[exp] = (coeffs, const)
    for exp, (coeffs, const) in rows.items():
        coeffs = {j: v for j, v in coeffs.items() if v != 0.0}
        if not coeffs:
            if abs(const) > tol:
                raise ValueError(f"structurally infeasible constraint: {const} = 0 at {exp}")
            continue
        prog.eq_rows.append((coeffs, const))


def substitute_solution(p: Polynomial, x: np.ndarray) -> Polynomial:
    """Replace solver-affine coefficients by their values at solution x."""
    return Polynomial(p.vars, {e: (c.value(x) if isinstance(c, LinExpr) else c)
                               for e, c in p.terms.items()})


def sample_box_min(p: Polynomial, box: list[tuple[float, float]], n: int, seed: int = 0) -> float:
    """Minimum of a numeric polynomial over n uniform box samples."""
    rng = np.random.default_rng(seed)
    lo = np.array([b[0] for b in box])
    hi = np.array([b[1] for b in box])
    pts = rng.uniform(lo, hi, size=(n, len(box)))
    return float(p.eval_many(pts).min()) if len(box) else float(p.eval({}))


# ---------------------------------------------------------------------------
# Putinar certificates (explicit-set form)
# ---------------------------------------------------------------------------

@dataclass
class PutinarCertificate:
    """Handles to the blocks proving q - margin >= 0 on K."""

    q: Polynomial
    K: BsaSet
    d: int
    margin: float
    block: WsosBlock

    def audit(self, x: np.ndarray) -> dict:
        q_num = substitute_solution(self.q, x).map_vars(self.K.vars)
        target = q_num - Polynomial.constant(self.margin, self.K.vars)
        resid = target - self.block.numeric_poly(x)
        return {
            "identity_residual": max((abs(float(c)) for c in resid.terms.values()), default=0.0),
            "reexpansion_residual": self.block.reexpand_residual(x),
            "min_gram_eig": self.block.min_gram_eig(x),
        }

    def to_json(self, x: np.ndarray) -> dict:
        return {
            "kind": "putinar",
            "degree": self.d,
            "margin": self.margin,
            "q": substitute_solution(self.q, x).to_json(),
            "sigma0": _sos_json(self.block.sigma0, x),
            "inequality_multipliers": [
                {"constraint": g.to_json(), "sigma": _sos_json(s, x)}
                for g, s in self.block.ineq_multipliers
            ],
            "equality_multipliers": [
                {"constraint": h.to_json(), "phi": f.numeric_poly(x).to_json()}
                for h, f in self.block.eq_multipliers
            ],
            "audit": self.audit(x),
        }


def _sos_json(s: SosBlock, x: np.ndarray) -> dict:
    G = s.gram_value(x)
    tri = [float(G[i, j]) for i in range(s.dim) for j in range(i + 1)]
    return {
        "basis": [list(e) for e in s.basis],
        "gram_lower_triangle": tri,
        "poly": s.numeric_poly(x).to_json(),
    }


def putinar_constraints(prog: ConicProgram, q: Polynomial, K: BsaSet, d: int,
                        margin: float = 0.0) -> PutinarCertificate:
    """Constrain q - margin to lie in the degree-2d truncated quadratic module of K."""
    if d < 1:
        raise ValueError("relaxation order d must be >= 1")
    q = q.map_vars(Polynomial._merge_vars(K.vars, q.vars))
    if q.vars != K.vars:
        raise ValueError("q uses variables outside the set description")
    if q.degree() > 2 * d:
        raise ValueError(f"deg q = {q.degree()} exceeds 2d = {2 * d}")
    block = wsos_membership(prog, K, 2 * d)
    parts = [(1.0, q), (-1.0, block.expansion)]
    if margin:
        parts.append((-margin, Polynomial.constant(1.0, K.vars)))
    poly_zero(prog, parts)
    return PutinarCertificate(q, K, d, margin, block)


# ---------------------------------------------------------------------------
# variable-eliminated certificates (consistency-set form)
# ---------------------------------------------------------------------------

@dataclass
class AlternativesCertificate:
    """Multiplier handles for positivity of q over the plant-consistency set.

    psi vectors are indexed j = 1..T+n_b-1 (noise index du[j - n_b]); zeta
    vectors j = 1..T+n_a (noise index dy[j - n_a]); mu is indexed t = 1..T.
    """

    q: Polynomial
    Pi: BsaSet
    d: int
    margin: float
    h: list[Polynomial]
    eps_u: float
    eps_y: float
    eps_w: float | None
    psi_plus: list[WsosBlock]
    psi_minus: list[WsosBlock]
    zeta_plus: list[WsosBlock]
    zeta_minus: list[WsosBlock]
    mu: list  # FreePoly (base) or (WsosBlock, WsosBlock) pairs (process noise)
    negq: WsosBlock
    n_a: int
    n_b: int

    def _mu_polys(self, x: np.ndarray) -> list[Polynomial]:
        out = []
        for m in self.mu:
            if isinstance(m, FreePoly):
                out.append(m.numeric_poly(x))
            else:
                plus, minus = m
                out.append(plus.numeric_poly(x) - minus.numeric_poly(x))
        return out

    def coupling_residual(self, x: np.ndarray) -> float:
        """Max coefficient violation of the two cross-correlation identities."""
        names = self.Pi.vars
        mu_seq = CoeffSequence(1, self._mu_polys(x))
        b_seq = CoeffSequence(1, [Polynomial.variable(f"b{i}", names)
                                  for i in range(1, self.n_b + 1)])
        one_a = CoeffSequence(1, [Polynomial.constant(1.0, names)]
                              + [Polynomial.variable(f"a{i}", names)
                                 for i in range(1, self.n_a + 1)])
        worst = 0.0
        for rhs_seq, plus, minus in (
            (cross_correlate(mu_seq, b_seq), self.psi_plus, self.psi_minus),
            (cross_correlate(mu_seq, one_a), self.zeta_plus, self.zeta_minus),
        ):
            for j, (bp, bm) in enumerate(zip(plus, minus), start=1):
                lhs = bp.numeric_poly(x) - bm.numeric_poly(x)
                rhs = rhs_seq[j]
                rhs = rhs if isinstance(rhs, Polynomial) else Polynomial.constant(rhs, names)
                diff = lhs - rhs
                worst = max(worst, max((abs(float(c)) for c in diff.terms.values()), default=0.0))
        return worst

    def q_poly(self, x: np.ndarray) -> Polynomial:
        """Numeric Q = -(q - margin) + eps_u 1'(psi) + h'mu + eps_y 1'(zeta) (+ eps_w term)."""
        names = self.Pi.vars
        parts = [(-1.0) * substitute_solution(self.q, x).map_vars(names),
                 Polynomial.constant(self.margin, names)]
        for bp in self.psi_plus + self.psi_minus:
            parts.append(self.eps_u * bp.numeric_poly(x))
        for bz in self.zeta_plus + self.zeta_minus:
            parts.append(self.eps_y * bz.numeric_poly(x))
        for h_t, mu_t in zip(self.h, self._mu_polys(x)):
            parts.append(h_t * mu_t)
        if self.eps_w is not None:
            for m in self.mu:
                plus, minus = m
                parts.append(self.eps_w * (plus.numeric_poly(x) + minus.numeric_poly(x)))
        return Polynomial.sum(parts, names)

    def audit(self, x: np.ndarray, n_points: int = 200, seed: int = 0) -> dict:
        negq_num = self.negq.numeric_poly(x)
        recon = negq_num + self.q_poly(x)
        blocks = (self.psi_plus + self.psi_minus + self.zeta_plus + self.zeta_minus
                  + [self.negq])
        for m in self.mu:
            if not isinstance(m, FreePoly):
                blocks.extend(m)
        box = self.Pi.box or [(-2.0, 2.0)] * len(self.Pi.vars)
        return {
            "coupling_residual": self.coupling_residual(x),
            "q_reconstruction_residual": max((abs(float(c)) for c in recon.terms.values()),
                                             default=0.0),
            "reexpansion_residual": max(b.reexpand_residual(x) for b in blocks),
            "min_gram_eig": min(b.min_gram_eig(x) for b in blocks),
            "negq_sampled_min": sample_box_min(negq_num, box, n_points, seed),
        }

    def to_json(self, x: np.ndarray) -> dict:
        def blockdump(blocks):
            return [{"sigma0": _sos_json(b.sigma0, x),
                     "poly": b.numeric_poly(x).to_json()} for b in blocks]

        mu_json = []
        for m in self.mu:
            if isinstance(m, FreePoly):
                mu_json.append(m.numeric_poly(x).to_json())
            else:
                mu_json.append({"plus": m[0].numeric_poly(x).to_json(),
                                "minus": m[1].numeric_poly(x).to_json()})
        return {
            "kind": "alternatives" if self.eps_w is None else "alternatives_w",
            "degree": self.d,
            "margin": self.margin,
            "q": substitute_solution(self.q, x).to_json(),
            "psi_plus": blockdump(self.psi_plus),
            "psi_minus": blockdump(self.psi_minus),
            "zeta_plus": blockdump(self.zeta_plus),
            "zeta_minus": blockdump(self.zeta_minus),
            "mu": mu_json,
            "neg_q": {"sigma0": _sos_json(self.negq.sigma0, x),
                      "poly": self.negq.numeric_poly(x).to_json()},
            "audit": self.audit(x),
        }


def _alternatives_core(prog: ConicProgram, q: Polynomial, dataset: Dataset, d: int,
                       Pi: BsaSet | None, margin: float, process_noise: bool) -> AlternativesCertificate:
    if d < 1:
        raise ValueError("relaxation order d must be >= 1")
    n_a, n_b, T = dataset.n_a, dataset.n_b, dataset.T
    if Pi is None:
        Pi = pi_box(n_a, n_b)
    names = Pi.vars
    for v in q.vars:
        if v not in names:
            raise ValueError(f"q variable {v!r} is not a plant parameter")
    q = q.map_vars(names)
    if q.degree() > 2 * d:
        raise ValueError(f"deg q = {q.degree()} exceeds 2d = {2 * d}")

    h = [p.map_vars(names) for p in residual_h(dataset)]
    two_d = 2 * d

    psi_plus = [wsos_membership(prog, Pi, two_d) for _ in range(T + n_b - 1)]
    psi_minus = [wsos_membership(prog, Pi, two_d) for _ in range(T + n_b - 1)]
    zeta_plus = [wsos_membership(prog, Pi, two_d) for _ in range(T + n_a)]
    zeta_minus = [wsos_membership(prog, Pi, two_d) for _ in range(T + n_a)]

    if process_noise:
        mu: list = [(wsos_membership(prog, Pi, two_d), wsos_membership(prog, Pi, two_d))
                    for _ in range(T)]
        mu_polys = [p.expansion - m.expansion for p, m in mu]
    else:
        mu = [FreePoly(prog, names, two_d - 1) for _ in range(T)]
        mu_polys = [m.expansion for m in mu]

    # couplings: psi+ - psi- = mu * b and zeta+ - zeta- = mu * [1; a]
    mu_seq = CoeffSequence(1, mu_polys)
    b_seq = CoeffSequence(1, [Polynomial.variable(f"b{i}", names) for i in range(1, n_b + 1)])
    one_a = CoeffSequence(1, [Polynomial.constant(1.0, names)]
                          + [Polynomial.variable(f"a{i}", names) for i in range(1, n_a + 1)])
    psi_rhs = cross_correlate(mu_seq, b_seq)
    zeta_rhs = cross_correlate(mu_seq, one_a)
    for j in range(1, T + n_b):
        rhs = psi_rhs[j]
        rhs = rhs if isinstance(rhs, Polynomial) else Polynomial.constant(rhs, names)
        poly_zero(prog, [(1.0, psi_plus[j - 1].expansion),
                         (-1.0, psi_minus[j - 1].expansion),
                         (-1.0, rhs)])
    for j in range(1, T + n_a + 1):
        rhs = zeta_rhs[j]
        rhs = rhs if isinstance(rhs, Polynomial) else Polynomial.constant(rhs, names)
        poly_zero(prog, [(1.0, zeta_plus[j - 1].expansion),
                         (-1.0, zeta_minus[j - 1].expansion),
                         (-1.0, rhs)])

    # -Q in Sigma[Pi]:  negq.expansion + Q = 0
    negq = wsos_membership(prog, Pi, two_d)
    parts: list[tuple[float, Polynomial]] = [(1.0, negq.expansion), (-1.0, q),
                                             (margin, Polynomial.constant(1.0, names))]
    if dataset.eps_u:
        for b in psi_plus + psi_minus:
            parts.append((dataset.eps_u, b.expansion))
    if dataset.eps_y:
        for b in zeta_plus + zeta_minus:
            parts.append((dataset.eps_y, b.expansion))
    for h_t, mu_t in zip(h, mu_polys):
        parts.append((1.0, h_t * mu_t))
    if process_noise and dataset.eps_w:
        for p, m in mu:
            parts.append((dataset.eps_w, p.expansion))
            parts.append((dataset.eps_w, m.expansion))
    poly_zero(prog, parts)

    return AlternativesCertificate(
        q=q, Pi=Pi, d=d, margin=margin, h=h,
        eps_u=dataset.eps_u, eps_y=dataset.eps_y,
        eps_w=(dataset.eps_w if process_noise else None),
        psi_plus=psi_plus, psi_minus=psi_minus,
        zeta_plus=zeta_plus, zeta_minus=zeta_minus,
        mu=mu, negq=negq, n_a=n_a, n_b=n_b)


def alternatives_constraints(prog: ConicProgram, q: Polynomial, dataset: Dataset, d: int,
                             Pi: BsaSet | None = None, margin: float = 0.0) -> AlternativesCertificate:
    """Positivity of q over the plant projection of the consistency set
    (equality-constrained noise model; requires dataset.eps_w unset)."""
    if dataset.eps_w is not None:
        raise ValueError("dataset has a process-noise bound; use alternatives_constraints_w")
    return _alternatives_core(prog, q, dataset, d, Pi, margin, process_noise=False)


def alternatives_constraints_w(prog: ConicProgram, q: Polynomial, dataset: Dataset, d: int,
                               Pi: BsaSet | None = None, margin: float = 0.0) -> AlternativesCertificate:
    """Process-noise variant: mu = mu+ - mu- with both blocks nonnegative over
    Pi and Q gaining + eps_w 1'(mu+ + mu-)."""
    if dataset.eps_w is None:
        raise ValueError("dataset has no process-noise bound eps_w")
    return _alternatives_core(prog, q, dataset, d, Pi, margin, process_noise=True)
