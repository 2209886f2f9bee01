"""Compensator synthesis by conic optimization over positivity certificates.

For controller y-feedback u_t = -sum a~_i u_{t-i} ... the closed-loop
denominator coefficients a_cl are affine in the compensator coefficients and
degree one in the plant coefficients.  Superstabilization requires
||a_cl(xi)||_1 <= gamma < 1 for every plant xi in the data-consistency
projection P, which is imposed through 2 n_cl positivity certificates

    m_i - (a_cl)_i(xi) >= 0  and  m_i + (a_cl)_i(xi) >= 0   on P (within Pi),

plus gamma >= sum_i m_i, minimizing gamma.  Two certificate backends are
offered: the variable-eliminated form (``synth_alternatives``, polynomial in
the plant coefficients only) and the explicit full-variable Putinar form
(``synth_full``, polynomial in plant and noise jointly, guarded by a Gram
size limit).  ``model_based_superstab`` solves the noise-free single-model
problem as a plain linear program and is used as ground truth in tests.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .arx import ArxModel, Compensator, closed_loop_coefficients
from .certify import (AlternativesCertificate, PutinarCertificate, alternatives_constraints,
                      alternatives_constraints_w, archimedean_augment, pi_box,
                      putinar_constraints)
from .conic import ConicProgram, LinExpr, default_solver
from .data import BsaSet, Dataset, consistency_set, plant_var_names, solve_lp
from .poly import Polynomial, basis_size


# ---------------------------------------------------------------------------
# size accounting
# ---------------------------------------------------------------------------

@dataclass
class BlockCount:
    count: int
    dim: int

    def to_json(self) -> dict:
        return {"count": self.count, "dim": self.dim}


@dataclass
class SizeReport:
    """Multiplier counts and Gram dimensions for both certificate forms.

    The accounting covers the core blocks (ambient set taken as all of R^N);
    bounding-set multipliers add further blocks of the listed dimensions.
    """

    n_a: int
    n_b: int
    T: int
    full_d: int
    alt_d: int
    n_plant_vars: int
    n_full_vars: int
    full: dict[str, BlockCount]
    alternatives: dict[str, BlockCount]

    def to_json(self) -> dict:
        return {
            "n_a": self.n_a, "n_b": self.n_b, "T": self.T,
            "full_d": self.full_d, "alt_d": self.alt_d,
            "n_plant_vars": self.n_plant_vars, "n_full_vars": self.n_full_vars,
            "full": {k: v.to_json() for k, v in self.full.items()},
            "alternatives": {k: v.to_json() for k, v in self.alternatives.items()},
        }

    def max_full_gram_dim(self) -> int:
        return max(v.dim for v in self.full.values())


def psatz_sizes(n_a: int, n_b: int, T: int, d: int | None = None) -> SizeReport:
    """Per-multiplier block sizes of one positivity certificate at order d.

    With d omitted, each method is reported at its customary reference order:
    the full form at d = 2 and the variable-eliminated form at d = 1.
    """
    full_d = 2 if d is None else d
    alt_d = 1 if d is None else d
    N = n_a + n_b
    n_du = T + n_b - 1
    n_dy = T + n_a
    nf = N + n_du + n_dy
    full = {
        "sigma0": BlockCount(1, basis_size(nf, full_d)),
        "input_box": BlockCount(2 * n_du, basis_size(nf, full_d - 1)),
        "output_box": BlockCount(2 * n_dy, basis_size(nf, full_d - 1)),
        "equality": BlockCount(T, basis_size(nf, 2 * full_d - 2)),
    }
    alternatives = {
        "neg_q": BlockCount(1, basis_size(N, alt_d)),
        "psi": BlockCount(2 * n_du, basis_size(N, alt_d)),
        "zeta": BlockCount(2 * n_dy, basis_size(N, alt_d)),
        "mu": BlockCount(T, basis_size(N, 2 * alt_d - 1)),
    }
    return SizeReport(n_a, n_b, T, full_d, alt_d, N, nf, full, alternatives)


class SizeGuardError(RuntimeError):
    """Raised before assembling a program whose largest Gram block would
    exceed the configured limit."""

    def __init__(self, message: str, report: SizeReport):
        super().__init__(message)
        self.report = report


# ---------------------------------------------------------------------------
# model-based baseline (known plant, no data)
# ---------------------------------------------------------------------------

@dataclass
class ModelBasedResult:
    status: str
    gamma: float | None
    controller: Compensator | None
    a_cl: np.ndarray | None


def model_based_superstab(plant: ArxModel, ctrl_na: int, ctrl_nb: int) -> ModelBasedResult:
    """Minimize ||a_cl||_1 over compensator coefficients for one known plant.

    Linear program: variables (a~, b~, m), rows +-(a_cl)_i <= m_i, objective
    sum m.  The optimum is the best superstability margin achievable at these
    compensator orders.
    """
    nc = ctrl_na + ctrl_nb
    ctrl_a = [LinExpr({i: 1.0}) for i in range(ctrl_na)]
    ctrl_b = [LinExpr({ctrl_na + i: 1.0}) for i in range(ctrl_nb)]
    a_cl = closed_loop_coefficients(plant, (ctrl_a, ctrl_b)).a_cl
    n_cl = len(a_cl)
    nv = nc + n_cl

    A_ub = np.zeros((2 * n_cl, nv))
    b_ub = np.zeros(2 * n_cl)
    for i, entry in enumerate(a_cl):
        if isinstance(entry, LinExpr):
            row = np.zeros(nv)
            for j, v in entry.coeffs.items():
                row[j] = v
            const = entry.const
        else:
            row = np.zeros(nv)
            const = float(entry)
        # a_cl_i - m_i <= 0  and  -a_cl_i - m_i <= 0
        A_ub[2 * i, :] = row
        A_ub[2 * i, nc + i] -= 1.0
        b_ub[2 * i] = -const
        A_ub[2 * i + 1, :] = -row
        A_ub[2 * i + 1, nc + i] -= 1.0
        b_ub[2 * i + 1] = const

    c = np.concatenate([np.zeros(nc), np.ones(n_cl)])
    bounds = [(None, None)] * nc + [(0.0, None)] * n_cl
    res = solve_lp(c, A_ub=A_ub, b_ub=b_ub, bounds=bounds)
    if res.status != "optimal":
        return ModelBasedResult(res.status, None, None, None)
    x = res.x
    ctrl = Compensator(a=list(x[:ctrl_na]), b=list(x[ctrl_na:nc]))
    a_cl_num = np.asarray(closed_loop_coefficients(plant, ctrl).a_cl, dtype=float)
    return ModelBasedResult("optimal", float(res.objective), ctrl, a_cl_num)


# ---------------------------------------------------------------------------
# data-driven synthesis
# ---------------------------------------------------------------------------

@dataclass
class SynthesisResult:
    method: str
    status: str  # superstabilizing | not_superstabilizing | infeasible | solver_error
    gamma: float | None
    controller: Compensator | None
    m: np.ndarray | None
    d: int
    solver: str
    solver_status: str
    sizes: SizeReport
    scale: float
    build_seconds: float
    solve_seconds: float
    certificates: list = field(default_factory=list, repr=False)
    solution: np.ndarray | None = field(default=None, repr=False)
    info: dict = field(default_factory=dict, repr=False)

    def audits(self, n_points: int = 200, seed: int = 0) -> list[dict]:
        """Numeric audit of every positivity certificate at the solution."""
        if self.solution is None:
            raise ValueError("no solution to audit")
        out = []
        for label, cert in self.certificates:
            entry = {"constraint": label}
            entry.update(cert.audit(self.solution, n_points=n_points, seed=seed)
                         if isinstance(cert, AlternativesCertificate)
                         else cert.audit(self.solution))
            out.append(entry)
        return out

    def to_json(self) -> dict:
        return {
            "method": self.method,
            "status": self.status,
            "gamma": self.gamma,
            "controller": self.controller.to_json() if self.controller else None,
            "m": None if self.m is None else [float(v) for v in self.m],
            "d": self.d,
            "solver": self.solver,
            "solver_status": self.solver_status,
            "sizes": self.sizes.to_json(),
            "scale": self.scale,
            "build_seconds": self.build_seconds,
            "solve_seconds": self.solve_seconds,
        }


def _normalized(dataset: Dataset, normalize: bool) -> tuple[Dataset, float]:
    if not normalize:
        return dataset, 1.0
    peak = max(float(np.abs(dataset.u_hat.to_array()).max()),
               float(np.abs(dataset.y_hat.to_array()).max()))
    if peak <= 0.0 or not math.isfinite(peak):
        return dataset, 1.0
    return dataset.scaled(1.0 / peak), peak


def _lift(entry, names: tuple[str, ...]) -> Polynomial:
    """Coerce a closed-loop coefficient (Polynomial / LinExpr / number) into a
    polynomial over the plant variables."""
    if isinstance(entry, Polynomial):
        return entry.map_vars(names)
    return Polynomial((), {(): entry}).map_vars(names)


def _ctrl_arrays(x, a_cols, b_cols):
    return Compensator(a=[float(x[j]) for j in a_cols], b=[float(x[j]) for j in b_cols])


def _gamma_skeleton(prog: ConicProgram, plant: tuple, ctrl_na: int, ctrl_nb: int,
                    gamma_cap: float):
    """Common decision variables: compensator coefficients, bound vector m,
    objective gamma with 0 <= gamma <= cap and gamma >= sum m."""
    ctrl_a = prog.free(ctrl_na)
    ctrl_b = prog.free(ctrl_nb)
    a_syms, b_syms, names = plant
    a_cl = closed_loop_coefficients((a_syms, b_syms), ([e for e in ctrl_a], [e for e in ctrl_b])).a_cl
    n_cl = len(a_cl)
    m = prog.free(n_cl)
    gamma = prog.free_scalar()
    prog.ineq(gamma)
    prog.ineq(LinExpr.sum([gamma] + [-1.0 * mi for mi in m]))
    prog.ineq(gamma_cap - gamma)
    prog.minimize(gamma)
    a_cols = [next(iter(e.coeffs)) for e in ctrl_a]
    b_cols = [next(iter(e.coeffs)) for e in ctrl_b]
    m_cols = [next(iter(e.coeffs)) for e in m]
    gamma_col = next(iter(gamma.coeffs))
    lifted = [_lift(entry, names) for entry in a_cl]
    m_polys = [Polynomial(names, {(0,) * len(names): mi}) for mi in m]
    return lifted, m_polys, a_cols, b_cols, m_cols, gamma_col


def _finish(prog: ConicProgram, method: str, d: int, sizes: SizeReport, scale: float,
            build_seconds: float, a_cols, b_cols, m_cols, gamma_col, certs,
            solver: str | None, verbose: bool) -> SynthesisResult:
    t0 = time.perf_counter()
    try:
        sol = prog.solve(solver=solver, verbose=verbose)
    except Exception as e:  # backend failure, not a modelling error
        return SynthesisResult(method, "solver_error", None, None, None, d,
                               solver or default_solver(), f"exception: {e}", sizes, scale,
                               build_seconds, time.perf_counter() - t0, certs)
    solve_seconds = time.perf_counter() - t0
    if not sol.ok:
        status = "infeasible" if sol.status == "infeasible" else "solver_error"
        return SynthesisResult(method, status, None, None, None, d, sol.solver,
                               sol.status, sizes, scale, build_seconds, solve_seconds,
                               certs, info=sol.info)
    gamma = float(sol.x[gamma_col])
    ctrl = _ctrl_arrays(sol.x, a_cols, b_cols)
    m = np.array([sol.x[j] for j in m_cols])
    status = "superstabilizing" if gamma < 1.0 else "not_superstabilizing"
    return SynthesisResult(method, status, gamma, ctrl, m, d, sol.solver, sol.status,
                           sizes, scale, build_seconds, solve_seconds, certs,
                           solution=sol.x, info=sol.info)


def synth_alternatives(dataset: Dataset, ctrl_na: int, ctrl_nb: int, d: int = 1,
                       Pi: BsaSet | None = None, gamma_cap: float = 10.0,
                       margin: float = 0.0, normalize: bool = True,
                       solver: str | None = None, verbose: bool = False) -> SynthesisResult:
    """Synthesize by the variable-eliminated certificates (plant variables only).

    An ``infeasible`` status means no order-d certificate exists with
    gamma <= gamma_cap, not that the consistency set is empty.
    """
    t0 = time.perf_counter()
    ds, scale = _normalized(dataset, normalize)
    if Pi is None:
        Pi = pi_box(ds.n_a, ds.n_b)
    names = plant_var_names(ds.n_a, ds.n_b)
    a_syms = [Polynomial.variable(f"a{i}", names) for i in range(1, ds.n_a + 1)]
    b_syms = [Polynomial.variable(f"b{i}", names) for i in range(1, ds.n_b + 1)]
    sizes = psatz_sizes(ds.n_a, ds.n_b, ds.T, d)

    prog = ConicProgram()
    lifted, m_polys, a_cols, b_cols, m_cols, gamma_col = _gamma_skeleton(
        prog, (a_syms, b_syms, names), ctrl_na, ctrl_nb, gamma_cap)
    build = alternatives_constraints_w if ds.eps_w is not None else alternatives_constraints
    certs = []
    for i, (acl_i, m_i) in enumerate(zip(lifted, m_polys), start=1):
        certs.append((f"m{i} - a_cl{i}", build(prog, m_i - acl_i, ds, d, Pi, margin)))
        certs.append((f"m{i} + a_cl{i}", build(prog, m_i + acl_i, ds, d, Pi, margin)))
    build_seconds = time.perf_counter() - t0
    return _finish(prog, "alternatives", d, sizes, scale, build_seconds,
                   a_cols, b_cols, m_cols, gamma_col, certs, solver, verbose)


def full_synthesis_set(dataset: Dataset, radius: float = 2.0) -> BsaSet:
    """Consistency set over (a, b, du, dy) augmented with the plant box and a
    ball over all variables, making the description compact."""
    K = consistency_set(dataset)
    names = K.vars
    N = dataset.n_a + dataset.n_b
    ineqs = list(K.inequalities)
    for name in names[:N]:
        v = Polynomial.variable(name, names)
        ineqs.append(Polynomial.constant(radius * radius, names) - v * v)
    noise_bounds = ([dataset.eps_u] * (dataset.T + dataset.n_b - 1)
                    + [dataset.eps_y] * (dataset.T + dataset.n_a))
    if dataset.eps_w is not None:
        # relaxed relations do not bound the noise any tighter
        pass
    radius_sq = N * radius * radius + sum(e * e for e in noise_bounds)
    ball = Polynomial.constant(radius_sq, names)
    for name in names:
        v = Polynomial.variable(name, names)
        ball = ball - v * v
    box = [(-radius, radius)] * N + [(-e, e) for e in noise_bounds]
    return BsaSet(names, ineqs + [ball], list(K.equalities), box=box)


def synth_full(dataset: Dataset, ctrl_na: int, ctrl_nb: int, d: int = 2,
               radius: float = 2.0, gamma_cap: float = 10.0, margin: float = 0.0,
               normalize: bool = True, max_gram_dim: int = 300,
               solver: str | None = None, verbose: bool = False) -> SynthesisResult:
    """Synthesize by explicit certificates over plant and noise jointly.

    The largest Gram block has dimension C(n_vars + d, d); assembly refuses to
    start (SizeGuardError) when that exceeds ``max_gram_dim``.
    """
    t0 = time.perf_counter()
    ds, scale = _normalized(dataset, normalize)
    sizes = psatz_sizes(ds.n_a, ds.n_b, ds.T, d)
    if sizes.max_full_gram_dim() > max_gram_dim:
        raise SizeGuardError(
            f"largest Gram block {sizes.max_full_gram_dim()} exceeds limit {max_gram_dim} "
            f"(n_full_vars={sizes.n_full_vars}, d={d}); raise max_gram_dim to force assembly",
            sizes)
    K = full_synthesis_set(ds, radius)
    names = plant_var_names(ds.n_a, ds.n_b)
    a_syms = [Polynomial.variable(f"a{i}", names) for i in range(1, ds.n_a + 1)]
    b_syms = [Polynomial.variable(f"b{i}", names) for i in range(1, ds.n_b + 1)]

    prog = ConicProgram()
    lifted, m_polys, a_cols, b_cols, m_cols, gamma_col = _gamma_skeleton(
        prog, (a_syms, b_syms, names), ctrl_na, ctrl_nb, gamma_cap)
    certs = []
    for i, (acl_i, m_i) in enumerate(zip(lifted, m_polys), start=1):
        certs.append((f"m{i} - a_cl{i}", putinar_constraints(prog, m_i - acl_i, K, d, margin)))
        certs.append((f"m{i} + a_cl{i}", putinar_constraints(prog, m_i + acl_i, K, d, margin)))
    build_seconds = time.perf_counter() - t0
    return _finish(prog, "full", d, sizes, scale, build_seconds,
                   a_cols, b_cols, m_cols, gamma_col, certs, solver, verbose)


def hierarchy(dataset: Dataset, ctrl_na: int, ctrl_nb: int, d_max: int = 3,
              improvement_tol: float = 1e-4, **kwargs) -> list[SynthesisResult]:
    """Run synth_alternatives at d = 1, 2, ... collecting one result per level.

    Stops early once a superstabilizing controller exists and the gamma
    improvement over the previous level falls below ``improvement_tol``.
    Solver failures at one level do not abort later levels.
    """
    results: list[SynthesisResult] = []
    prev_gamma = None
    for d in range(1, d_max + 1):
        try:
            res = synth_alternatives(dataset, ctrl_na, ctrl_nb, d=d, **kwargs)
        except Exception as e:
            res = SynthesisResult("alternatives", "solver_error", None, None, None, d,
                                  default_solver(), f"exception: {e}",
                                  psatz_sizes(dataset.n_a, dataset.n_b, dataset.T, d), 1.0,
                                  0.0, 0.0)
        results.append(res)
        if res.gamma is not None:
            if (prev_gamma is not None and res.gamma < 1.0
                    and prev_gamma - res.gamma < improvement_tol):
                break
            prev_gamma = res.gamma
    return results
