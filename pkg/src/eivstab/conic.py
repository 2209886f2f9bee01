"""Thin conic-programming layer: linear objective, affine equality and
inequality rows, and free / nonnegative / PSD variable blocks.

Problems are lowered to one solver call (Clarabel by default, SCS as a
fallback) in the standard form

    minimize    c'x
    subject to  A x + s = b,   s in  {0}^nz x R+^nl x PSD(d1) x PSD(d2) x ...

Variable cone memberships are encoded as rows: a nonnegative variable
contributes a row to the nonnegative cone, a PSD block contributes its scaled
triangle to a PSD cone.  The two backends order the packed triangle
differently (Clarabel row-major lower triangle, SCS column-major lower
triangle); both scale off-diagonal entries by sqrt(2).
"""

from __future__ import annotations

import math
import os
import time
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np
from scipy import sparse

_SQRT2 = math.sqrt(2.0)

#: environment variable consulted when no solver is passed explicitly
SOLVER_ENV_VAR = "EIVSTAB_SOLVER"


class LinExpr:
    """Affine expression ``const + sum coeffs[j] * x_j`` in solver columns."""

    __slots__ = ("coeffs", "const")

    def __init__(self, coeffs: Mapping[int, float] | None = None, const: float = 0.0):
        self.coeffs = dict(coeffs) if coeffs else {}
        self.const = float(const)

    def copy(self) -> "LinExpr":
        return LinExpr(self.coeffs, self.const)

    def is_zero(self, tol: float = 0.0) -> bool:
        return abs(self.const) <= tol and all(abs(v) <= tol for v in self.coeffs.values())

    def __add__(self, other):
        if isinstance(other, LinExpr):
            out = LinExpr(self.coeffs, self.const + other.const)
            for j, v in other.coeffs.items():
                out.coeffs[j] = out.coeffs.get(j, 0.0) + v
            return out
        if isinstance(other, (int, float, np.integer, np.floating)):
            return LinExpr(self.coeffs, self.const + float(other))
        return NotImplemented

    def __radd__(self, other):
        return self.__add__(other)

    def __neg__(self):
        return LinExpr({j: -v for j, v in self.coeffs.items()}, -self.const)

    def __sub__(self, other):
        out = self.__add__(-other if isinstance(other, LinExpr) else -float(other))
        if out is NotImplemented:
            return NotImplemented
        return out

    def __rsub__(self, other):
        return (-self).__add__(other)

    def __mul__(self, other):
        if isinstance(other, (int, float, np.integer, np.floating)):
            s = float(other)
            if s == 0.0:
                return LinExpr()
            return LinExpr({j: s * v for j, v in self.coeffs.items()}, s * self.const)
        if isinstance(other, LinExpr):
            raise TypeError("product of two decision-affine expressions is nonlinear")
        return NotImplemented

    def __rmul__(self, other):
        return self.__mul__(other)

    def value(self, x: np.ndarray) -> float:
        return self.const + sum(v * x[j] for j, v in self.coeffs.items())

    @staticmethod
    def sum(exprs: Iterable["LinExpr | float"]) -> "LinExpr":
        out = LinExpr()
        for e in exprs:
            if isinstance(e, LinExpr):
                out.const += e.const
                for j, v in e.coeffs.items():
                    out.coeffs[j] = out.coeffs.get(j, 0.0) + v
            else:
                out.const += float(e)
        return out

    def __repr__(self):
        bits = [f"{v:+.4g}*x{j}" for j, v in sorted(self.coeffs.items())]
        return f"LinExpr({self.const:+.4g} {' '.join(bits)})"


class GramHandle:
    """Handle to a symmetric PSD matrix variable, packed lower triangle."""

    __slots__ = ("start", "dim")

    def __init__(self, start: int, dim: int):
        self.start = start
        self.dim = dim

    def ncols(self) -> int:
        return self.dim * (self.dim + 1) // 2

    def col(self, i: int, j: int) -> int:
        # packed lower triangle, row-major: (0,0),(1,0),(1,1),(2,0),...
        if j > i:
            i, j = j, i
        return self.start + i * (i + 1) // 2 + j

    def entry(self, i: int, j: int) -> LinExpr:
        return LinExpr({self.col(i, j): 1.0})

    def value(self, x: np.ndarray) -> np.ndarray:
        G = np.zeros((self.dim, self.dim))
        for i in range(self.dim):
            for j in range(i + 1):
                G[i, j] = G[j, i] = x[self.col(i, j)]
        return G


@dataclass
class ConicSolution:
    status: str  # optimal | optimal_inaccurate | infeasible | unbounded | error
    x: np.ndarray | None
    objective: float | None
    solver: str
    info: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status in ("optimal", "optimal_inaccurate")


def available_solvers() -> list[str]:
    out = []
    for name in ("clarabel", "scs"):
        try:
            __import__(name)
            out.append(name)
        except ImportError:
            pass
    return out


def default_solver() -> str:
    env = os.environ.get(SOLVER_ENV_VAR, "").strip().lower()
    if env:
        return env
    avail = available_solvers()
    if not avail:
        raise RuntimeError("no conic solver available (install clarabel or scs)")
    return avail[0]


class ConicProgram:
    """Accumulates variables, rows, and a linear objective; solves once."""

    def __init__(self):
        self.ncols = 0
        self.nonneg_cols: list[int] = []
        self.psd_blocks: list[GramHandle] = []
        # rows stored as (coeff dict, const) with meaning: coeffs.x + const (=0 | >=0)
        self.eq_rows: list[tuple[dict[int, float], float]] = []
        self.ineq_rows: list[tuple[dict[int, float], float]] = []
        self.objective = LinExpr()

    # -- variables ---------------------------------------------------------

    def free(self, n: int = 1) -> list[LinExpr]:
        cols = range(self.ncols, self.ncols + n)
        self.ncols += n
        return [LinExpr({j: 1.0}) for j in cols]

    def free_scalar(self) -> LinExpr:
        return self.free(1)[0]

    def nonneg(self, n: int = 1) -> list[LinExpr]:
        cols = list(range(self.ncols, self.ncols + n))
        self.ncols += n
        self.nonneg_cols.extend(cols)
        return [LinExpr({j: 1.0}) for j in cols]

    def psd(self, dim: int) -> GramHandle:
        if dim < 1:
            raise ValueError("PSD block needs dim >= 1")
        h = GramHandle(self.ncols, dim)
        self.ncols += h.ncols()
        self.psd_blocks.append(h)
        return h

    # -- constraints -------------------------------------------------------

    def eq(self, expr: LinExpr):
        """Constrain expr = 0."""
        self.eq_rows.append((expr.coeffs, expr.const))

    def eq_pair(self, lhs: LinExpr, rhs):
        self.eq((lhs - rhs) if isinstance(rhs, LinExpr) else lhs - float(rhs))

    def ineq(self, expr: LinExpr):
        """Constrain expr >= 0."""
        self.ineq_rows.append((expr.coeffs, expr.const))

    def minimize(self, expr: LinExpr):
        self.objective = expr.copy()

    # -- lowering ----------------------------------------------------------

    def _triangle_rows(self, order: str):
        """(block, i, j) triples in the backend's packed-triangle order."""
        for h in self.psd_blocks:
            if order == "rowmajor":
                for i in range(h.dim):
                    for j in range(i + 1):
                        yield h, i, j
            else:  # column-major lower triangle
                for j in range(h.dim):
                    for i in range(j, h.dim):
                        yield h, i, j

    def _assemble(self, order: str):
        rows_i: list[int] = []
        cols_i: list[int] = []
        vals: list[float] = []
        b: list[float] = []
        r = 0
        for coeffs, const in self.eq_rows:
            for j, v in coeffs.items():
                if v != 0.0:
                    rows_i.append(r)
                    cols_i.append(j)
                    vals.append(v)
            b.append(-const)
            r += 1
        nz = r
        for coeffs, const in self.ineq_rows:
            for j, v in coeffs.items():
                if v != 0.0:
                    rows_i.append(r)
                    cols_i.append(j)
                    vals.append(-v)
            b.append(const)
            r += 1
        for j in self.nonneg_cols:
            rows_i.append(r)
            cols_i.append(j)
            vals.append(-1.0)
            b.append(0.0)
            r += 1
        nl = r - nz
        for h, i, j in self._triangle_rows(order):
            rows_i.append(r)
            cols_i.append(h.col(i, j))
            vals.append(-1.0 if i == j else -_SQRT2)
            b.append(0.0)
            r += 1
        A = sparse.csc_matrix(
            (np.array(vals), (np.array(rows_i, dtype=np.int64), np.array(cols_i, dtype=np.int64))),
            shape=(r, self.ncols),
        )
        c = np.zeros(self.ncols)
        for j, v in self.objective.coeffs.items():
            c[j] = v
        return A, np.array(b), c, nz, nl

    # -- solving -----------------------------------------------------------

    def solve(self, solver: str | None = None, verbose: bool = False, max_iter: int | None = None,
              tol: float | None = None) -> ConicSolution:
        name = (solver or default_solver()).lower()
        t0 = time.perf_counter()
        if name == "clarabel":
            sol = self._solve_clarabel(verbose, max_iter, tol)
        elif name == "scs":
            sol = self._solve_scs(verbose, max_iter, tol)
        else:
            raise ValueError(f"unknown solver {name!r} (expected clarabel or scs)")
        sol.info["wall_time"] = time.perf_counter() - t0
        sol.info["n_cols"] = self.ncols
        sol.info["n_eq_rows"] = len(self.eq_rows)
        sol.info["psd_dims"] = [h.dim for h in self.psd_blocks]
        return sol

    def _solve_clarabel(self, verbose: bool, max_iter: int | None, tol: float | None) -> ConicSolution:
        import clarabel

        A, b, c, nz, nl = self._assemble("rowmajor")
        cones = []
        if nz:
            cones.append(clarabel.ZeroConeT(nz))
        if nl:
            cones.append(clarabel.NonnegativeConeT(nl))
        for h in self.psd_blocks:
            cones.append(clarabel.PSDTriangleConeT(h.dim))
        settings = clarabel.DefaultSettings()
        settings.verbose = verbose
        if max_iter is not None:
            settings.max_iter = max_iter
        if tol is not None:
            settings.tol_gap_abs = tol
            settings.tol_gap_rel = tol
            settings.tol_feas = tol
        P = sparse.csc_matrix((self.ncols, self.ncols))
        solver = clarabel.DefaultSolver(P, c, A, b, cones, settings)
        res = solver.solve()
        status = str(res.status)
        mapping = {
            "Solved": "optimal",
            "AlmostSolved": "optimal_inaccurate",
            "PrimalInfeasible": "infeasible",
            "AlmostPrimalInfeasible": "infeasible",
            "DualInfeasible": "unbounded",
            "AlmostDualInfeasible": "unbounded",
        }
        out = mapping.get(status, "error")
        x = np.array(res.x) if out in ("optimal", "optimal_inaccurate") else None
        obj = (float(res.obj_val) + self.objective.const) if x is not None else None
        return ConicSolution(out, x, obj, "clarabel",
                             {"iterations": res.iterations, "raw_status": status})

    def _solve_scs(self, verbose: bool, max_iter: int | None, tol: float | None) -> ConicSolution:
        import scs

        A, b, c, nz, nl = self._assemble("colmajor")
        cone: dict = {}
        if nz:
            cone["z"] = nz
        if nl:
            cone["l"] = nl
        if self.psd_blocks:
            cone["s"] = [h.dim for h in self.psd_blocks]
        kwargs = {"verbose": verbose}
        kwargs["eps_abs"] = tol if tol is not None else 1e-9
        kwargs["eps_rel"] = tol if tol is not None else 1e-9
        if max_iter is not None:
            kwargs["max_iters"] = max_iter
        res = scs.solve({"A": A, "b": b, "c": c}, cone, **kwargs)
        raw = res["info"]["status"].lower()
        if raw.startswith("solved"):
            out = "optimal" if "inaccurate" not in raw else "optimal_inaccurate"
        elif "infeasible" in raw:
            out = "infeasible"
        elif "unbounded" in raw:
            out = "unbounded"
        else:
            out = "error"
        x = np.asarray(res["x"]) if out in ("optimal", "optimal_inaccurate") else None
        obj = (float(res["info"]["pobj"]) + self.objective.const) if x is not None else None
        return ConicSolution(out, x, obj, "scs", {"iterations": res["info"]["iter"], "raw_status": raw})
