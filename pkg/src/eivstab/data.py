"""Input/output records, bounded-noise corruption, and the data-consistency set.

A length-T experiment on a plant with orders (n_a, n_b) records

    u_hat over (1 - n_b)..(T - 1)     (T + n_b - 1 samples)
    y_hat over (1 - n_a)..T           (T + n_a  samples)

where u_hat = u + du and y_hat = y + dy with ||du||_inf <= eps_u and
||dy||_inf <= eps_y (errors in variables).  Plants (a, b) are consistent with
the record when some admissible noise explains it:

    0 = h_t(a, b) - sum_i a_i dy_{t-i} + sum_i b_i du_{t-i} - dy_t,  t = 1..T,

with the measured residual h_t(a,b) = y_hat_t + sum_i a_i y_hat_{t-i}
- sum_i b_i u_hat_{t-i}.  The set of all (a, b, du, dy) satisfying these
equalities and the noise boxes is the (basic semialgebraic) consistency set;
its projection onto (a, b) is the plant-consistency set.  An optional process
disturbance of magnitude eps_w relaxes each equality to a pair of
inequalities.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import optimize

from .arx import ArxModel, simulate
from .poly import CoeffSequence, Polynomial


@dataclass
class Dataset:
    """A corrupted I/O record plus the noise-bound metadata."""

    u_hat: CoeffSequence
    y_hat: CoeffSequence
    n_a: int
    n_b: int
    T: int
    eps_u: float
    eps_y: float
    eps_w: float | None = None
    seed: int | None = None
    # generation truth, kept for test oracles only; not serialized or compared
    true_du: CoeffSequence | None = field(default=None, compare=False, repr=False)
    true_dy: CoeffSequence | None = field(default=None, compare=False, repr=False)
    true_plant: ArxModel | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if not (self.n_a > self.n_b >= 1):
            raise ValueError("orders must satisfy n_a > n_b >= 1")
        if self.u_hat.start != 1 - self.n_b or len(self.u_hat) != self.T + self.n_b - 1:
            raise ValueError("u_hat must cover (1-n_b)..(T-1)")
        if self.y_hat.start != 1 - self.n_a or len(self.y_hat) != self.T + self.n_a:
            raise ValueError("y_hat must cover (1-n_a)..T")

    # index ranges of the noise variables
    def du_indices(self) -> range:
        return range(1 - self.n_b, self.T)

    def dy_indices(self) -> range:
        return range(1 - self.n_a, self.T + 1)

    def prefix(self, T: int) -> "Dataset":
        """The same experiment truncated to its first ``T`` samples."""
        if not (1 <= T <= self.T):
            raise ValueError("prefix length out of range")
        cut_u = CoeffSequence(self.u_hat.start, self.u_hat.values[: T + self.n_b - 1])
        cut_y = CoeffSequence(self.y_hat.start, self.y_hat.values[: T + self.n_a])
        return Dataset(cut_u, cut_y, self.n_a, self.n_b, T, self.eps_u, self.eps_y,
                       self.eps_w, self.seed)

    def scaled(self, c: float) -> "Dataset":
        """Jointly rescale the record and the noise bounds by ``c``.

        The plant-consistency set is invariant under this map because the ARX
        relation and the noise boxes are both linear in (u, y, du, dy).
        """
        return Dataset(
            CoeffSequence(self.u_hat.start, [c * v for v in self.u_hat.values]),
            CoeffSequence(self.y_hat.start, [c * v for v in self.y_hat.values]),
            self.n_a, self.n_b, self.T, c * self.eps_u, c * self.eps_y,
            None if self.eps_w is None else c * self.eps_w, self.seed)


def corrupt(u: CoeffSequence, y: CoeffSequence, eps_u: float, eps_y: float,
            seed: int) -> tuple[CoeffSequence, CoeffSequence, CoeffSequence, CoeffSequence]:
    """Add seeded uniform noise in [-eps, eps]; returns (u_hat, y_hat, du, dy)."""
    rng = np.random.default_rng(seed)
    du = rng.uniform(-eps_u, eps_u, size=len(u)) if eps_u > 0 else np.zeros(len(u))
    dy = rng.uniform(-eps_y, eps_y, size=len(y)) if eps_y > 0 else np.zeros(len(y))
    u_hat = CoeffSequence(u.start, [float(a + b) for a, b in zip(u.values, du)])
    y_hat = CoeffSequence(y.start, [float(a + b) for a, b in zip(y.values, dy)])
    return (u_hat, y_hat, CoeffSequence(u.start, [float(v) for v in du]),
            CoeffSequence(y.start, [float(v) for v in dy]))


def generate(plant: ArxModel, T: int, eps_u: float, eps_y: float, seed: int,
             eps_w: float | None = None, u_amplitude: float = 1.0,
             y_init: list | None = None) -> Dataset:
    """Excite ``plant`` with seeded uniform input and corrupt the record.

    The input is uniform on [-u_amplitude, u_amplitude]; the initial output
    history is uniform on [-1, 1] unless supplied.  When ``eps_w`` is given, a
    uniform process disturbance of that magnitude enters the recursion.
    """
    rng = np.random.default_rng(seed)
    n_a, n_b = plant.n_a, plant.n_b
    u = CoeffSequence(1 - n_b, [float(v) for v in rng.uniform(-u_amplitude, u_amplitude,
                                                              size=T + n_b - 1)])
    if y_init is None:
        y_init = [float(v) for v in rng.uniform(-1.0, 1.0, size=n_a)]
    w = None
    if eps_w is not None and eps_w > 0:
        w = CoeffSequence(1, [float(v) for v in rng.uniform(-eps_w, eps_w, size=T)])
    y = simulate(plant, u, y_init, T, w=w)
    noise_seed = int(rng.integers(0, 2**31 - 1))
    u_hat, y_hat, du, dy = corrupt(u, y, eps_u, eps_y, noise_seed)
    return Dataset(u_hat, y_hat, n_a, n_b, T, eps_u, eps_y, eps_w, seed,
                   true_du=du, true_dy=dy, true_plant=plant)


# ---------------------------------------------------------------------------
# residuals and the consistency set
# ---------------------------------------------------------------------------

def plant_var_names(n_a: int, n_b: int) -> tuple[str, ...]:
    return tuple([f"a{i}" for i in range(1, n_a + 1)] + [f"b{i}" for i in range(1, n_b + 1)])


def noise_var_names(dataset: Dataset) -> tuple[str, ...]:
    return tuple([f"du[{t}]" for t in dataset.du_indices()]
                 + [f"dy[{t}]" for t in dataset.dy_indices()])


def residual_h(dataset: Dataset) -> list[Polynomial]:
    """Measured residuals h_t, t = 1..T, as degree-1 polynomials in (a, b)."""
    names = plant_var_names(dataset.n_a, dataset.n_b)
    nv = len(names)
    out = []
    for t in range(1, dataset.T + 1):
        terms = {(0,) * nv: float(dataset.y_hat[t])}
        for i in range(1, dataset.n_a + 1):
            exp = tuple(1 if k == i - 1 else 0 for k in range(nv))
            terms[exp] = float(dataset.y_hat[t - i])
        for i in range(1, dataset.n_b + 1):
            exp = tuple(1 if k == dataset.n_a + i - 1 else 0 for k in range(nv))
            terms[exp] = -float(dataset.u_hat[t - i])
        out.append(Polynomial(names, terms))
    return out


@dataclass
class BsaSet:
    """Basic semialgebraic set {x : g_i(x) >= 0, h_j(x) = 0}.

    ``box`` optionally records per-coordinate bounds implied by the
    inequalities, used by samplers and certificate audits.
    """

    vars: tuple[str, ...]
    inequalities: list[Polynomial] = field(default_factory=list)
    equalities: list[Polynomial] = field(default_factory=list)
    box: list[tuple[float, float]] | None = None

    def contains(self, point: dict, tol: float = 1e-9) -> bool:
        return (all(g.eval(point) >= -tol for g in self.inequalities)
                and all(abs(h.eval(point)) <= tol for h in self.equalities))


def consistency_set(dataset: Dataset) -> BsaSet:
    """The consistency set over (a, b, du, dy) as a BsaSet.

    Inequalities: the noise boxes, one (eps - v, eps + v) pair per noise
    coordinate — 2(T + n_b - 1) + 2(T + n_a) in total.  Equalities: the T
    data-matching relations (bilinear in plant x noise).  With eps_w set, each
    equality is relaxed into a pair of inequalities instead.
    """
    names = plant_var_names(dataset.n_a, dataset.n_b) + noise_var_names(dataset)
    nv = len(names)
    pos = {name: i for i, name in enumerate(names)}

    def unit(name):
        return Polynomial.variable(name, names)

    ineqs: list[Polynomial] = []
    for t in dataset.du_indices():
        v = unit(f"du[{t}]")
        ineqs.append(Polynomial.constant(dataset.eps_u, names) - v)
        ineqs.append(Polynomial.constant(dataset.eps_u, names) + v)
    for t in dataset.dy_indices():
        v = unit(f"dy[{t}]")
        ineqs.append(Polynomial.constant(dataset.eps_y, names) - v)
        ineqs.append(Polynomial.constant(dataset.eps_y, names) + v)

    h = residual_h(dataset)
    relations: list[Polynomial] = []
    for t in range(1, dataset.T + 1):
        expr = h[t - 1].map_vars(names)
        terms = dict(expr.terms)

        def bump(exp, c):
            terms[exp] = terms.get(exp, 0.0) + c

        for i in range(1, dataset.n_a + 1):
            s = t - i
            if 1 - dataset.n_a <= s <= dataset.T:
                exp = [0] * nv
                exp[pos[f"a{i}"]] = 1
                exp[pos[f"dy[{s}]"]] = 1
                bump(tuple(exp), -1.0)
        for i in range(1, dataset.n_b + 1):
            s = t - i
            if 1 - dataset.n_b <= s <= dataset.T - 1:
                exp = [0] * nv
                exp[pos[f"b{i}"]] = 1
                exp[pos[f"du[{s}]"]] = 1
                bump(tuple(exp), 1.0)
        exp = [0] * nv
        exp[pos[f"dy[{t}]"]] = 1
        bump(tuple(exp), -1.0)
        relations.append(Polynomial(names, terms))

    if dataset.eps_w is not None:
        for rel in relations:
            ew = Polynomial.constant(dataset.eps_w, names)
            ineqs.append(ew - rel)
            ineqs.append(ew + rel)
        return BsaSet(names, ineqs, [])
    return BsaSet(names, ineqs, relations)


# ---------------------------------------------------------------------------
# linear programming
# ---------------------------------------------------------------------------

@dataclass
class LpResult:
    status: str  # optimal | infeasible | error
    x: np.ndarray | None
    objective: float | None


def solve_lp(c, A_eq=None, b_eq=None, bounds=None, A_ub=None, b_ub=None) -> LpResult:
    """minimize c'x subject to A_eq x = b_eq, A_ub x <= b_ub, l <= x <= u."""
    res = optimize.linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                           bounds=bounds, method="highs")
    if res.status == 0:
        return LpResult("optimal", res.x, float(res.fun))
    if res.status == 2:
        return LpResult("infeasible", None, None)
    return LpResult("error", None, None)


@dataclass
class MembershipResult:
    feasible: bool
    violation: float
    du: CoeffSequence | None
    dy: CoeffSequence | None


def _noise_matrix(dataset: Dataset, a, b) -> tuple[np.ndarray, np.ndarray]:
    """E, r with E @ (du, dy) = r expressing the T data relations at fixed (a, b)."""
    nu = len(dataset.u_hat)
    ny = len(dataset.y_hat)
    du0 = dataset.u_hat.start
    dy0 = dataset.y_hat.start
    E = np.zeros((dataset.T, nu + ny))
    r = np.zeros(dataset.T)
    y_hat, u_hat = dataset.y_hat, dataset.u_hat
    for t in range(1, dataset.T + 1):
        h_t = y_hat[t] + sum(a[i - 1] * y_hat[t - i] for i in range(1, dataset.n_a + 1)) \
            - sum(b[i - 1] * u_hat[t - i] for i in range(1, dataset.n_b + 1))
        r[t - 1] = -h_t
        for i in range(1, dataset.n_b + 1):
            s = t - i
            if du0 <= s <= dataset.T - 1:
                E[t - 1, s - du0] += b[i - 1]
        for i in range(1, dataset.n_a + 1):
            s = t - i
            if dy0 <= s <= dataset.T:
                E[t - 1, nu + s - dy0] -= a[i - 1]
        E[t - 1, nu + t - dy0] -= 1.0
    return E, r


def membership(dataset: Dataset, plant, tol: float = 1e-8) -> MembershipResult:
    """Is ``plant`` consistent with the record?  Phase-1 LP in the noise.

    Minimizes the total violation of the T data relations over admissible
    noise; the plant is consistent iff the optimum is <= tol.  Returns the
    witness noise from the same solve.
    """
    a, b = (plant.a, plant.b) if isinstance(plant, ArxModel) else plant
    E, r = _noise_matrix(dataset, list(map(float, a)), list(map(float, b)))
    T = dataset.T
    nu = len(dataset.u_hat)
    ny = len(dataset.y_hat)
    ew = dataset.eps_w or 0.0
    # variables [delta (nu+ny); s (T)]; minimize sum s
    c = np.concatenate([np.zeros(nu + ny), np.ones(T)])
    A_ub = np.block([[E, -np.eye(T)], [-E, -np.eye(T)]])
    b_ub = np.concatenate([r + ew, -r + ew])
    bounds = ([(-dataset.eps_u, dataset.eps_u)] * nu
              + [(-dataset.eps_y, dataset.eps_y)] * ny
              + [(0, None)] * T)
    res = solve_lp(c, bounds=bounds, A_ub=A_ub, b_ub=b_ub)
    if res.status != "optimal":
        # box-bounded feasible region: the phase-1 LP cannot be infeasible
        return MembershipResult(False, float("inf"), None, None)
    viol = max(0.0, res.objective)
    du = CoeffSequence(dataset.u_hat.start, [float(v) for v in res.x[:nu]])
    dy = CoeffSequence(dataset.y_hat.start, [float(v) for v in res.x[nu:nu + ny]])
    return MembershipResult(viol <= tol, viol, du, dy)


class SamplerExhausted(RuntimeError):
    """Rejection sampling found no consistent plants within the draw budget."""

    def __init__(self, message: str, diagnostics: dict):
        super().__init__(message)
        self.diagnostics = diagnostics


def sample_consistent_plants(dataset: Dataset, count: int, seed: int,
                             box: list[tuple[float, float]] | None = None,
                             max_draws: int = 20000,
                             center=None) -> tuple[list, dict]:
    """Rejection-sample plants from a box, keeping membership-verified draws.

    Draws (a, b) uniformly from ``box`` (default: radius 2 around the origin,
    or around ``center`` when given), runs the membership LP on each, and
    collects up to ``count`` consistent plants.  Returns the accepted plants
    as (a, b) tuples plus diagnostics.  Raises SamplerExhausted when nothing
    is accepted within ``max_draws``.
    """
    rng = np.random.default_rng(seed)
    dim = dataset.n_a + dataset.n_b
    if box is None:
        ctr = np.zeros(dim) if center is None else np.asarray(center, dtype=float)
        box = [(ctr[i] - 2.0, ctr[i] + 2.0) for i in range(dim)]
    lo = np.array([lohi[0] for lohi in box])
    hi = np.array([lohi[1] for lohi in box])
    accepted = []
    draws = 0
    while len(accepted) < count and draws < max_draws:
        x = rng.uniform(lo, hi)
        draws += 1
        a, b = x[: dataset.n_a], x[dataset.n_a:]
        if membership(dataset, (a, b)).feasible:
            accepted.append((a.copy(), b.copy()))
    diag = {"draws": draws, "accepted": len(accepted),
            "acceptance_rate": len(accepted) / draws if draws else 0.0}
    if count > 0 and not accepted:
        raise SamplerExhausted("no consistent plants accepted within budget", diag)
    return accepted, diag


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def save_dataset(dataset: Dataset, csv_path: str | Path, sidecar_path: str | Path | None = None):
    """Write the record as CSV (columns t, u_hat, y_hat) plus a JSON sidecar."""
    csv_path = Path(csv_path)
    if sidecar_path is None:
        sidecar_path = csv_path.with_suffix(".json")
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "u_hat", "y_hat"])
        for t in range(1 - dataset.n_a, dataset.T + 1):
            u = repr(dataset.u_hat[t]) if t in dataset.u_hat.indices() else ""
            y = repr(dataset.y_hat[t])
            w.writerow([t, u, y])
    meta = {"n_a": dataset.n_a, "n_b": dataset.n_b, "T": dataset.T,
            "eps_u": dataset.eps_u, "eps_y": dataset.eps_y,
            "eps_w": dataset.eps_w, "seed": dataset.seed}
    with open(sidecar_path, "w") as fh:
        json.dump(meta, fh, indent=2)


def load_dataset(csv_path: str | Path, sidecar_path: str | Path | None = None) -> Dataset:
    csv_path = Path(csv_path)
    if sidecar_path is None:
        sidecar_path = csv_path.with_suffix(".json")
    with open(sidecar_path) as fh:
        meta = json.load(fh)
    n_a, n_b, T = meta["n_a"], meta["n_b"], meta["T"]
    u_map: dict[int, float] = {}
    y_map: dict[int, float] = {}
    with open(csv_path, newline="") as fh:
        for row in csv.DictReader(fh):
            t = int(row["t"])
            if row["u_hat"] != "":
                u_map[t] = float(row["u_hat"])
            if row["y_hat"] != "":
                y_map[t] = float(row["y_hat"])
    u = CoeffSequence(1 - n_b, [u_map[t] for t in range(1 - n_b, T)])
    y = CoeffSequence(1 - n_a, [y_map[t] for t in range(1 - n_a, T + 1)])
    return Dataset(u, y, n_a, n_b, T, meta["eps_u"], meta["eps_y"],
                   meta.get("eps_w"), meta.get("seed"))
