"""Posterior, solver-independent validation of synthesized compensators.

Three layers: sampling-based worst-case margin over the data-consistency set,
closed-loop simulation against the superstability decay envelope, and a
grid/membership brute-force oracle for very small instances.  None of these
consume certificates; they exercise the claimed gamma directly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .arx import (ArxModel, Compensator, closed_loop_coefficients, decay_envelope,
                  superstable_margin)
from .data import Dataset, SamplerExhausted, membership, sample_consistent_plants


# ---------------------------------------------------------------------------
# closed-loop envelope checks
# ---------------------------------------------------------------------------

@dataclass
class EnvelopeReport:
    gamma: float
    n_cl: int
    trials: int
    horizon: int
    violations: int
    worst_ratio: float

    def to_json(self) -> dict:
        return {"gamma": self.gamma, "n_cl": self.n_cl, "trials": self.trials,
                "horizon": self.horizon, "violations": self.violations,
                "worst_ratio": self.worst_ratio}


def _autonomous_runs(a_cl: np.ndarray, horizon: int, trials: int, seed: int):
    """Yield (history, trajectory) pairs of the closed-loop recursion
    y_t = -sum_i a_cl_i y_{t-i} from uniform histories in [-1, 1]."""
    rng = np.random.default_rng(seed)
    n = len(a_cl)
    for _ in range(trials):
        hist = rng.uniform(-1.0, 1.0, size=n)
        buf = list(hist)
        traj = []
        for _ in range(horizon):
            y = -float(np.dot(a_cl, buf[-n:][::-1]))
            traj.append(y)
            buf.append(y)
        yield hist, np.array(traj)


def closed_loop_check(plant: ArxModel, ctrl: Compensator, horizon: int = 100,
                      trials: int = 50, seed: int = 0) -> EnvelopeReport:
    """Simulate the interconnection autonomously (zero exogenous input; the
    loop reduces to the a_cl recursion) and check the decay envelope
    |y_t| <= gamma^(floor((t-1)/n_cl) + 1) * max |history| for t >= 1.
    """
    a_cl = np.asarray(closed_loop_coefficients(plant, ctrl).a_cl, dtype=float)
    gamma = float(np.abs(a_cl).sum())
    if gamma >= 1.0:
        raise ValueError(f"closed loop is not superstable: ||a_cl||_1 = {gamma:.6f} >= 1")
    n_cl = len(a_cl)
    violations = 0
    worst = 0.0
    for hist, traj in _autonomous_runs(a_cl, horizon, trials, seed):
        M = float(np.abs(hist).max())
        for t, y in enumerate(traj, start=1):
            env = decay_envelope(gamma, n_cl, M, t)
            mag = abs(y)
            if env > 0.0:
                worst = max(worst, mag / env)
                if mag > env * (1.0 + 1e-9):
                    violations += 1
            elif mag > 1e-12:
                worst = float("inf")
                violations += 1
    return EnvelopeReport(gamma, n_cl, trials, horizon, violations, worst)


# ---------------------------------------------------------------------------
# sampling-based margin verification
# ---------------------------------------------------------------------------

@dataclass
class VerificationReport:
    sample_count: int
    max_margin: float | None
    envelope_violations: int
    worst_envelope_ratio: float
    acceptance_rate: float
    gamma_claimed: float
    tolerance: float
    verdict: bool
    sampler_exhausted: bool
    sampling_radius: float | None
    diagnostics: dict

    def to_json(self) -> dict:
        return {
            "sample_count": self.sample_count,
            "max_margin": self.max_margin,
            "envelope_violations": self.envelope_violations,
            "worst_envelope_ratio": self.worst_envelope_ratio,
            "acceptance_rate": self.acceptance_rate,
            "gamma_claimed": self.gamma_claimed,
            "tolerance": self.tolerance,
            "verdict": "pass" if self.verdict else "fail",
            "sampler_exhausted": self.sampler_exhausted,
            "sampling_radius": self.sampling_radius,
            "diagnostics": self.diagnostics,
        }


def least_squares_plant(dataset: Dataset) -> tuple[np.ndarray, np.ndarray]:
    """Plant minimizing the summed squared residuals h_t; the sampler anchor."""
    T, n_a, n_b = dataset.T, dataset.n_a, dataset.n_b
    M = np.zeros((T, n_a + n_b))
    r = np.zeros(T)
    for t in range(1, T + 1):
        r[t - 1] = float(dataset.y_hat[t])
        for i in range(1, n_a + 1):
            M[t - 1, i - 1] = float(dataset.y_hat[t - i])
        for i in range(1, n_b + 1):
            M[t - 1, n_a + i - 1] = -float(dataset.u_hat[t - i])
    theta, *_ = np.linalg.lstsq(M, -r, rcond=None)
    return theta[:n_a], theta[n_a:]


def verify_controller(ctrl: Compensator, data: Dataset, gamma_claimed: float,
                      samples: int = 200, seed: int = 0, tolerance: float = 1e-4,
                      envelope_trials: int = 5, horizon: int = 50) -> VerificationReport:
    """Sample consistency-set plants and compare each closed-loop l1 margin to
    the claimed gamma; superstable samples additionally face envelope trials.

    Sampling anchors at the least-squares plant and shrinks the box radius
    until draws are accepted (the set is typically a thin neighborhood of the
    truth, so a fixed radius-2 box would reject nearly everything).  Sampler
    exhaustion is reported in the result, not raised.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    a0, b0 = least_squares_plant(data)
    anchor = np.concatenate([a0, b0])
    plants: list = []
    diag: dict = {}
    radius_used = None
    exhausted = True
    if membership(data, (a0, b0)).feasible:
        plants.append((a0, b0))
    noise_free = (data.eps_u == 0.0 and data.eps_y == 0.0 and not data.eps_w)
    if not noise_free:
        # probe with a small budget to find the largest workable radius, then
        # spend the full budget there
        radius = 2.0
        while radius >= 2.0 ** -9:
            box = [(c - radius, c + radius) for c in anchor]
            try:
                sample_consistent_plants(data, 1, seed, box=box, max_draws=150)
                break
            except SamplerExhausted as e:
                diag = e.diagnostics
                radius /= 2.0
        else:
            radius = None
        if radius is not None:
            box = [(c - radius, c + radius) for c in anchor]
            try:
                drawn, diag = sample_consistent_plants(
                    data, samples, seed, box=box, max_draws=max(20 * samples, 2000))
                plants.extend(drawn)
                radius_used = radius
                exhausted = False
            except SamplerExhausted as e:
                diag = e.diagnostics
    diag = dict(diag)
    diag["anchor"] = [float(v) for v in anchor]

    if not plants:
        return VerificationReport(0, None, 0, 0.0, 0.0, gamma_claimed, tolerance,
                                  False, True, None, diag)

    max_margin = 0.0
    env_violations = 0
    worst_ratio = 0.0
    for k, (a, b) in enumerate(plants):
        plant = ArxModel(a=list(map(float, a)), b=list(map(float, b)))
        margin = superstable_margin(closed_loop_coefficients(plant, ctrl))
        max_margin = max(max_margin, margin)
        if margin < 1.0 and envelope_trials > 0:
            rep = closed_loop_check(plant, ctrl, horizon=horizon,
                                    trials=envelope_trials, seed=seed + k)
            env_violations += rep.violations
            worst_ratio = max(worst_ratio, rep.worst_ratio)
    verdict = (max_margin <= gamma_claimed + tolerance) and env_violations == 0
    return VerificationReport(len(plants), max_margin, env_violations, worst_ratio,
                              diag.get("acceptance_rate", 0.0), gamma_claimed, tolerance,
                              verdict, exhausted, radius_used, diag)


# ---------------------------------------------------------------------------
# brute-force oracle for tiny instances
# ---------------------------------------------------------------------------

def brute_force_gamma(data: Dataset, ctrl: Compensator, grid_step: float = 0.25,
                      radius: float = 2.0) -> float:
    """Max closed-loop l1 margin of ``ctrl`` over a full plant grid filtered by
    the membership LP: a lower bound on the consistency-set supremum.

    Only for tiny instances (n_a + n_b <= 3); the grid has
    (2 radius / grid_step + 1)^(n_a + n_b) membership solves.
    """
    N = data.n_a + data.n_b
    if N > 3:
        raise ValueError("brute force is limited to n_a + n_b <= 3")
    axis = np.arange(-radius, radius + grid_step / 2, grid_step)
    grids = np.meshgrid(*([axis] * N), indexing="ij")
    points = np.stack([g.ravel() for g in grids], axis=1)
    best = None
    accepted = 0
    for p in points:
        a, b = p[: data.n_a], p[data.n_a:]
        if membership(data, (a, b)).feasible:
            accepted += 1
            plant = ArxModel(a=list(a), b=list(b))
            margin = superstable_margin(closed_loop_coefficients(plant, ctrl))
            best = margin if best is None else max(best, margin)
    if best is None:
        raise RuntimeError(
            f"no grid point is data-consistent (grid_step={grid_step}, radius={radius}); "
            "refine the grid or enlarge the radius")
    return float(best)
