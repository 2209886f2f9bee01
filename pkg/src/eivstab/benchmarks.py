"""Canonical plants, seeded instances, and the trend-sweep drivers.

Two reference plants serve different purposes:

* ``demo_plant`` is the open-loop unstable third-order plant used by the
  anchor checks (its model-based optimum at compensator orders (3, 2) is
  gamma = 0.4417, and deadbeat orders (4, 3) reach gamma = 0).  Its
  instability makes long open-loop records blow up (|y| ~ 1.1^T), which ruins
  SDP conditioning, so it is not used for the T/epsilon trend sweeps.

* ``sweep_plant`` is stable but NOT superstable (||a||_1 = 1.85 > 1, spectral
  radius 0.5), so records stay O(1) at any horizon while synthesis remains a
  nontrivial problem.  All trend sweeps run on this plant.

Sweep designs guarantee their monotone trends structurally:
T-sweeps truncate one master record per seed (prefix data can only grow the
consistency set), epsilon-sweeps re-declare larger bounds on fixed data (set
inclusion), order-sweeps embed lower-order compensators by zero padding, and
eps_w-sweeps relax fixed equalities.  Strictness is then an empirical
property of the seeded records.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .arx import ArxModel, Compensator
from .data import Dataset, generate
from .synth import SynthesisResult, synth_alternatives

SWEEP_SEEDS = (101, 102, 103, 104, 105)

T_GRID = (20, 40, 60, 80)
EPS_GRID = (0.02, 0.04, 0.06, 0.08)
ORDER_GRID = (4, 6, 8, 10)
EPS_W_GRID = (0.0, 0.005, 0.01, 0.02)


def demo_plant() -> ArxModel:
    """Unstable benchmark plant (roots 1.1, -1.1, -0.5)."""
    return ArxModel(a=[0.5, -1.21, -0.605], b=[0.0, 1.0])


def demo_compensator() -> Compensator:
    """The l1-optimal (3, 2) compensator for demo_plant; gamma = 0.4417."""
    return Compensator(a=[-0.5, 1.46, -0.73], b=[0.0, 1.829])


def sweep_plant() -> ArxModel:
    """Stable, non-superstable benchmark plant (roots 0.5, 0.447, 0.447)."""
    return ArxModel(a=[-1.2, 0.55, -0.1], b=[0.0, 1.0])


def derive_seeds(base_seed: int, n: int) -> list[int]:
    """Independent per-cell seeds from one base seed (stable across runs)."""
    return [int(np.random.SeedSequence([base_seed, k]).generate_state(1)[0])
            for k in range(n)]


def demo_dataset(T: int = 10, eps_u: float = 0.0, eps_y: float = 0.0,
                 seed: int = 1) -> Dataset:
    return generate(demo_plant(), T=T, eps_u=eps_u, eps_y=eps_y, seed=seed)


def trend_dataset(seed: int, T: int = 80, eps: float = 0.02) -> Dataset:
    return generate(sweep_plant(), T=T, eps_u=eps, eps_y=eps, seed=seed)


@dataclass
class SweepCell:
    sweep: str
    seed: int
    param: float
    gamma: float | None
    status: str
    controller: Compensator | None
    result: SynthesisResult | None = dataclasses.field(default=None, repr=False)
    dataset: Dataset | None = dataclasses.field(default=None, repr=False)

    def to_row(self) -> dict:
        return {"sweep": self.sweep, "seed": self.seed, "param": self.param,
                "gamma": self.gamma, "status": self.status}


def _run_cell(sweep: str, seed: int, param: float, dataset: Dataset,
              ctrl_na: int, ctrl_nb: int, d: int, **kwargs) -> SweepCell:
    try:
        res = synth_alternatives(dataset, ctrl_na, ctrl_nb, d=d, **kwargs)
        return SweepCell(sweep, seed, param, res.gamma, res.status, res.controller,
                         res, dataset)
    except Exception as e:  # cell failures recorded, sweep continues
        return SweepCell(sweep, seed, param, None, f"error: {e}", None, None, dataset)


def sweep_gamma_vs_T(seeds=SWEEP_SEEDS, T_grid=T_GRID, eps: float = 0.02,
                     ctrl=(3, 2), d: int = 1, **kwargs) -> list[SweepCell]:
    """gamma* against record length: one master record per seed, truncated."""
    cells = []
    for seed in seeds:
        master = trend_dataset(seed, T=max(T_grid), eps=eps)
        for T in T_grid:
            cells.append(_run_cell("T", seed, T, master.prefix(T),
                                   ctrl[0], ctrl[1], d, **kwargs))
    return cells


def sweep_gamma_vs_eps(seeds=SWEEP_SEEDS, eps_grid=EPS_GRID, T: int = 80,
                       noise_eps: float = 0.02, ctrl=(3, 2), d: int = 1,
                       **kwargs) -> list[SweepCell]:
    """gamma* against declared noise bound: fixed record, re-declared bounds.

    The record is generated once per seed at ``noise_eps``; each cell keeps the
    data and inflates only the declared (eps_u, eps_y)."""
    cells = []
    for seed in seeds:
        master = trend_dataset(seed, T=T, eps=noise_eps)
        for eps in eps_grid:
            ds = dataclasses.replace(master, eps_u=eps, eps_y=eps)
            cells.append(_run_cell("eps", seed, eps, ds, ctrl[0], ctrl[1], d, **kwargs))
    return cells


def sweep_gamma_vs_order(seeds=SWEEP_SEEDS, order_grid=ORDER_GRID, ctrl_nb: int = 2,
                         T: int = 20, eps: float = 0.02, d: int = 1,
                         **kwargs) -> list[SweepCell]:
    """gamma* against compensator order (zero padding embeds lower orders)."""
    cells = []
    for seed in seeds:
        ds = trend_dataset(seed, T=T, eps=eps)
        for na in order_grid:
            cells.append(_run_cell("order", seed, na, ds, na, ctrl_nb, d, **kwargs))
    return cells


def sweep_gamma_vs_eps_w(seed: int = 101, eps_w_grid=EPS_W_GRID, T: int = 10,
                         eps: float = 0.02, ctrl=(3, 2), d: int = 1,
                         **kwargs) -> list[SweepCell]:
    """gamma* against the process-noise allowance on one fixed record."""
    master = trend_dataset(seed, T=T, eps=eps)
    cells = []
    for ew in eps_w_grid:
        ds = dataclasses.replace(master, eps_w=ew)
        cells.append(_run_cell("eps_w", seed, ew, ds, ctrl[0], ctrl[1], d, **kwargs))
    return cells


def monotone(values, direction: str, tol: float = 0.0) -> bool:
    """True when consecutive values follow ``direction`` within tolerance."""
    pairs = list(zip(values, values[1:]))
    if direction == "strict_decrease":
        return all(b < a for a, b in pairs)
    if direction == "strict_increase":
        return all(b > a for a, b in pairs)
    if direction == "nonincreasing":
        return all(b <= a + tol for a, b in pairs)
    if direction == "nondecreasing":
        return all(b >= a - tol for a, b in pairs)
    raise ValueError(f"unknown direction {direction!r}")
