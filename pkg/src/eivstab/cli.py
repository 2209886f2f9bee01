"""Command-line surface: data generation, synthesis, verification, complexity
reporting, and the trend-sweep experiments.

Commands: simulate, synth, verify, complexity, experiment.  Every run writes
its resolved configuration next to its outputs.  Config precedence: flags >
--config file > defaults.  Exit codes: 0 ok, 1 verdict/trend/status failure,
2 usage or file errors, 3 solver or size-guard errors.  The conic backend is
chosen by --solver or the EIVSTAB_SOLVER environment variable.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from pathlib import Path

from . import benchmarks
from .arx import ArxModel, Compensator
from .conic import SOLVER_ENV_VAR, available_solvers
from .data import generate, load_dataset, save_dataset
from .synth import (SizeGuardError, hierarchy, model_based_superstab, psatz_sizes,
                    synth_alternatives, synth_full)
from .verify import verify_controller

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_SOLVER = 3


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip() != ""]


def _write_json(path: Path, payload: dict):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_config(out_path: Path, config: dict):
    _write_json(out_path.with_suffix(".config.json"), config)


def _load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    with open(path) as fh:
        return json.load(fh)


def _resolve(args: argparse.Namespace, keys: list[str]) -> dict:
    """flags > config file > parser defaults, returned as a plain dict."""
    file_cfg = _load_config_file(getattr(args, "config", None))
    sub = args.subparser
    resolved = {}
    for key in keys:
        flag_val = getattr(args, key)
        default = sub.get_default(key)
        if flag_val != default:
            resolved[key] = flag_val
        elif key in file_cfg:
            resolved[key] = file_cfg[key]
        else:
            resolved[key] = default
    return resolved


def _plant_from(cfg: dict) -> ArxModel:
    if cfg.get("preset"):
        return benchmarks.demo_plant() if cfg["preset"] == "demo" else benchmarks.sweep_plant()
    if cfg.get("plant"):
        with open(cfg["plant"]) as fh:
            return ArxModel.from_json(json.load(fh))
    if cfg.get("a") and cfg.get("b"):
        return ArxModel(a=_floats(cfg["a"]), b=_floats(cfg["b"]))
    raise FileNotFoundError("no plant given: use --preset, --plant, or --a/--b")


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def cmd_simulate(args) -> int:
    cfg = _resolve(args, ["preset", "plant", "a", "b", "T", "eps_u", "eps_y",
                                  "eps_w", "seed", "u_amplitude", "out", "plot"])
    plant = _plant_from(cfg)
    ds = generate(plant, T=cfg["T"], eps_u=cfg["eps_u"], eps_y=cfg["eps_y"],
                  seed=cfg["seed"], eps_w=cfg["eps_w"], u_amplitude=cfg["u_amplitude"])
    out = Path(cfg["out"])
    out.parent.mkdir(parents=True, exist_ok=True)
    save_dataset(ds, out)
    _write_config(out, {"command": "simulate", **cfg, "plant_used": plant.to_json()})
    if cfg["plot"]:
        _plot_trajectory(ds, Path(cfg["plot"]))
    print(f"wrote {out} (T={ds.T}, eps_u={ds.eps_u}, eps_y={ds.eps_y})")
    return EXIT_OK


def _plot_trajectory(ds, path: Path):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    fig, (ax_u, ax_y) = plt.subplots(2, 1, sharex=True, figsize=(7, 5))
    ax_u.step(list(ds.u_hat.indices()), ds.u_hat.to_array(), where="post")
    ax_u.set_ylabel("recorded input")
    ax_y.plot(list(ds.y_hat.indices()), ds.y_hat.to_array(), marker=".")
    ax_y.set_ylabel("recorded output")
    ax_y.set_xlabel("t")
    fig.tight_layout()
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path)
    plt.close(fig)


# ---------------------------------------------------------------------------
# synth
# ---------------------------------------------------------------------------

def cmd_synth(args) -> int:
    keys = ["data", "method", "d", "d_max", "na_ctrl", "nb_ctrl", "gamma_cap", "margin",
            "solver", "max_gram_dim", "no_normalize", "model_based", "preset", "plant",
            "a", "b", "out", "ctrl_out"]
    cfg = _resolve(args, keys)
    out = Path(cfg["out"])

    if cfg["model_based"]:
        plant = _plant_from(cfg)
        res = model_based_superstab(plant, cfg["na_ctrl"], cfg["nb_ctrl"])
        payload = {"config": {"command": "synth", **cfg},
                   "model_based": True, "status": res.status, "gamma": res.gamma,
                   "controller": res.controller.to_json() if res.controller else None}
        _write_json(out, payload)
        _write_config(out, payload["config"])
        if res.controller and cfg["ctrl_out"]:
            _write_json(Path(cfg["ctrl_out"]), res.controller.to_json())
        print(f"model-based gamma* = {res.gamma:.6f}" if res.gamma is not None
              else f"model-based LP: {res.status}")
        return EXIT_OK if res.status == "optimal" else EXIT_SOLVER

    if not cfg["data"]:
        print("synth: --data is required (or --model-based with a plant)", file=sys.stderr)
        return EXIT_USAGE
    ds = load_dataset(cfg["data"])
    common = dict(gamma_cap=cfg["gamma_cap"], margin=cfg["margin"],
                  normalize=not cfg["no_normalize"], solver=cfg["solver"])
    try:
        if cfg["method"] == "full":
            results = [synth_full(ds, cfg["na_ctrl"], cfg["nb_ctrl"],
                                  d=cfg["d"] or 2, max_gram_dim=cfg["max_gram_dim"],
                                  **common)]
        elif cfg["d"] is not None:
            results = [synth_alternatives(ds, cfg["na_ctrl"], cfg["nb_ctrl"],
                                          d=cfg["d"], **common)]
        else:
            results = hierarchy(ds, cfg["na_ctrl"], cfg["nb_ctrl"],
                                d_max=cfg["d_max"], **common)
    except SizeGuardError as e:
        print(f"synth: size guard: {e}", file=sys.stderr)
        _write_json(out, {"config": {"command": "synth", **cfg},
                          "status": "size_guard", "message": str(e),
                          "sizes": e.report.to_json()})
        return EXIT_SOLVER

    ok = [r for r in results if r.gamma is not None]
    best = min(ok, key=lambda r: r.gamma) if ok else results[-1]
    payload = {"config": {"command": "synth", **cfg},
               "levels": [r.to_json() for r in results],
               **best.to_json()}
    _write_json(out, payload)
    _write_config(out, payload["config"])
    if best.controller and cfg["ctrl_out"]:
        _write_json(Path(cfg["ctrl_out"]), best.controller.to_json())
    if best.gamma is not None:
        print(f"gamma* = {best.gamma:.6f} ({best.status}, d={best.d}, solver={best.solver})")
    else:
        print(f"synthesis failed: {best.status} ({best.solver_status})")
    if best.status == "superstabilizing":
        return EXIT_OK
    if best.status == "not_superstabilizing":
        return EXIT_FAIL
    return EXIT_SOLVER


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def cmd_verify(args) -> int:
    keys = ["data", "ctrl", "gamma", "samples", "seed", "tolerance", "horizon",
            "trials", "out"]
    cfg = _resolve(args, keys)
    try:
        ds = load_dataset(cfg["data"])
        with open(cfg["ctrl"]) as fh:
            ctrl = Compensator.from_json(json.load(fh))
    except (OSError, KeyError, ValueError, TypeError) as e:
        print(f"verify: cannot load inputs: {e}", file=sys.stderr)
        return EXIT_USAGE
    report = verify_controller(ctrl, ds, cfg["gamma"], samples=cfg["samples"],
                               seed=cfg["seed"], tolerance=cfg["tolerance"],
                               envelope_trials=cfg["trials"], horizon=cfg["horizon"])
    payload = {"config": {"command": "verify", **cfg}, **report.to_json()}
    out = Path(cfg["out"])
    _write_json(out, payload)
    _write_config(out, payload["config"])
    print(f"verdict: {'pass' if report.verdict else 'fail'} "
          f"(max margin {report.max_margin}, claimed {cfg['gamma']}, "
          f"{report.sample_count} samples, {report.envelope_violations} envelope violations)")
    return EXIT_OK if report.verdict else EXIT_FAIL


# ---------------------------------------------------------------------------
# complexity
# ---------------------------------------------------------------------------

TABLE_GOLDEN = {"full": {"sigma0": 465, "input_box": 30, "output_box": 30, "equality": 465},
                "alternatives": {"neg_q": 6, "psi": 6, "zeta": 6, "mu": 6},
                "counts": {"sigma0": 1, "psi": 22, "zeta": 26, "mu": 10}}


def cmd_complexity(args) -> int:
    cfg = _resolve(args, ["na", "nb", "T", "d", "check", "json_out"])
    rep = psatz_sizes(cfg["na"], cfg["nb"], cfg["T"], cfg["d"])
    if cfg["json_out"]:
        print(json.dumps(rep.to_json(), indent=2, sort_keys=True))
    else:
        print(f"certificate sizes for n_a={rep.n_a}, n_b={rep.n_b}, T={rep.T} "
              f"(full at d={rep.full_d}, eliminated at d={rep.alt_d})")
        print(f"  variables: full {rep.n_full_vars}, eliminated {rep.n_plant_vars}")
        for method in ("full", "alternatives"):
            print(f"  {method}:")
            for name, bc in getattr(rep, method).items():
                print(f"    {name:<11} count {bc.count:>3}   gram dim {bc.dim}")
    if cfg["check"]:
        rep0 = psatz_sizes(3, 2, 10)
        got = {
            "full": {k: v.dim for k, v in rep0.full.items()},
            "alternatives": {k: v.dim for k, v in rep0.alternatives.items()},
            "counts": {"sigma0": rep0.full["sigma0"].count,
                       "psi": rep0.alternatives["psi"].count,
                       "zeta": rep0.alternatives["zeta"].count,
                       "mu": rep0.alternatives["mu"].count},
        }
        if got != TABLE_GOLDEN:
            print(f"golden check FAILED: {got} != {TABLE_GOLDEN}", file=sys.stderr)
            return EXIT_FAIL
        print("golden check passed")
    return EXIT_OK


# ---------------------------------------------------------------------------
# experiment
# ---------------------------------------------------------------------------

SWEEP_RULES = {
    "T": ("strict_decrease", "gamma must fall strictly as the record grows"),
    "eps": ("strict_increase", "gamma must rise strictly with the noise bound"),
    "order": ("nonincreasing", "gamma must not rise with compensator order"),
    "eps-w": ("nondecreasing", "gamma must not fall with the process-noise bound"),
}


def _run_sweep(name: str, seeds, grid, d: int, jobs: int):
    if name == "T":
        fn = lambda s: benchmarks.sweep_gamma_vs_T(
            seeds=[s], T_grid=tuple(int(v) for v in grid), d=d)
    elif name == "eps":
        fn = lambda s: benchmarks.sweep_gamma_vs_eps(
            seeds=[s], eps_grid=tuple(grid), d=d)
    elif name == "order":
        fn = lambda s: benchmarks.sweep_gamma_vs_order(
            seeds=[s], order_grid=tuple(int(v) for v in grid), d=d)
    else:
        return benchmarks.sweep_gamma_vs_eps_w(seed=seeds[0], eps_w_grid=tuple(grid), d=d)
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_SweepWorker(name, grid, d), seeds))
        return [cell for chunk in chunks for cell in chunk]
    return [cell for s in seeds for cell in fn(s)]


class _SweepWorker:
    """Picklable per-seed sweep task for the process pool."""

    def __init__(self, name, grid, d):
        self.name, self.grid, self.d = name, tuple(grid), d

    def __call__(self, seed):
        return _run_sweep(self.name, [seed], self.grid, self.d, jobs=1)


DEFAULT_GRIDS = {"T": benchmarks.T_GRID, "eps": benchmarks.EPS_GRID,
                 "order": benchmarks.ORDER_GRID, "eps-w": benchmarks.EPS_W_GRID}


def cmd_experiment(args) -> int:
    cfg = _resolve(args, ["sweep", "seeds", "base_seed", "replicates", "grid",
                                  "d", "jobs", "out_dir", "plot", "verify"])
    sweeps = list(DEFAULT_GRIDS) if cfg["sweep"] == "all" else [cfg["sweep"]]
    if cfg["seeds"]:
        seeds = [int(v) for v in _floats(cfg["seeds"])]
    elif cfg["base_seed"] is not None:
        seeds = benchmarks.derive_seeds(cfg["base_seed"], cfg["replicates"])
    else:
        seeds = list(benchmarks.SWEEP_SEEDS[: cfg["replicates"]])
    out_dir = Path(cfg["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_json(out_dir / "experiment.config.json",
                {"command": "experiment", **cfg, "resolved_seeds": seeds})

    all_ok = True
    for name in sweeps:
        grid = _floats(cfg["grid"]) if cfg["grid"] else list(DEFAULT_GRIDS[name])
        cells = _run_sweep(name, seeds, grid, cfg["d"], cfg["jobs"])
        csv_path = out_dir / f"sweep_{name.replace('-', '_')}.csv"
        with open(csv_path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=["sweep", "seed", "param", "gamma",
                                                    "status", "verified"])
            writer.writeheader()
            for cell in cells:
                row = cell.to_row()
                row["verified"] = ""
                if (cfg["verify"] and cell.gamma is not None and cell.gamma < 1.0
                        and cell.controller is not None and cell.dataset is not None):
                    rep = verify_controller(cell.controller, cell.dataset, cell.gamma,
                                            samples=20, envelope_trials=2)
                    row["verified"] = "pass" if rep.verdict else "fail"
                    all_ok = all_ok and rep.verdict
                writer.writerow(row)
        direction, message = SWEEP_RULES[name]
        ok = True
        for seed in {c.seed for c in cells}:
            series = [c.gamma for c in cells if c.seed == seed]
            if any(g is None for g in series):
                ok = False
                continue
            tol = 1e-6 if direction in ("nonincreasing", "nondecreasing") else 0.0
            ok = ok and benchmarks.monotone(series, direction, tol)
        status = "ok" if ok else f"TREND VIOLATION: {message}"
        print(f"sweep {name}: {len(cells)} cells -> {csv_path} [{status}]")
        all_ok = all_ok and ok
        if cfg["plot"]:
            _plot_sweep(name, cells, out_dir / f"sweep_{name.replace('-', '_')}.svg")
    return EXIT_OK if all_ok else EXIT_FAIL


def _plot_sweep(name: str, cells, path: Path):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    fig, ax = plt.subplots(figsize=(6, 4))
    for seed in sorted({c.seed for c in cells}):
        xs = [c.param for c in cells if c.seed == seed]
        ys = [c.gamma for c in cells if c.seed == seed]
        ax.plot(xs, ys, marker="o", label=f"seed {seed}")
    ax.set_xlabel(name)
    ax.set_ylabel("certified gamma")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eivstab",
        description="superstabilizing compensator synthesis from noisy input/output records")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="JSON file with defaults for this command")

    p = sub.add_parser("simulate", help="generate a corrupted input/output record")
    add_common(p)
    p.add_argument("--preset", choices=["demo", "sweep"], default=None,
                   help="built-in benchmark plant")
    p.add_argument("--plant", default=None, help="plant JSON file with fields a, b")
    p.add_argument("--a", default=None, help="comma-separated output coefficients")
    p.add_argument("--b", default=None, help="comma-separated input coefficients")
    p.add_argument("--T", type=int, default=10)
    p.add_argument("--eps-u", dest="eps_u", type=float, default=0.0)
    p.add_argument("--eps-y", dest="eps_y", type=float, default=0.0)
    p.add_argument("--eps-w", dest="eps_w", type=float, default=None)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--u-amplitude", dest="u_amplitude", type=float, default=1.0)
    p.add_argument("--out", default="dataset.csv")
    p.add_argument("--plot", default=None, help="write trajectory SVG here")
    p.set_defaults(func=cmd_simulate, subparser=p)

    p = sub.add_parser("synth", help="synthesize a compensator from a record")
    add_common(p)
    p.add_argument("--data", default=None, help="dataset CSV (sidecar JSON alongside)")
    p.add_argument("--method", choices=["alt", "full"], default="alt")
    p.add_argument("--d", type=int, default=None, help="single relaxation order")
    p.add_argument("--d-max", dest="d_max", type=int, default=2,
                   help="run orders 1..d_max when --d is not given")
    p.add_argument("--na-ctrl", dest="na_ctrl", type=int, default=3)
    p.add_argument("--nb-ctrl", dest="nb_ctrl", type=int, default=2)
    p.add_argument("--gamma-cap", dest="gamma_cap", type=float, default=10.0)
    p.add_argument("--margin", type=float, default=0.0)
    p.add_argument("--solver", choices=available_solvers() or ["clarabel", "scs"],
                   default=None, help=f"conic backend (or ${SOLVER_ENV_VAR})")
    p.add_argument("--max-gram-dim", dest="max_gram_dim", type=int, default=300)
    p.add_argument("--no-normalize", dest="no_normalize", action="store_true")
    p.add_argument("--model-based", dest="model_based", action="store_true",
                   help="known-plant l1 LP instead of data-driven synthesis")
    p.add_argument("--preset", choices=["demo", "sweep"], default=None)
    p.add_argument("--plant", default=None)
    p.add_argument("--a", default=None)
    p.add_argument("--b", default=None)
    p.add_argument("--out", default="synth_result.json")
    p.add_argument("--ctrl-out", dest="ctrl_out", default="controller.json")
    p.set_defaults(func=cmd_synth, subparser=p)

    p = sub.add_parser("verify", help="validate a compensator against a record")
    add_common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--ctrl", required=True, help="compensator JSON with fields a, b")
    p.add_argument("--gamma", type=float, required=True, help="claimed certified gamma")
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tolerance", type=float, default=1e-4)
    p.add_argument("--horizon", type=int, default=50)
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("--out", default="verify_report.json")
    p.set_defaults(func=cmd_verify, subparser=p)

    p = sub.add_parser("complexity", help="certificate size accounting")
    add_common(p)
    p.add_argument("--na", type=int, default=3)
    p.add_argument("--nb", type=int, default=2)
    p.add_argument("--T", type=int, default=10)
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--check", action="store_true", help="assert the reference sizes")
    p.add_argument("--json", dest="json_out", action="store_true")
    p.set_defaults(func=cmd_complexity, subparser=p)

    p = sub.add_parser("experiment", help="seeded trend sweeps with CSV/SVG output")
    add_common(p)
    p.add_argument("--sweep", choices=["T", "eps", "order", "eps-w", "all"], default="all")
    p.add_argument("--seeds", default=None, help="comma-separated seed list")
    p.add_argument("--base-seed", dest="base_seed", type=int, default=None)
    p.add_argument("--replicates", type=int, default=5)
    p.add_argument("--grid", default=None, help="comma-separated sweep values")
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out-dir", dest="out_dir", default="experiments")
    p.add_argument("--plot", action="store_true")
    p.add_argument("--verify", action="store_true",
                   help="run posterior verification on superstabilizing cells")
    p.set_defaults(func=cmd_experiment, subparser=p)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as e:
        print(f"{args.command}: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
