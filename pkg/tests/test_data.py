"""Record generation, residuals, consistency sets, membership, serialization."""

import numpy as np
import pytest

from eivstab.arx import ArxModel
from eivstab.data import (Dataset, SamplerExhausted, consistency_set, corrupt,
                          generate, load_dataset, membership, plant_var_names,
                          residual_h, sample_consistent_plants, save_dataset)
from eivstab.poly import CoeffSequence

PLANT = ArxModel(a=[0.3, -0.2], b=[0.5])


def test_generate_is_deterministic_per_seed():
    d1 = generate(PLANT, T=6, eps_u=0.05, eps_y=0.05, seed=9)
    d2 = generate(PLANT, T=6, eps_u=0.05, eps_y=0.05, seed=9)
    d3 = generate(PLANT, T=6, eps_u=0.05, eps_y=0.05, seed=10)
    assert d1.u_hat.values == d2.u_hat.values
    assert d1.y_hat.values == d2.y_hat.values
    assert d1.y_hat.values != d3.y_hat.values


def test_record_index_ranges():
    ds = generate(PLANT, T=7, eps_u=0.0, eps_y=0.0, seed=0)
    assert ds.u_hat.start == 1 - PLANT.n_b and ds.u_hat.end == ds.T - 1
    assert ds.y_hat.start == 1 - PLANT.n_a and ds.y_hat.end == ds.T
    assert len(ds.u_hat) == ds.T + PLANT.n_b - 1
    assert len(ds.y_hat) == ds.T + PLANT.n_a


def test_corrupt_respects_bounds_and_offsets():
    rng = np.random.default_rng(1)
    u = CoeffSequence(0, list(rng.standard_normal(8)))
    y = CoeffSequence(-1, list(rng.standard_normal(10)))
    u_hat, y_hat, du, dy = corrupt(u, y, eps_u=0.03, eps_y=0.07, seed=4)
    assert max(abs(v) for v in du.values) <= 0.03
    assert max(abs(v) for v in dy.values) <= 0.07
    for t in u.indices():
        assert u_hat[t] == pytest.approx(u[t] + du[t])
    for t in y.indices():
        assert y_hat[t] == pytest.approx(y[t] + dy[t])


def test_residual_matches_hand_formula():
    ds = generate(PLANT, T=4, eps_u=0.02, eps_y=0.02, seed=5)
    h = residual_h(ds)
    assert len(h) == ds.T
    point = {"a1": 0.4, "a2": -0.1, "b1": 0.9}
    for t in range(1, ds.T + 1):
        by_hand = (ds.y_hat[t] + 0.4 * ds.y_hat[t - 1] - 0.1 * ds.y_hat[t - 2]
                   - 0.9 * ds.u_hat[t - 1])
        assert h[t - 1].eval(point) == pytest.approx(by_hand, abs=1e-12)


def test_residual_vanishes_at_truth_on_clean_data():
    ds = generate(PLANT, T=6, eps_u=0.0, eps_y=0.0, seed=2)
    point = {"a1": 0.3, "a2": -0.2, "b1": 0.5}
    for h_t in residual_h(ds):
        assert h_t.eval(point) == pytest.approx(0.0, abs=1e-12)


def test_consistency_set_counts():
    ds = generate(PLANT, T=5, eps_u=0.01, eps_y=0.01, seed=3)
    K = consistency_set(ds)
    assert len(K.inequalities) == 2 * (ds.T + ds.n_b - 1) + 2 * (ds.T + ds.n_a)
    assert len(K.equalities) == ds.T
    assert len(K.vars) == ds.n_a + ds.n_b + (ds.T + ds.n_b - 1) + (ds.T + ds.n_a)


def test_consistency_set_relaxes_equalities_with_process_noise():
    ds = generate(PLANT, T=5, eps_u=0.01, eps_y=0.01, seed=3, eps_w=0.02)
    K = consistency_set(ds)
    base = 2 * (ds.T + ds.n_b - 1) + 2 * (ds.T + ds.n_a)
    assert len(K.inequalities) == base + 2 * ds.T
    assert len(K.equalities) == 0


def test_consistency_set_contains_generation_truth():
    ds = generate(PLANT, T=5, eps_u=0.05, eps_y=0.05, seed=6)
    K = consistency_set(ds)
    point = {"a1": 0.3, "a2": -0.2, "b1": 0.5}
    for t in ds.du_indices():
        point[f"du[{t}]"] = ds.true_du[t]
    for t in ds.dy_indices():
        point[f"dy[{t}]"] = ds.true_dy[t]
    assert K.contains(point, tol=1e-8)


def test_membership_noise_free_is_exact():
    ds = generate(PLANT, T=6, eps_u=0.0, eps_y=0.0, seed=7)
    assert membership(ds, PLANT).feasible
    off = ArxModel(a=[0.31, -0.2], b=[0.5])
    assert not membership(ds, off).feasible


def test_membership_witness_lies_in_set():
    ds = generate(PLANT, T=4, eps_u=0.05, eps_y=0.05, seed=8)
    res = membership(ds, PLANT)
    assert res.feasible
    K = consistency_set(ds)
    point = {"a1": 0.3, "a2": -0.2, "b1": 0.5}
    for t in ds.du_indices():
        point[f"du[{t}]"] = res.du[t]
    for t in ds.dy_indices():
        point[f"dy[{t}]"] = res.dy[t]
    assert K.contains(point, tol=1e-6)


def test_membership_monotone_in_declared_bounds():
    import dataclasses
    ds = generate(PLANT, T=6, eps_u=0.02, eps_y=0.02, seed=12)
    probe = ArxModel(a=[0.33, -0.22], b=[0.52])
    feas = []
    for eps in (0.0, 0.05, 0.2, 0.5):
        wide = dataclasses.replace(ds, eps_u=eps, eps_y=eps)
        feas.append(membership(wide, probe).feasible)
    # once feasible at some bound, feasible at every larger bound
    assert feas == sorted(feas)
    assert feas[-1]


def test_membership_rejects_distant_plant():
    ds = generate(PLANT, T=6, eps_u=0.02, eps_y=0.02, seed=13)
    res = membership(ds, ArxModel(a=[5.0, 5.0], b=[5.0]))
    assert not res.feasible
    assert res.violation > 1e-3


def test_sampler_accepts_and_reports_diagnostics():
    ds = generate(PLANT, T=5, eps_u=0.1, eps_y=0.1, seed=14)
    box = [(0.3 - 0.2, 0.3 + 0.2), (-0.2 - 0.2, -0.2 + 0.2), (0.5 - 0.2, 0.5 + 0.2)]
    plants, diag = sample_consistent_plants(ds, count=5, seed=0, box=box,
                                            max_draws=2000)
    assert diag["accepted"] == 5
    for a, b in plants:
        assert membership(ds, (a, b)).feasible


def test_sampler_acceptance_grows_with_noise_bound():
    import dataclasses
    base = generate(PLANT, T=5, eps_u=0.02, eps_y=0.02, seed=15)
    box = [(0.1, 0.5), (-0.4, 0.0), (0.3, 0.7)]
    rates = []
    for eps in (0.05, 0.15, 0.4):
        ds = dataclasses.replace(base, eps_u=eps, eps_y=eps)
        _, diag = sample_consistent_plants(ds, count=200, seed=1, box=box,
                                           max_draws=200)
        assert diag["draws"] == 200
        rates.append(diag["acceptance_rate"])
    assert rates[0] < rates[1] <= rates[2]
    assert rates[2] > 0.9


def test_sampler_exhaustion_raises_with_diagnostics():
    ds = generate(PLANT, T=8, eps_u=0.0, eps_y=0.0, seed=16)
    # the clean-data set is lower-dimensional; random draws never hit it
    with pytest.raises(SamplerExhausted) as err:
        sample_consistent_plants(ds, count=1, seed=2, max_draws=50)
    assert err.value.diagnostics["draws"] == 50


def test_dataset_round_trip(tmp_path):
    ds = generate(PLANT, T=6, eps_u=0.04, eps_y=0.03, seed=17, eps_w=0.01)
    path = tmp_path / "rec.csv"
    save_dataset(ds, path)
    again = load_dataset(path)
    assert again.n_a == ds.n_a and again.n_b == ds.n_b and again.T == ds.T
    assert again.eps_u == ds.eps_u and again.eps_y == ds.eps_y
    assert again.eps_w == ds.eps_w and again.seed == ds.seed
    assert again.u_hat.start == ds.u_hat.start
    assert again.u_hat.values == pytest.approx(ds.u_hat.values, abs=1e-15)
    assert again.y_hat.values == pytest.approx(ds.y_hat.values, abs=1e-15)


def test_prefix_truncates_record():
    ds = generate(PLANT, T=8, eps_u=0.02, eps_y=0.02, seed=18)
    cut = ds.prefix(5)
    assert cut.T == 5
    assert cut.u_hat.values == ds.u_hat.values[: 5 + ds.n_b - 1]
    assert cut.y_hat.values == ds.y_hat.values[: 5 + ds.n_a]
    with pytest.raises(ValueError):
        ds.prefix(9)


def test_scaling_preserves_membership_decisions():
    ds = generate(PLANT, T=6, eps_u=0.05, eps_y=0.05, seed=19)
    inside = ArxModel(a=[0.3, -0.2], b=[0.5])
    outside = ArxModel(a=[1.5, 1.5], b=[1.5])
    for c in (0.1, 10.0):
        scaled = ds.scaled(c)
        assert membership(scaled, inside).feasible
        assert not membership(scaled, outside).feasible


def test_plant_var_names_order():
    assert plant_var_names(2, 1) == ("a1", "a2", "b1")


def test_dataset_validates_shapes():
    with pytest.raises(ValueError):
        Dataset(CoeffSequence(0, [0.0] * 3), CoeffSequence(-1, [0.0] * 5),
                n_a=2, n_b=1, T=4, eps_u=0.0, eps_y=0.0)
