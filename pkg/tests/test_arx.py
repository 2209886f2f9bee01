"""ARX simulation, closed-loop coefficient assembly, and decay envelopes."""

import numpy as np
import pytest

from eivstab.arx import (ArxModel, ClosedLoopCoeffs, Compensator,
                         closed_loop_coefficients, decay_envelope, plant_symbols,
                         simulate, superstable_margin)
from eivstab.benchmarks import demo_compensator, demo_plant
from eivstab.poly import CoeffSequence, Polynomial


def oracle_closed_loop(pa, pb, ca, cb):
    """(1+A)(1+A~) + B B~ - 1 assembled with numpy convolution."""
    one_plus = np.convolve(np.r_[1.0, pa], np.r_[1.0, ca])
    bb = np.convolve(np.r_[0.0, pb], np.r_[0.0, cb])
    n_cl = max(len(pa) + len(ca), len(pb) + len(cb))
    out = np.zeros(n_cl + 1)
    out[: len(one_plus)] += one_plus
    out[: len(bb)] += bb
    assert abs(out[0] - 1.0) < 1e-12
    return out[1:]


def test_closed_loop_matches_convolution_oracle():
    rng = np.random.default_rng(11)
    for _ in range(100):
        n_a = int(rng.integers(2, 5))
        n_b = int(rng.integers(1, n_a))
        na_c = int(rng.integers(1, 5))
        nb_c = int(rng.integers(1, 5))
        pa = list(rng.standard_normal(n_a))
        pb = list(rng.standard_normal(n_b))
        ca = list(rng.standard_normal(na_c))
        cb = list(rng.standard_normal(nb_c))
        got = closed_loop_coefficients((pa, pb), (ca, cb)).as_array()
        want = oracle_closed_loop(pa, pb, ca, cb)
        assert got == pytest.approx(want, abs=1e-10)


def test_closed_loop_accepts_model_objects():
    plant = demo_plant()
    ctrl = demo_compensator()
    cl = closed_loop_coefficients(plant, ctrl)
    assert cl.n_cl == plant.n_a + ctrl.n_a
    assert superstable_margin(cl) == pytest.approx(0.44175, abs=1e-4)


def test_demo_plant_margin_is_published_value():
    # best achievable margin at orders (3, 2); coefficients found by the LP
    ctrl = Compensator(a=[-0.5, 1.46, -0.73], b=[0.0, 1.8291])
    cl = closed_loop_coefficients(demo_plant(), ctrl)
    assert superstable_margin(cl) == pytest.approx(0.44165, abs=1e-3)


def test_closed_loop_symbolic_plant_is_degree_one():
    a, b, names = plant_symbols(3, 2)
    cl = closed_loop_coefficients((a, b), ([0.1, 0.2], [0.0, 0.3]))
    for entry in cl.a_cl:
        if isinstance(entry, Polynomial):
            assert entry.degree() <= 1


def test_closed_loop_length_covers_wide_numerator():
    # n_b + nb_ctrl exceeds n_a + na_ctrl; the coefficient vector must cover it
    cl = closed_loop_coefficients(([0.1, 0.0], [0.5]), ([0.2], [0.1, 0.2, 0.3, 0.4]))
    assert cl.n_cl == 5


def test_arx_order_validation():
    with pytest.raises(ValueError):
        ArxModel(a=[0.5], b=[1.0, 2.0])
    with pytest.raises(ValueError):
        ArxModel(a=[0.5], b=[])
    with pytest.raises(ValueError):
        Compensator(a=[], b=[1.0])


def test_simulate_matches_hand_recursion():
    plant = ArxModel(a=[0.3, -0.2], b=[0.5])
    u = CoeffSequence(0, [1.0, -1.0, 0.5, 0.25, 0.0])
    y_init = [0.2, -0.1]
    out = simulate(plant, u, y_init, T=5)
    assert out.start == -1 and out.end == 5
    y = {-1: 0.2, 0: -0.1}
    for t in range(1, 6):
        y[t] = -0.3 * y[t - 1] + 0.2 * y[t - 2] + 0.5 * u[t - 1]
    for t in range(-1, 6):
        assert out[t] == pytest.approx(y[t], abs=1e-12)


def test_simulate_with_disturbance():
    plant = ArxModel(a=[0.0, 0.0], b=[1.0])
    u = CoeffSequence(0, [0.0] * 4)
    w = CoeffSequence(1, [1.0, -2.0, 3.0])
    out = simulate(plant, u, [0.0, 0.0], T=3, w=w)
    assert [out[1], out[2], out[3]] == pytest.approx([1.0, -2.0, 3.0])


def test_simulate_rejects_short_history():
    plant = ArxModel(a=[0.3, -0.2], b=[0.5])
    with pytest.raises(ValueError):
        simulate(plant, CoeffSequence(0, [0.0]), [0.0], T=1)


def test_envelope_values():
    # order 2, gamma 0.5, history peak 4: block k covers t = 2k+1, 2k+2
    assert decay_envelope(0.5, 2, 4.0, 0) == 4.0
    assert decay_envelope(0.5, 2, 4.0, 1) == 2.0
    assert decay_envelope(0.5, 2, 4.0, 2) == 2.0
    assert decay_envelope(0.5, 2, 4.0, 3) == 1.0
    assert decay_envelope(0.5, 2, 4.0, 5) == 0.5
    assert decay_envelope(0.0, 3, 7.0, 1) == 0.0
    with pytest.raises(ValueError):
        decay_envelope(-0.1, 2, 1.0, 1)
    with pytest.raises(ValueError):
        decay_envelope(0.5, 0, 1.0, 1)


def test_envelope_bounds_autonomous_response():
    # property check: any superstable loop stays under the certified envelope
    rng = np.random.default_rng(13)
    for _ in range(60):
        n = int(rng.integers(1, 5))
        a_cl = rng.standard_normal(n)
        norm = np.sum(np.abs(a_cl))
        gamma = float(rng.uniform(0.1, 0.95))
        a_cl = a_cl / norm * gamma
        hist = list(rng.uniform(-1.0, 1.0, size=n))
        M = max(abs(v) for v in hist)
        buf = list(hist)
        for t in range(1, 51):
            y_t = -float(np.dot(a_cl, buf[-n:][::-1]))
            bound = decay_envelope(gamma, n, M, t)
            assert abs(y_t) <= bound * (1.0 + 1e-9)
            buf.append(y_t)


def test_superstable_margin_accepts_lists():
    assert superstable_margin([0.25, -0.5]) == pytest.approx(0.75)
    assert superstable_margin(ClosedLoopCoeffs([0.1, 0.2])) == pytest.approx(0.3)


def test_plant_symbols_registry():
    a, b, names = plant_symbols(3, 2)
    assert names == ("a1", "a2", "a3", "b1", "b2")
    assert len(a) == 3 and len(b) == 2
    assert a[0].eval({n: float(i) for i, n in enumerate(names, 1)}) == pytest.approx(1.0)
    assert b[1].eval({n: float(i) for i, n in enumerate(names, 1)}) == pytest.approx(5.0)


def test_model_json_round_trip():
    plant = demo_plant()
    again = ArxModel.from_json(plant.to_json())
    assert again.a == plant.a and again.b == plant.b
    ctrl = demo_compensator()
    again = Compensator.from_json(ctrl.to_json())
    assert again.a == ctrl.a and again.b == ctrl.b
