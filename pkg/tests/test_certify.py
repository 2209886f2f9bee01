"""Positivity certificates: explicit-set membership and the eliminated form."""

import numpy as np
import pytest

from eivstab.arx import ArxModel
from eivstab.certify import (alternatives_constraints, alternatives_constraints_w,
                             archimedean_augment, box_set, pi_box, poly_zero,
                             putinar_constraints, sample_box_min, wsos_membership)
from eivstab.conic import ConicProgram
from eivstab.data import BsaSet, generate
from eivstab.poly import Polynomial
from eivstab.synth import full_synthesis_set

PLANT = ArxModel(a=[0.3, -0.2], b=[0.5])
NAMES = ("a1", "a2", "b1")


def centered_quadratic():
    a1, a2, b1 = (Polynomial.variable(n, NAMES) for n in NAMES)
    return ((a1 - 0.3) * (a1 - 0.3) + (a2 + 0.2) * (a2 + 0.2)
            + (b1 - 0.5) * (b1 - 0.5))


def unit_interval():
    x = Polynomial.variable("x", ("x",))
    return BsaSet(("x",), [x, 1.0 - x], [], box=[(0.0, 1.0)])


# ---------------------------------------------------------------------------
# set builders
# ---------------------------------------------------------------------------

def test_box_set_quadratics():
    K = box_set(("a1", "b1"), radius=2.0)
    assert len(K.inequalities) == 2
    assert K.box == [(-2.0, 2.0), (-2.0, 2.0)]
    assert K.inequalities[0].eval({"a1": 2.0, "b1": 0.0}) == pytest.approx(0.0)
    assert K.inequalities[0].eval({"a1": 0.0, "b1": 0.0}) == pytest.approx(4.0)


def test_archimedean_ball_radius_from_box():
    K = archimedean_augment(box_set(("a1", "a2", "b1"), radius=2.0))
    ball = K.inequalities[-1]
    # radius^2 equals the summed per-coordinate bounds: 3 * 4
    assert ball.eval({"a1": 0.0, "a2": 0.0, "b1": 0.0}) == pytest.approx(12.0)
    corner = {"a1": 2.0, "a2": 2.0, "b1": 2.0}
    assert ball.eval(corner) == pytest.approx(0.0)


def test_pi_box_structure():
    Pi = pi_box(3, 2)
    assert len(Pi.vars) == 5
    assert len(Pi.inequalities) == 6  # five box quadratics plus the ball
    assert not Pi.equalities


# ---------------------------------------------------------------------------
# membership plumbing
# ---------------------------------------------------------------------------

def test_wsos_membership_rejects_odd_degree():
    with pytest.raises(ValueError):
        wsos_membership(ConicProgram(), unit_interval(), 3)


def test_wsos_multiplier_degrees():
    prog = ConicProgram()
    block = wsos_membership(prog, unit_interval(), 4)
    assert block.sigma0.dim == 3  # basis 1, x, x^2
    for g, s in block.ineq_multipliers:
        assert s.dim == 2  # degree-1 constraints get half-degree (4-1)//2 = 1


def test_wsos_skips_constraints_above_truncation():
    x = Polynomial.variable("x", ("x",))
    quartic = 1.0 - x * x * x * x
    K = BsaSet(("x",), [x, quartic], [])
    block = wsos_membership(ConicProgram(), K, 2)
    assert len(block.ineq_multipliers) == 1


def test_poly_zero_rejects_impossible_constant():
    with pytest.raises(ValueError):
        poly_zero(ConicProgram(), [(1.0, Polynomial.constant(1.0, ("x",)))])


def test_sample_box_min_flags_negative_dips():
    x = Polynomial.variable("x", ("x",))
    dipping = x * x - 0.5
    assert sample_box_min(dipping, [(-1.0, 1.0)], 200) < -1e-6
    positive = x * x + 0.1
    assert sample_box_min(positive, [(-1.0, 1.0)], 200) >= 0.1


# ---------------------------------------------------------------------------
# explicit-set certificates
# ---------------------------------------------------------------------------

def test_putinar_needs_degree_two_for_boundary_quadratic():
    # x(1-x) vanishes at both endpoints; degree-0 multipliers cannot express it
    q = Polynomial.variable("x", ("x",)) * (1.0 - Polynomial.variable("x", ("x",)))
    prog = ConicProgram()
    putinar_constraints(prog, q, unit_interval(), d=1)
    assert not prog.solve().ok
    prog = ConicProgram()
    cert = putinar_constraints(prog, q, unit_interval(), d=2)
    sol = prog.solve()
    assert sol.ok
    audit = cert.audit(sol.x)
    assert audit["identity_residual"] <= 1e-8
    assert audit["reexpansion_residual"] <= 1e-8
    assert audit["min_gram_eig"] >= -1e-7


def test_putinar_ball_complement_at_degree_one():
    names = ("a1", "a2")
    a1, a2 = (Polynomial.variable(n, names) for n in names)
    ball = 4.0 - a1 * a1 - a2 * a2
    K = BsaSet(names, [ball], [], box=[(-2.0, 2.0)] * 2)
    prog = ConicProgram()
    cert = putinar_constraints(prog, ball, K, d=1)
    sol = prog.solve()
    assert sol.ok
    assert cert.audit(sol.x)["identity_residual"] <= 1e-8


def test_putinar_rejects_negative_constant():
    prog = ConicProgram()
    putinar_constraints(prog, Polynomial.constant(-1.0, ("x",)), unit_interval(), d=2)
    assert not prog.solve().ok


def test_putinar_margin_shifts_the_target():
    one = Polynomial.constant(1.0, ("x",))
    prog = ConicProgram()
    putinar_constraints(prog, one, unit_interval(), d=1, margin=0.5)
    assert prog.solve().ok
    prog = ConicProgram()
    putinar_constraints(prog, one, unit_interval(), d=1, margin=2.0)
    assert not prog.solve().ok


def test_putinar_degree_validation():
    q = centered_quadratic()
    with pytest.raises(ValueError):
        putinar_constraints(ConicProgram(), q, pi_box(2, 1), d=0)
    quartic = q * q
    with pytest.raises(ValueError):
        putinar_constraints(ConicProgram(), quartic, pi_box(2, 1), d=1)


def test_putinar_on_consistency_set():
    ds = generate(PLANT, T=2, eps_u=0.05, eps_y=0.05, seed=23)
    K = full_synthesis_set(ds)
    prog = ConicProgram()
    q = (20.0 - centered_quadratic()).map_vars(K.vars)
    cert = putinar_constraints(prog, q, K, d=2)
    sol = prog.solve()
    assert sol.ok
    audit = cert.audit(sol.x)
    assert audit["identity_residual"] <= 1e-8
    assert audit["reexpansion_residual"] <= 1e-8
    assert audit["min_gram_eig"] >= -1e-7


def test_putinar_json_dump(tmp_path):
    import json
    q = Polynomial.variable("x", ("x",)) * (1.0 - Polynomial.variable("x", ("x",)))
    prog = ConicProgram()
    cert = putinar_constraints(prog, q, unit_interval(), d=2)
    sol = prog.solve()
    payload = cert.to_json(sol.x)
    text = json.dumps(payload)
    assert "sigma0" in payload and payload["degree"] == 2
    assert json.loads(text)["audit"]["identity_residual"] <= 1e-8


# ---------------------------------------------------------------------------
# eliminated-form certificates
# ---------------------------------------------------------------------------

def test_alternatives_certifies_point_localization_noise_free():
    # clean record pins the plant; q is positive only near the truth, so the
    # certificate must lean on the data terms rather than set positivity
    ds = generate(PLANT, T=4, eps_u=0.0, eps_y=0.0, seed=21)
    prog = ConicProgram()
    cert = alternatives_constraints(prog, 0.5 - centered_quadratic(), ds, d=1)
    sol = prog.solve()
    assert sol.ok
    audit = cert.audit(sol.x)
    assert audit["coupling_residual"] <= 1e-6
    assert audit["q_reconstruction_residual"] <= 1e-6
    assert audit["reexpansion_residual"] <= 1e-8
    assert audit["min_gram_eig"] >= -1e-7
    assert audit["negq_sampled_min"] >= -1e-6


def test_alternatives_certifies_noisy_localization():
    ds = generate(PLANT, T=6, eps_u=0.05, eps_y=0.05, seed=22)
    prog = ConicProgram()
    cert = alternatives_constraints(prog, 1.0 - centered_quadratic(), ds, d=1)
    sol = prog.solve()
    assert sol.ok
    audit = cert.audit(sol.x)
    assert audit["coupling_residual"] <= 1e-6
    assert audit["q_reconstruction_residual"] <= 1e-6
    assert audit["reexpansion_residual"] <= 1e-8
    assert audit["min_gram_eig"] >= -1e-7
    assert audit["negq_sampled_min"] >= -1e-6


def test_alternatives_rejects_negative_constant():
    ds = generate(PLANT, T=3, eps_u=0.05, eps_y=0.05, seed=22)
    prog = ConicProgram()
    alternatives_constraints(prog, Polynomial.constant(-1.0, NAMES), ds, d=1)
    assert not prog.solve().ok


def test_alternatives_multiplier_counts():
    ds = generate(PLANT, T=5, eps_u=0.02, eps_y=0.02, seed=24)
    prog = ConicProgram()
    cert = alternatives_constraints(prog, Polynomial.constant(1.0, NAMES), ds, d=1)
    assert len(cert.psi_plus) == ds.T + ds.n_b - 1
    assert len(cert.zeta_plus) == ds.T + ds.n_a
    assert len(cert.mu) == ds.T


def test_alternatives_process_noise_variant():
    ds = generate(PLANT, T=6, eps_u=0.05, eps_y=0.05, seed=22, eps_w=0.01)
    prog = ConicProgram()
    cert = alternatives_constraints_w(prog, 1.5 - centered_quadratic(), ds, d=1)
    sol = prog.solve()
    assert sol.ok
    audit = cert.audit(sol.x)
    assert audit["coupling_residual"] <= 1e-6
    assert audit["q_reconstruction_residual"] <= 1e-6
    assert audit["negq_sampled_min"] >= -1e-6


def test_alternatives_entry_points_check_noise_model():
    with_w = generate(PLANT, T=3, eps_u=0.05, eps_y=0.05, seed=22, eps_w=0.01)
    without_w = generate(PLANT, T=3, eps_u=0.05, eps_y=0.05, seed=22)
    q = Polynomial.constant(1.0, NAMES)
    with pytest.raises(ValueError):
        alternatives_constraints(ConicProgram(), q, with_w, d=1)
    with pytest.raises(ValueError):
        alternatives_constraints_w(ConicProgram(), q, without_w, d=1)


def test_alternatives_degree_validation():
    ds = generate(PLANT, T=3, eps_u=0.05, eps_y=0.05, seed=22)
    quartic = centered_quadratic() * centered_quadratic()
    with pytest.raises(ValueError):
        alternatives_constraints(ConicProgram(), quartic, ds, d=1)
    bad_var = Polynomial.variable("z9", ("z9",))
    with pytest.raises(ValueError):
        alternatives_constraints(ConicProgram(), bad_var, ds, d=1)


def test_alternatives_json_dump():
    import json
    ds = generate(PLANT, T=3, eps_u=0.0, eps_y=0.0, seed=25)
    prog = ConicProgram()
    cert = alternatives_constraints(prog, 0.5 - centered_quadratic(), ds, d=1)
    sol = prog.solve()
    assert sol.ok
    payload = cert.to_json(sol.x)
    assert payload["kind"] == "alternatives"
    assert len(payload["mu"]) == ds.T
    json.dumps(payload)
