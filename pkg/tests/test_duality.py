import numpy as np
import pytest

from splitvar import (
    CellField2,
    ConjugateRangeError,
    Grid,
    GridFunction,
    SolveConfig,
    continuation,
    duality_gap,
    eval_J,
    eval_R,
    extremality_check,
    gradient,
    stress,
)
from tests.conftest import affine_field


@pytest.fixture(scope="module")
def affine_run(pair_std):
    g = Grid(16, 16)
    u0 = affine_field(g, 2.0, -1.0)
    cfg = SolveConfig(
        grid=g,
        densities=pair_std,
        u0=u0,
        delta_schedule=[1e-1, 1e-2, 1e-3, 1e-4],
        store_fields=True,
    )
    return cfg, continuation(cfg)


# ---------------------------------------------------------------------------
# stress map
# ---------------------------------------------------------------------------


def test_stress_zero_field(pair_std):
    g = Grid(8, 8)
    u = GridFunction(g, np.zeros(g.node_shape))
    sigma, tau, x_delta = stress(u, pair_std, delta=0.1, p_reg=2.0)
    assert np.array_equal(tau.comp1, np.zeros((8, 8)))
    assert np.array_equal(tau.comp2, np.zeros((8, 8)))
    assert np.array_equal(x_delta, np.zeros((8, 8)))
    assert np.array_equal(sigma.comp1, np.zeros((8, 8)))


def test_stress_affine_slope_three(pair_std):
    # f1'(3) = 1 - (1+3)^(-1/2) = 0.5 exactly for the 1.5-exponent density
    g = Grid(16, 16)
    u = affine_field(g, 3.0, -1.0)
    _, tau, _ = stress(u, pair_std, delta=0.0, p_reg=2.0)
    assert np.allclose(tau.comp1, 0.5, atol=1e-12)
    assert np.allclose(tau.comp2, -2.0, atol=1e-12)


def test_stress_first_component_strictly_inside_recession(pair_std):
    g = Grid(8, 8)
    rng = np.random.default_rng(17)
    u = GridFunction(g, 10.0 * rng.standard_normal(g.node_shape))
    _, tau, _ = stress(u, pair_std, delta=0.0, p_reg=2.0)
    assert np.all(np.abs(tau.comp1) < 1.0)


def test_stress_regularizer_term_hand_values(pair_std):
    g = Grid(4, 4)
    u = affine_field(g, 2.0, 0.0)
    sigma2, tau2, x2 = stress(u, pair_std, delta=0.1, p_reg=2.0)
    # p=2: X = 2t, so sigma1 - tau1 = 0.1 * 4 = 0.4
    assert np.allclose(sigma2.comp1 - tau2.comp1, 0.4, atol=1e-13)
    assert np.allclose(x2, 4.0, atol=1e-13)
    u1 = affine_field(g, 1.0, 0.0)
    _, _, x3 = stress(u1, pair_std, delta=0.1, p_reg=3.0)
    # p=3: X = 3t(1+t^2)^(1/2) = 3*sqrt(2) at t=1
    assert np.allclose(x3, 3.0 * np.sqrt(2.0), atol=1e-12)


# ---------------------------------------------------------------------------
# dual objective
# ---------------------------------------------------------------------------


def test_eval_r_zero_stress(pair_std):
    g = Grid(8, 8)
    u0 = affine_field(g, 2.0, -1.0)
    tau = CellField2(g, np.zeros((8, 8)), np.zeros((8, 8)))
    r, certified = eval_R(tau, pair_std, u0, div_tol=1e-6)
    assert r == 0.0
    assert certified


def test_eval_r_certifies_converged_stress(pair_std, affine_run):
    cfg, report = affine_run
    r, certified = eval_R(report.stress_final, pair_std, cfg.u0, div_tol=1e-6)
    assert certified
    assert r <= eval_J(report.u_final, pair_std).j_total


def test_eval_r_rejects_wild_stress(pair_std):
    g = Grid(8, 8)
    u0 = affine_field(g, 2.0, -1.0)
    rng = np.random.default_rng(3)
    tau = CellField2(g, rng.uniform(-0.8, 0.8, (8, 8)), rng.standard_normal((8, 8)))
    _, certified = eval_R(tau, pair_std, u0, div_tol=1e-6)
    assert not certified


def test_eval_r_conjugate_range_error(pair_std):
    g = Grid(4, 4)
    u0 = affine_field(g, 1.0, 0.0)
    tau = CellField2(g, np.full((4, 4), 1.5), np.zeros((4, 4)))
    with pytest.raises(ConjugateRangeError):
        eval_R(tau, pair_std, u0, div_tol=1e-6)


def test_weak_duality_random_admissible_fields(pair_std, affine_run):
    # R at a certified stress lower-bounds J over fields with the same ring
    cfg, report = affine_run
    r, certified = eval_R(report.stress_final, pair_std, cfg.u0, div_tol=1e-6)
    assert certified
    rng = np.random.default_rng(8)
    for _ in range(5):
        v = cfg.u0.copy()
        v.values[1:-1, 1:-1] += rng.standard_normal((15, 15))
        assert eval_J(v, pair_std).j_total >= r - 1e-9


def test_constant_stress_cannot_beat_slope_map(pair_std):
    # among constant (hence divergence-free) stresses the slope map of the
    # boundary gradient maximizes R; any in-range constant stays below it
    g = Grid(16, 16)
    u0 = affine_field(g, 2.0, -1.0)
    _, tau_star, _ = stress(u0, pair_std, delta=0.0, p_reg=2.0)
    r_star, _ = eval_R(tau_star, pair_std, u0, div_tol=1e-6)
    rng = np.random.default_rng(23)
    for _ in range(12):
        c1 = float(rng.uniform(-0.95, 0.95))
        c2 = float(rng.uniform(-4.0, 4.0))
        tau_c = CellField2(g, np.full((16, 16), c1), np.full((16, 16), c2))
        r_c, certified = eval_R(tau_c, pair_std, u0, div_tol=1e-6)
        assert certified  # constants scatter to exact zeros
        assert r_c <= r_star + 1e-9


# ---------------------------------------------------------------------------
# extremality
# ---------------------------------------------------------------------------


def test_extremality_zero_fields(pair_std):
    g = Grid(8, 8)
    u = GridFunction(g, np.zeros(g.node_shape))
    tau = CellField2(g, np.zeros((8, 8)), np.zeros((8, 8)))
    assert extremality_check(u, tau, pair_std) == 0.0


def test_extremality_exact_at_slope_map(pair_std):
    g = Grid(16, 16)
    u = affine_field(g, 3.0, -1.0)
    _, tau, _ = stress(u, pair_std, delta=0.0, p_reg=2.0)
    assert extremality_check(u, tau, pair_std) <= 1e-12


def test_extremality_detects_perturbation(pair_std):
    g = Grid(16, 16)
    u = affine_field(g, 3.0, -1.0)
    _, tau, _ = stress(u, pair_std, delta=0.0, p_reg=2.0)
    tau.comp1[4, 7] += 0.1
    assert extremality_check(u, tau, pair_std) >= 1e-3


def test_fenchel_young_pointwise_inequality(pair_std):
    # f(grad u) + f*(tau) >= tau . grad u cell by cell for any in-range tau
    g = Grid(8, 8)
    rng = np.random.default_rng(31)
    u = GridFunction(g, rng.standard_normal(g.node_shape))
    field = gradient(u)
    tau1 = rng.uniform(-0.9, 0.9, (8, 8))
    tau2 = rng.standard_normal((8, 8))
    lhs = (
        np.asarray(pair_std.f1.eval(field.comp1))
        + np.asarray(pair_std.f2.eval(field.comp2))
        + np.asarray(pair_std.conjugate_f1(tau1))
        + np.asarray(pair_std.conjugate_f2(tau2))
    )
    pairing = tau1 * field.comp1 + tau2 * field.comp2
    assert np.all(lhs - pairing >= -1e-9)


# ---------------------------------------------------------------------------
# assembled report
# ---------------------------------------------------------------------------


def test_dual_report_keys(pair_std, affine_run):
    cfg, report = affine_run
    dr = duality_gap(report.u_final, report.stress_final, pair_std, u0=cfg.u0)
    payload = dr.to_dict()
    assert {
        "r",
        "gap_abs",
        "gap_rel",
        "div_residual",
        "extremality",
        "delta_stress_norm",
    } <= set(payload)


def test_gap_shrinks_along_schedule(pair_std, affine_run):
    cfg, report = affine_run
    gaps, norms = [], []
    for rec in report.records:
        u = GridFunction(cfg.grid, rec.u)
        sigma, _, _ = stress(u, pair_std, rec.delta, cfg.p_reg)
        dr = duality_gap(
            u, sigma, pair_std, u0=cfg.u0, delta=rec.delta, p_reg=cfg.p_reg
        )
        assert dr.gap_absolute >= -1e-9
        assert dr.certified
        assert dr.extremality_max_violation <= 1e-10
        gaps.append(dr.gap_absolute)
        norms.append(dr.delta_stress_norm)
    assert all(b <= a * 1.1 for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] <= 1e-3 * (1.0 + abs(report.records[-1].j_value))
    # the vanishing stress is linear in delta: norm = 8 * delta here
    deltas = [rec.delta for rec in report.records]
    assert np.allclose(norms, [8.0 * d for d in deltas], rtol=1e-12)


def test_duality_gap_defaults_u0_to_u(pair_std, affine_run):
    _, report = affine_run
    dr = duality_gap(report.u_final, report.stress_final, pair_std)
    assert dr.gap_absolute >= -1e-9
