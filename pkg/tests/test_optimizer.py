import math

import numpy as np
import pytest

import oracles
from trotterkit.errors import ConfigurationError, DomainError, OptimizationError
from trotterkit.library import get_builtin
from trotterkit.optimizer import (
    Catalog,
    CoefficientModel,
    LMConfig,
    OptimizationRun,
    Parameterization,
    default_weights,
    deduplicate,
    eliminate_sum_constraints,
    impose_constraints,
    initial_point,
    jacobian,
    levenberg_marquardt,
    lm_step,
    multistart,
    optimize_penalized,
    optimize_scheme,
    two_phase,
)
from trotterkit.scheme_core import compute_error_coefficients, stage_to_symmetric


def fd_jacobian(model, p, step=1e-6):
    cols = []
    for i in range(p.size):
        e = np.zeros(p.size)
        e[i] = step
        cols.append((model.residuals(p + e) - model.residuals(p - e)) / (2 * step))
    return np.array(cols).T


@pytest.mark.parametrize("q", [4, 8])
def test_jacobian_against_finite_differences(q):
    rng = np.random.default_rng(q)
    model = CoefficientModel(q, (3, 5, 7))
    for _ in range(20):
        p = rng.normal(scale=0.3, size=model.param.n_free) + model.param.origin()
        J = model.residuals_and_jacobian(p)[1]
        Jfd = fd_jacobian(model, p)
        assert np.max(np.abs(J - Jfd)) / np.max(np.abs(J)) < 1e-6


def test_jacobian_helper_shape():
    assert jacobian(np.zeros(3), 4).shape == (2 + 6 + 18, 3)


def test_q2_family_derivatives():
    # free parameter at q = 2 is half the centre A exponent, so l = 1/2 - p
    model = CoefficientModel(2, (3,))
    for p in (0.1, 0.3, -0.4):
        l = 0.5 - p
        J = model.residuals_and_jacobian(np.array([p]))[1]
        assert J[0, 0] == pytest.approx(-(-0.5 + l), abs=1e-13)
        assert J[1, 0] == pytest.approx(-0.25, abs=1e-13)


def test_parameterization_uniform_point():
    param = Parameterization(2)
    s = param.scheme(np.array([0.25]))
    assert np.allclose(s.ramp_c, 0.25)
    co = compute_error_coefficients(s)
    assert co.nu == 1.0 and co.sigma == 1.0


def test_elimination_sums(rng):
    for q in (3, 6, 14):
        s = eliminate_sum_constraints(rng.normal(size=Parameterization(q).n_free), q)
        tol = 1e-15 * q * max(1.0, np.max(np.abs(s.ramp_c)), np.max(np.abs(s.ramp_d)))
        assert abs(s.ramp_c.sum() - 0.5) < tol and abs(s.ramp_d.sum() - 0.5) < tol


def test_default_weights():
    assert default_weights(6, 4) == {2: 1.0, 4: 0.1}
    assert default_weights(8, 6) == {2: 1.0, 4: 100.0, 6: 1.0}
    assert default_weights(14, 6) == {2: 1.0, 4: 500.0, 6: 1.0}


def test_lm_step_limits(rng):
    J = rng.normal(size=(6, 3))
    y = rng.normal(size=6)
    w = np.ones(6)
    assert not np.any(lm_step(J, np.zeros(6), w, 1e-3)[0])
    h, _ = lm_step(J, y, w, 0.0)
    assert np.allclose(h, np.linalg.lstsq(J, -y, rcond=None)[0])
    lam = 1e8
    h, _ = lm_step(J, y, w, lam, max_damping=1e9)
    g = J.T @ y
    H = J.T @ J
    assert np.allclose(h, -g / (lam * np.diag(H)), rtol=1e-6)


def test_lm_step_frozen_hessian(rng):
    J = rng.normal(size=(5, 2))
    y = rng.normal(size=5)
    H = np.diag([3.0, 7.0])
    h, _ = lm_step(J, y, np.ones(5), 0.5, frozen_hessian=H)
    assert np.allclose((H + 0.5 * np.diag(np.diag(H))) @ h, -J.T @ y)


def test_lm_on_rosenbrock():
    def fun(p):
        y = np.array([10 * (p[1] - p[0] ** 2), 1 - p[0]])
        J = np.array([[-20 * p[0], 10.0], [-1.0, 0.0]])
        return y, J

    res = levenberg_marquardt(fun, np.array([-1.2, 1.0]), np.ones(2), LMConfig())
    assert np.allclose(res.p, [1, 1], atol=1e-10)
    assert res.history == sorted(res.history, reverse=True)


def test_config_validation():
    with pytest.raises(DomainError):
        LMConfig(weights={2: -1.0})
    with pytest.raises(DomainError):
        LMConfig(init_sigma=5.0)
    assert LMConfig().with_sigma(5.0).init_sigma == 5.0


def test_run_freezes_once():
    run = OptimizationRun(4, 4)
    run.freeze(np.eye(2))
    with pytest.raises(OptimizationError):
        run.freeze(np.eye(2))
    with pytest.raises(ValueError):
        run.frozen_hessian[0, 0] = 2.0


def test_invalid_cycles():
    with pytest.raises(DomainError):
        two_phase(2, 6, np.zeros(1))


def test_leapfrog_is_forced():
    c = optimize_scheme(1, 2)
    assert np.allclose(c.scheme.stage_a, [0.5, 0.5]) and np.allclose(c.scheme.stage_b, [1.0])


def test_q2_matches_grid_oracle():
    (lam, err), = oracles.q2_outer_parameter_scan()
    cat = multistart(2, 2, LMConfig(n_starts=30))
    assert len(cat) == 1
    assert abs(cat.best.scheme.ramp_c[0] - lam) < 1e-8
    assert cat.best.err == pytest.approx(err, rel=1e-10)


def test_forest_ruth_pattern():
    cat = multistart(3, 4, LMConfig(n_starts=30))
    c1 = 1 / (2 * (2 - 2 ** (1 / 3)))
    _, dist = cat.nearest([c1, 0.5 - 2 * c1, c1])
    assert dist < 1e-12


def test_candidates_satisfy_constraints():
    cat = multistart(4, 4, LMConfig(n_starts=20))
    for c in cat.candidates:
        co = compute_error_coefficients(c.scheme)
        assert abs(co.nu - 1) < 1e-14 and abs(co.sigma - 1) < 1e-14
        assert max(abs(co.alpha), abs(co.beta)) < 1e-13
        assert c.scheme.real_only


def test_multistart_is_deterministic():
    a = multistart(4, 4, LMConfig(n_starts=8, rng_seed=3))
    b = multistart(4, 4, LMConfig(n_starts=8, rng_seed=3))
    assert [c.scheme for c in a.candidates] == [c.scheme for c in b.candidates]
    assert a.failures == b.failures


def test_initial_points_differ_per_start():
    cfg = LMConfig()
    param = Parameterization(6)
    assert not np.allclose(initial_point(6, cfg, 0, param), initial_point(6, cfg, 1, param))


def test_catalog_labels_and_dedup():
    cat = multistart(4, 4, LMConfig(n_starts=20))
    assert cat.candidates[0].label == "global"
    assert all(c.label == "local" for c in cat.candidates[1:])
    effs = [c.eff for c in cat.candidates]
    assert effs == sorted(effs, reverse=True)
    merged = deduplicate(cat.candidates + cat.candidates, 1e-8)
    assert len(merged) == len(cat)
    assert sum(c.multiplicity for c in merged) == 2 * len(cat)


def test_empty_catalog():
    with pytest.raises(OptimizationError):
        Catalog(4, 4, [], 0, {}).best


def test_complex_mode_returns_consistent_scheme():
    cfg = LMConfig(real_only=False, n_starts=6)
    cat = multistart(2, 2, cfg)
    assert len(cat) >= 1
    for c in cat.candidates:
        co = compute_error_coefficients(c.scheme)
        assert abs(co.nu - 1) < 1e-13 and abs(co.sigma - 1) < 1e-13


def test_penalized_r0_returns_seed():
    seed = get_builtin("paper-n4-q6")
    c = optimize_penalized(6, 4, 0.0, seed)
    assert np.max(np.abs(c.scheme.ramp_c - seed.ramp_c)) < 1e-10


def test_penalized_xbar_decreases():
    seed = get_builtin("paper-n4-q6")
    xs = [optimize_penalized(6, 4, r, seed).xbar for r in (1e-5, 1e-4, 1e-3, 1e-2)]
    assert all(b <= a + 1e-12 for a, b in zip(xs, xs[1:]))
    assert xs[-1] < seed_xbar(seed)


def seed_xbar(s):
    from trotterkit.error_functions import origin_distance

    return origin_distance(s)


def test_penalized_r1_edge():
    cat = multistart(4, 4, LMConfig(n_starts=20))
    seed = cat.best.scheme
    c = optimize_penalized(4, 4, 1.0, seed)
    assert c.xbar <= seed_xbar(seed)
    assert c.constraint_residual < 1e-13


def test_penalized_rejects_complex():
    with pytest.raises(ConfigurationError):
        optimize_penalized(6, 4, 0.1, get_builtin("paper-n4-q6"), LMConfig(real_only=False))


def test_impose_constraints_polishes_truncated_digits():
    s = get_builtin("paper-n4-q6")
    rounded = type(s).from_ramp(np.round(s.ramp_c, 8))
    fixed = impose_constraints(rounded, 4)
    co = compute_error_coefficients(fixed)
    assert max(abs(co.alpha), abs(co.beta)) < 1e-13
    assert np.max(np.abs(fixed.ramp_c - s.ramp_c)) < 1e-7
