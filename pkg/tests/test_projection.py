import numpy as np
import pytest

from mp_replan import (DiagGaussian, TrustRegionBounds, kl_parts,
                       project_cov, project_mean, project_policy,
                       project_policy_backward, trust_region_regression_loss)
from mp_replan.projection import cov_kl_part, mean_kl_part


def random_pairs(rng, n, dim, mean_spread=0.8, ls_spread=0.4):
    mean_old = rng.standard_normal((n, dim))
    log_std_old = rng.uniform(-1.0, 0.5, (n, dim))
    mean_new = mean_old + mean_spread * rng.standard_normal((n, dim))
    log_std_new = log_std_old + ls_spread * rng.standard_normal((n, dim))
    return mean_new, log_std_new, mean_old, log_std_old


def test_mean_identity_inside_bound():
    mean_old = np.zeros((1, 3))
    mean = np.array([[0.01, 0.0, -0.01]])
    projected, scale = project_mean(mean, mean_old, np.ones((1, 3)), 0.5)
    np.testing.assert_array_equal(projected, mean)
    assert scale[0] == 1.0


def test_mean_projection_worked_example():
    # mu_old = 0, sigma_old = 1, mu = (2, 0), eps = 0.5: d = 2, scale = 1/2
    projected, _ = project_mean(np.array([[2.0, 0.0]]), np.zeros((1, 2)),
                                np.ones((1, 2)), 0.5)
    np.testing.assert_allclose(projected, [[1.0, 0.0]], atol=1e-12)
    d = mean_kl_part(projected, np.zeros((1, 2)), np.ones((1, 2)))
    assert d[0] == pytest.approx(0.5, rel=1e-12)


def test_mean_projection_of_old_mean_is_identity():
    mean_old = np.random.default_rng(0).standard_normal((4, 5))
    projected, scale = project_mean(mean_old, mean_old, np.ones((4, 5)), 1e-4)
    np.testing.assert_array_equal(projected, mean_old)
    assert np.all(scale == 1.0)


def test_mean_projection_rejects_bad_sigma():
    with pytest.raises(ValueError):
        project_mean(np.ones((1, 2)), np.zeros((1, 2)), np.zeros((1, 2)), 0.1)


def test_cov_identity_when_equal():
    log_std = np.random.default_rng(1).uniform(-1, 1, (3, 4))
    projected, u = project_cov(log_std, log_std, 1e-3)
    np.testing.assert_array_equal(projected, log_std)
    assert np.all(u == 1.0)


def test_cov_projection_1d_hits_bound():
    eps = 1e-3
    projected, _ = project_cov(np.array([[np.log(2.0)]]), np.zeros((1, 1)), eps)
    sigma = float(np.exp(projected[0, 0]))
    assert 1.0 < sigma < 2.0
    d = cov_kl_part(projected, np.zeros((1, 1)))
    assert abs(d[0] - eps) < 1e-8


def test_cov_projection_monotone_in_eps():
    log_std = np.array([[0.8, -0.6, 0.2]])
    log_std_old = np.zeros((1, 3))
    previous_gap = None
    for eps in (1e-4, 1e-3, 1e-2, 1e-1):
        projected, _ = project_cov(log_std, log_std_old, eps)
        gap = np.abs(projected - log_std)
        if previous_gap is not None:
            assert np.all(gap <= previous_gap + 1e-12)
        previous_gap = gap


def test_projection_bound_satisfaction_sweep():
    rng = np.random.default_rng(2)
    bounds = TrustRegionBounds(0.005, 0.0005)
    mean, log_std, mean_old, log_std_old = random_pairs(rng, 1000, 6)
    proj, _ = project_policy(DiagGaussian(mean, log_std),
                             DiagGaussian(mean_old, log_std_old), bounds)
    d_mean = mean_kl_part(proj.mean, mean_old, np.exp(log_std_old))
    d_cov = cov_kl_part(proj.log_std, log_std_old)
    assert np.all(d_mean <= bounds.eps_mean * (1 + 1e-9))
    assert np.all(d_cov <= bounds.eps_cov * (1 + 1e-9))


def test_projection_total_kl_within_combined_budget():
    rng = np.random.default_rng(3)
    bounds = TrustRegionBounds(0.01, 0.001)
    mean, log_std, mean_old, log_std_old = random_pairs(rng, 1000, 5)
    proj, _ = project_policy(DiagGaussian(mean, log_std),
                             DiagGaussian(mean_old, log_std_old), bounds)
    mean_part, cov_part = kl_parts(proj, DiagGaussian(mean_old, log_std_old))
    assert np.all(mean_part + cov_part <= bounds.eps_mean + bounds.eps_cov + 1e-6)


def test_projection_identity_inside_is_bitwise():
    rng = np.random.default_rng(4)
    bounds = TrustRegionBounds(0.05, 0.005)
    mean_old = rng.standard_normal((20, 4))
    log_std_old = rng.uniform(-1, 0, (20, 4))
    mean = mean_old + 1e-3 * rng.standard_normal((20, 4))
    log_std = log_std_old + 1e-4 * rng.standard_normal((20, 4))
    proj, cache = project_policy(DiagGaussian(mean, log_std),
                                 DiagGaussian(mean_old, log_std_old), bounds)
    np.testing.assert_array_equal(proj.mean, mean)
    np.testing.assert_array_equal(proj.log_std, log_std)
    g_mean, g_ls = project_policy_backward(cache, np.ones((20, 4)), np.ones((20, 4)))
    np.testing.assert_array_equal(g_mean, np.ones((20, 4)))
    np.testing.assert_array_equal(g_ls, np.ones((20, 4)))


def test_projection_idempotent():
    rng = np.random.default_rng(5)
    bounds = TrustRegionBounds(0.005, 0.0005)
    mean, log_std, mean_old, log_std_old = random_pairs(rng, 200, 5)
    old = DiagGaussian(mean_old, log_std_old)
    once, _ = project_policy(DiagGaussian(mean, log_std), old, bounds)
    twice, _ = project_policy(once, old, bounds)
    assert np.max(np.abs(twice.mean - once.mean)) < 1e-10
    assert np.max(np.abs(twice.log_std - once.log_std)) < 1e-10


def _constrained_minimum(scipy_optimize, objective, constraint, starts):
    best = None
    for x0 in starts:
        res = scipy_optimize.minimize(
            objective, x0=x0, method="SLSQP",
            constraints=[{"type": "ineq", "fun": constraint}],
            options={"maxiter": 500, "ftol": 1e-14})
        if res.success and constraint(res.x) > -1e-10:
            if best is None or res.fun < best.fun:
                best = res
    assert best is not None, "constrained optimizer failed on all starts"
    return best.x


def test_projection_matches_scipy_constrained_optimizer():
    scipy_optimize = pytest.importorskip("scipy.optimize")
    rng = np.random.default_rng(6)
    bounds = TrustRegionBounds(0.01, 0.001)
    dim = 4
    mean, log_std, mean_old, log_std_old = random_pairs(rng, 25, dim,
                                                        mean_spread=1.5,
                                                        ls_spread=0.8)
    proj, _ = project_policy(DiagGaussian(mean, log_std),
                             DiagGaussian(mean_old, log_std_old), bounds)
    for i in range(len(mean)):
        std_old_i = np.exp(log_std_old[i])

        def mean_objective(m):
            return float(mean_kl_part(m[None], mean[i][None], std_old_i[None])[0])

        def mean_constraint(m):
            return bounds.eps_mean - float(
                mean_kl_part(m[None], mean_old[i][None], std_old_i[None])[0])

        starts = [mean_old[i], 0.9 * mean_old[i] + 0.1 * mean[i],
                  mean_old[i] + 1e-3 * rng.standard_normal(dim)]
        solution = _constrained_minimum(scipy_optimize, mean_objective,
                                        mean_constraint, starts)
        assert np.max(np.abs(solution - proj.mean[i])) < 1e-6

        def cov_objective(ls):
            return float(cov_kl_part(ls[None], log_std[i][None])[0])

        def cov_constraint(ls):
            return bounds.eps_cov - float(cov_kl_part(ls[None], log_std_old[i][None])[0])

        starts = [log_std_old[i], 0.9 * log_std_old[i] + 0.1 * log_std[i],
                  log_std_old[i] + 1e-3 * rng.standard_normal(dim)]
        solution = _constrained_minimum(scipy_optimize, cov_objective,
                                        cov_constraint, starts)
        assert np.max(np.abs(solution - proj.log_std[i])) < 1e-6


def test_projection_gradients_match_finite_differences():
    rng = np.random.default_rng(7)
    bounds = TrustRegionBounds(0.01, 0.001)
    dim = 5
    mean_old = rng.standard_normal(dim)
    log_std_old = rng.uniform(-0.5, 0.5, dim)
    mean = mean_old + 1.2 * rng.standard_normal(dim)
    log_std = log_std_old + 0.7 * rng.standard_normal(dim)
    g_mean = rng.standard_normal(dim)
    g_ls = rng.standard_normal(dim)
    old = DiagGaussian(mean_old[None], log_std_old[None])

    def scalar(m, ls):
        proj, _ = project_policy(DiagGaussian(m[None], ls[None]), old, bounds)
        return float(np.sum(g_mean * proj.mean[0]) + np.sum(g_ls * proj.log_std[0]))

    _, cache = project_policy(DiagGaussian(mean[None], log_std[None]), old, bounds)
    an_mean, an_ls = project_policy_backward(cache, g_mean[None], g_ls[None])
    h = 1e-6
    fd_mean = np.empty(dim)
    fd_ls = np.empty(dim)
    for j in range(dim):
        e = np.zeros(dim); e[j] = h
        fd_mean[j] = (scalar(mean + e, log_std) - scalar(mean - e, log_std)) / (2 * h)
        fd_ls[j] = (scalar(mean, log_std + e) - scalar(mean, log_std - e)) / (2 * h)
    scale_m = max(np.max(np.abs(fd_mean)), 1e-8)
    scale_l = max(np.max(np.abs(fd_ls)), 1e-8)
    assert np.max(np.abs(an_mean[0] - fd_mean)) / scale_m < 1e-4
    assert np.max(np.abs(an_ls[0] - fd_ls)) / scale_l < 1e-4


def test_regression_loss_zero_at_equality():
    rng = np.random.default_rng(8)
    dist = DiagGaussian(rng.standard_normal((6, 3)), rng.uniform(-1, 1, (6, 3)))
    kl, g_mean, g_ls = trust_region_regression_loss(dist, dist)
    np.testing.assert_allclose(kl, 0.0, atol=1e-14)
    np.testing.assert_allclose(g_mean, 0.0, atol=1e-14)
    np.testing.assert_allclose(g_ls, 0.0, atol=1e-14)


def test_regression_loss_nonnegative():
    rng = np.random.default_rng(9)
    proj = DiagGaussian(rng.standard_normal((100, 4)), rng.uniform(-1, 1, (100, 4)))
    unproj = DiagGaussian(rng.standard_normal((100, 4)), rng.uniform(-1, 1, (100, 4)))
    kl, _, _ = trust_region_regression_loss(proj, unproj)
    assert np.all(kl >= 0.0)


def test_regression_loss_gradients_match_finite_differences():
    rng = np.random.default_rng(10)
    dim = 4
    proj = DiagGaussian(rng.standard_normal(dim), rng.uniform(-0.5, 0.5, dim))
    mean = rng.standard_normal(dim)
    log_std = rng.uniform(-0.5, 0.5, dim)
    _, g_mean, g_ls = trust_region_regression_loss(
        proj, DiagGaussian(mean, log_std))
    h = 1e-6
    for j in range(dim):
        e = np.zeros(dim); e[j] = h
        hi, _, _ = trust_region_regression_loss(proj, DiagGaussian(mean + e, log_std))
        lo, _, _ = trust_region_regression_loss(proj, DiagGaussian(mean - e, log_std))
        assert g_mean[j] == pytest.approx((hi - lo) / (2 * h), rel=1e-5, abs=1e-8)
        hi, _, _ = trust_region_regression_loss(proj, DiagGaussian(mean, log_std + e))
        lo, _, _ = trust_region_regression_loss(proj, DiagGaussian(mean, log_std - e))
        assert g_ls[j] == pytest.approx((hi - lo) / (2 * h), rel=1e-5, abs=1e-8)


def test_bounds_validation():
    with pytest.raises(ValueError):
        TrustRegionBounds(0.0, 0.1)
    with pytest.raises(ValueError):
        TrustRegionBounds(0.1, -1.0)
