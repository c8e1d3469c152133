"""Standalone oracle suites: closed form vs integration, projection vs numeric
optimization, analytic gradients vs finite differences, return identities."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import DmpConfig, precompute_basis_set
from .dmp import integrate
from .gaussian import DiagGaussian
from .nets import Mlp, MlpSpec
from .phase import PhaseConfig
from .prodmp import evaluate as prodmp_evaluate
from .projection import (TrustRegionBounds, cov_kl_part, mean_kl_part,
                         project_policy, project_policy_backward)
from .segments import episode_return, gae_advantages, segment_reward

SUITES = ("mp_oracle", "projection", "gradients", "returns")


@dataclass
class SuiteResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{self.name}: {status} ({self.detail})"


# -- numeric constrained-minimization oracles (Lagrangian dual bisection) ----

def numeric_mean_projection(mean, mean_old, std_old, eps_mean, iters=200):
    """Solve the mean trust-region problem through its KKT conditions.

    The stationary point for multiplier lam is (mu + lam mu_old) / (1 + lam);
    lam >= 0 is bisected until the constraint holds with equality.
    """
    d = float(mean_kl_part(mean[None], mean_old[None], std_old[None])[0])
    if d <= eps_mean:
        return mean.copy()
    lo, hi = 0.0, 1.0
    def constraint(lam):
        candidate = (mean + lam * mean_old) / (1.0 + lam)
        return float(mean_kl_part(candidate[None], mean_old[None], std_old[None])[0])
    while constraint(hi) > eps_mean:
        hi *= 2.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if constraint(mid) > eps_mean:
            lo = mid
        else:
            hi = mid
    lam = 0.5 * (lo + hi)
    return (mean + lam * mean_old) / (1.0 + lam)


def numeric_cov_projection(log_std, log_std_old, eps_cov, iters=200):
    """Solve the covariance trust-region problem through its KKT conditions.

    Stationarity makes the precisions interpolate: p~ = (p + lam p_old) /
    (1 + lam); lam >= 0 is bisected until the bound holds with equality.
    """
    d = float(cov_kl_part(log_std[None], log_std_old[None])[0])
    if d <= eps_cov:
        return log_std.copy()
    prec = np.exp(-2.0 * log_std)
    prec_old = np.exp(-2.0 * log_std_old)
    def constraint(lam):
        p_tilde = (prec + lam * prec_old) / (1.0 + lam)
        candidate = -0.5 * np.log(p_tilde)
        return float(cov_kl_part(candidate[None], log_std_old[None])[0])
    lo, hi = 0.0, 1.0
    while constraint(hi) > eps_cov:
        hi *= 2.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if constraint(mid) > eps_cov:
            lo = mid
        else:
            hi = mid
    lam = 0.5 * (lo + hi)
    return -0.5 * np.log((prec + lam * prec_old) / (1.0 + lam))


# -- suites -------------------------------------------------------------------

def suite_mp_oracle(grid_len: int = 1000, instances: int = 100,
                    num_dof: int = 5, seed: int = 0) -> SuiteResult:
    """Closed-form rollout vs RK4 integration on random weight vectors.

    Instances are stacked as independent DoF channels so the whole comparison
    runs in a handful of vectorized calls.
    """
    rng = np.random.default_rng(seed)
    cfg = DmpConfig(alpha=25.0, num_basis=10, phase=PhaseConfig(alpha_x=3.0, tau=1.0))
    basis = precompute_basis_set(cfg, grid_len)
    channels = instances * num_dof
    weights = rng.standard_normal((channels, cfg.num_basis + 1))
    from .trajectory import InitialCondition
    ic = InitialCondition(0.0, rng.standard_normal(channels),
                          rng.standard_normal(channels))
    closed = prodmp_evaluate(ic, weights, basis, basis.time_grid)
    oversample = 10
    dt = cfg.tau / ((grid_len - 1) * oversample)
    reference = integrate(ic, weights, cfg, dt, (grid_len - 1) * oversample)
    pos_err = float(np.max(np.abs(closed.pos - reference.pos[::oversample])))
    vel_err = float(np.max(np.abs(closed.vel - reference.vel[::oversample])))
    passed = pos_err < 1e-3 and vel_err < 1e-2
    return SuiteResult("mp_oracle", passed,
                       f"max pos err {pos_err:.3e} (tol 1e-3), "
                       f"max vel err {vel_err:.3e} (tol 1e-2), grid_len {grid_len}")


def suite_projection(pairs: int = 1000, dim: int = 8, seed: int = 0) -> SuiteResult:
    rng = np.random.default_rng(seed)
    bounds = TrustRegionBounds(0.005, 0.0005)
    mean_old = rng.standard_normal((pairs, dim))
    log_std_old = rng.uniform(-1.0, 0.5, size=(pairs, dim))
    mean_new = mean_old + 0.5 * rng.standard_normal((pairs, dim))
    log_std_new = log_std_old + 0.3 * rng.standard_normal((pairs, dim))
    proj, _ = project_policy(DiagGaussian(mean_new, log_std_new),
                             DiagGaussian(mean_old, log_std_old), bounds)
    d_mean = mean_kl_part(proj.mean, mean_old, np.exp(log_std_old))
    d_cov = cov_kl_part(proj.log_std, log_std_old)
    bound_err = max(float((d_mean - bounds.eps_mean).max()),
                    float((d_cov - bounds.eps_cov).max()))
    bound_ok = np.all(d_mean <= bounds.eps_mean * (1 + 1e-9) + 1e-15) and \
        np.all(d_cov <= bounds.eps_cov * (1 + 1e-9) + 1e-15)

    oracle_err = 0.0
    for i in range(pairs):
        ref_mean = numeric_mean_projection(mean_new[i], mean_old[i],
                                           np.exp(log_std_old[i]), bounds.eps_mean)
        ref_ls = numeric_cov_projection(log_std_new[i], log_std_old[i], bounds.eps_cov)
        oracle_err = max(oracle_err,
                         float(np.max(np.abs(ref_mean - proj.mean[i]))),
                         float(np.max(np.abs(ref_ls - proj.log_std[i]))))

    inside_mean = mean_old[:8] + 1e-4 * rng.standard_normal((8, dim))
    inside_ls = log_std_old[:8] + 1e-5 * rng.standard_normal((8, dim))
    proj_in, _ = project_policy(DiagGaussian(inside_mean, inside_ls),
                                DiagGaussian(mean_old[:8], log_std_old[:8]), bounds)
    identity_ok = np.array_equal(proj_in.mean, inside_mean) and \
        np.array_equal(proj_in.log_std, inside_ls)

    passed = bool(bound_ok and identity_ok and oracle_err < 1e-6)
    return SuiteResult("projection", passed,
                       f"bound overshoot {bound_err:.2e}, oracle err {oracle_err:.2e} "
                       f"(tol 1e-6), identity inside {identity_ok}")


def _relative_error(approx, exact):
    scale = max(float(np.max(np.abs(exact))), 1e-8)
    return float(np.max(np.abs(approx - exact))) / scale


def suite_gradients(seed: int = 0, h: float = 1e-5) -> SuiteResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    shapes = [MlpSpec(4, (8,), 3, "tanh"), MlpSpec(5, (8, 8), 4, "relu"),
              MlpSpec(3, (16, 16), 2, "tanh"), MlpSpec(6, (), 2, "tanh")]
    for spec in shapes:
        net = Mlp(spec, rng)
        x = rng.standard_normal((7, spec.input_dim))
        upstream = rng.standard_normal((7, spec.output_dim))
        out, cache = net.forward_cached(x)
        grads, _ = net.backward(cache, upstream)
        analytic = Mlp.flatten_grads(grads)
        flat = net.get_flat()
        fd = np.empty_like(flat)
        for j in range(flat.size):
            bumped = flat.copy(); bumped[j] += h
            net.set_flat(bumped)
            hi = float(np.sum(upstream * net.forward(x)))
            bumped[j] -= 2 * h
            net.set_flat(bumped)
            lo = float(np.sum(upstream * net.forward(x)))
            fd[j] = (hi - lo) / (2 * h)
        net.set_flat(flat)
        worst = max(worst, _relative_error(analytic, fd))

    # projection VJP vs finite differences on an active pair
    dim = 5
    bounds = TrustRegionBounds(0.01, 0.001)
    mean_old = rng.standard_normal(dim)
    ls_old = rng.uniform(-0.5, 0.5, dim)
    mean = mean_old + 1.5 * rng.standard_normal(dim)
    ls = ls_old + 0.8 * rng.standard_normal(dim)
    g_mean = rng.standard_normal(dim)
    g_ls = rng.standard_normal(dim)

    def proj_scalar(m, l):
        proj, _ = project_policy(DiagGaussian(m[None], l[None]),
                                 DiagGaussian(mean_old[None], ls_old[None]), bounds)
        return float(np.sum(g_mean * proj.mean[0]) + np.sum(g_ls * proj.log_std[0]))

    _, cache = project_policy(DiagGaussian(mean[None], ls[None]),
                              DiagGaussian(mean_old[None], ls_old[None]), bounds)
    an_mean, an_ls = project_policy_backward(cache, g_mean[None], g_ls[None])
    fd_mean = np.empty(dim)
    fd_ls = np.empty(dim)
    for j in range(dim):
        dm = np.zeros(dim); dm[j] = h
        fd_mean[j] = (proj_scalar(mean + dm, ls) - proj_scalar(mean - dm, ls)) / (2 * h)
        fd_ls[j] = (proj_scalar(mean, ls + dm) - proj_scalar(mean, ls - dm)) / (2 * h)
    worst = max(worst, _relative_error(an_mean[0], fd_mean),
                _relative_error(an_ls[0], fd_ls))

    # log-density gradient w.r.t. the mean
    dist = DiagGaussian(rng.standard_normal(dim), rng.uniform(-0.5, 0.5, dim))
    x = rng.standard_normal(dim)
    analytic_lp = (x - dist.mean) / dist.std**2
    fd_lp = np.empty(dim)
    for j in range(dim):
        dm = np.zeros(dim); dm[j] = h
        fd_lp[j] = (DiagGaussian(dist.mean + dm, dist.log_std).log_prob(x)
                    - DiagGaussian(dist.mean - dm, dist.log_std).log_prob(x)) / (2 * h)
    worst = max(worst, _relative_error(analytic_lp, fd_lp))

    passed = worst < 1e-4
    return SuiteResult("gradients", passed, f"max rel err {worst:.3e} (tol 1e-4)")


def suite_returns(seed: int = 0) -> SuiteResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for episode_len in (100, 97):
        for k in (1, 2, 5, 10, 25, 50, 100):
            k_eff = min(k, episode_len)
            for gamma in (1.0, 0.99, 0.9):
                rewards = rng.standard_normal(episode_len)
                seg_rewards, horizons = [], []
                for start in range(0, episode_len, k_eff):
                    chunk = rewards[start:start + k_eff]
                    seg_rewards.append(segment_reward(chunk, gamma))
                    horizons.append(len(chunk))
                composed = episode_return(seg_rewards, horizons, gamma)
                direct = float(np.sum(gamma ** np.arange(episode_len) * rewards))
                worst = max(worst, abs(composed - direct))

    # GAE vs direct evaluation of the discounted-delta sums
    values = rng.standard_normal(11)
    seg_rewards = rng.standard_normal(10)
    gammas = np.full(10, 0.97)
    lam = 0.9
    adv, targets = gae_advantages(seg_rewards, values, gammas, lam)
    deltas = seg_rewards + gammas * values[1:] - values[:-1]
    for t in range(10):
        total = 0.0
        for i in range(10 - t):
            total += (gammas[0] * lam) ** i * deltas[t + i]
        worst = max(worst, abs(adv[t] - total))
        worst = max(worst, abs(targets[t] - (adv[t] + values[t])))

    passed = worst < 1e-12
    return SuiteResult("returns", passed, f"max abs err {worst:.3e} (tol 1e-12)")


def run_suites(names, grid_len: int = 1000, seed: int = 0) -> list:
    results = []
    for name in names:
        if name == "mp_oracle":
            results.append(suite_mp_oracle(grid_len=grid_len, seed=seed))
        elif name == "projection":
            results.append(suite_projection(seed=seed))
        elif name == "gradients":
            results.append(suite_gradients(seed=seed))
        elif name == "returns":
            results.append(suite_returns(seed=seed))
        else:
            raise ValueError(f"unknown suite {name!r}")
    return results
