"""Per-state projection of diagonal Gaussians onto KL balls around an old policy.

Mean and covariance are projected independently, following the decomposed KL
similarity.  Inside the bounds the layer is the identity; outside it returns
the constrained minimizer:

  mean: the scaled step mu_old + s (mu - mu_old) with s = sqrt(eps / d_mean),
        which is the exact KKT solution of the mean problem.
  cov:  precisions interpolate linearly, 1/sig~^2 = u/sig^2 + (1-u)/sig_old^2,
        with the scalar u found by bisection so the covariance KL part hits
        the bound exactly; this path solves the KKT conditions of the
        covariance problem for diagonal Gaussians.

Both maps are smooth where active, and their vector-Jacobian products are
implemented analytically so policy gradients can flow through the layer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gaussian import DiagGaussian

_BISECT_ITERS = 80


@dataclass(frozen=True)
class TrustRegionBounds:
    """Per-state KL budgets for the mean and covariance parts."""

    eps_mean: float = 0.005
    eps_cov: float = 0.0005

    def __post_init__(self):
        if not (self.eps_mean > 0 and self.eps_cov > 0):
            raise ValueError("trust region bounds must be positive")


def mean_kl_part(mean, mean_old, std_old) -> np.ndarray:
    """Mean similarity 0.5 (mu - mu_old)^T Sigma_old^-1 (mu - mu_old)."""
    delta = (np.asarray(mean, float) - mean_old) / std_old
    return 0.5 * (delta * delta).sum(axis=-1)


def cov_kl_part(log_std, log_std_old) -> np.ndarray:
    """Covariance KL part 0.5 sum (r - log r - 1) with r the variance ratio."""
    ratio = np.exp(2.0 * (np.asarray(log_std, float) - log_std_old))
    return 0.5 * (ratio - np.log(ratio) - 1.0).sum(axis=-1)


def project_mean(mean, mean_old, std_old, eps_mean: float):
    """Project the mean onto the KL-mean ball; identity inside.

    Returns (projected mean, per-row scale s) with s = 1 on inactive rows.
    """
    mean = np.atleast_2d(np.asarray(mean, float))
    mean_old = np.broadcast_to(np.asarray(mean_old, float), mean.shape)
    std_old = np.broadcast_to(np.asarray(std_old, float), mean.shape)
    if np.any(std_old <= 0):
        raise ValueError("std_old must be positive")
    d = mean_kl_part(mean, mean_old, std_old)
    active = d > eps_mean
    scale = np.where(active, np.sqrt(eps_mean / np.maximum(d, 1e-300)), 1.0)
    projected = np.where(active[:, None],
                         mean_old + scale[:, None] * (mean - mean_old), mean)
    return projected, scale


def project_mean_backward(grad_out, mean, mean_old, std_old, scale):
    """VJP of project_mean w.r.t. the unprojected mean."""
    grad_out = np.atleast_2d(np.asarray(grad_out, float))
    mean = np.atleast_2d(np.asarray(mean, float))
    mean_old = np.broadcast_to(np.asarray(mean_old, float), mean.shape)
    std_old = np.broadcast_to(np.asarray(std_old, float), mean.shape)
    active = scale < 1.0
    delta = mean - mean_old
    d = mean_kl_part(mean, mean_old, std_old)
    inner = (grad_out * delta).sum(axis=-1)
    correction = (scale / (2.0 * np.maximum(d, 1e-300)))[:, None] * inner[:, None] \
        * (delta / std_old**2)
    grad = scale[:, None] * grad_out - correction
    return np.where(active[:, None], grad, grad_out)


def _cov_interpolate(u, prec, prec_old):
    return u[:, None] * prec + (1.0 - u[:, None]) * prec_old


def _cov_part_from_prec(prec_tilde, prec_old):
    ratio = prec_old / prec_tilde
    return 0.5 * (ratio - np.log(ratio) - 1.0).sum(axis=-1)


def project_cov(log_std, log_std_old, eps_cov: float):
    """Project per-dimension log stds onto the covariance KL ball; identity inside.

    Returns (projected log_std, per-row interpolation parameter u) with u = 1
    on inactive rows.
    """
    log_std = np.atleast_2d(np.asarray(log_std, float))
    log_std_old = np.broadcast_to(np.asarray(log_std_old, float), log_std.shape)
    d = cov_kl_part(log_std, log_std_old)
    active = d > eps_cov
    u = np.ones(len(log_std))
    if np.any(active):
        prec = np.exp(-2.0 * log_std[active])
        prec_old = np.exp(-2.0 * log_std_old[active])
        lo = np.zeros(len(prec))
        hi = np.ones(len(prec))
        for _ in range(_BISECT_ITERS):
            mid = 0.5 * (lo + hi)
            too_far = _cov_part_from_prec(_cov_interpolate(mid, prec, prec_old),
                                          prec_old) > eps_cov
            hi = np.where(too_far, mid, hi)
            lo = np.where(too_far, lo, mid)
        u_active = 0.5 * (lo + hi)
        projected_active = -0.5 * np.log(_cov_interpolate(u_active, prec, prec_old))
        projected = log_std.copy()
        projected[active] = projected_active
        u[active] = u_active
    else:
        projected = log_std
    return projected, u


def project_cov_backward(grad_out, log_std, log_std_old, u):
    """VJP of project_cov w.r.t. the unprojected log_std (implicit in u)."""
    grad_out = np.atleast_2d(np.asarray(grad_out, float))
    log_std = np.atleast_2d(np.asarray(log_std, float))
    log_std_old = np.broadcast_to(np.asarray(log_std_old, float), log_std.shape)
    active = u < 1.0
    if not np.any(active):
        return grad_out
    prec = np.exp(-2.0 * log_std[active])
    prec_old = np.exp(-2.0 * log_std_old[active])
    ua = u[active][:, None]
    prec_tilde = ua * prec + (1.0 - ua) * prec_old
    # d(cov part)/d(prec_tilde) per dimension
    dd_dpt = 0.5 * (prec_tilde - prec_old) / prec_tilde**2
    dg_du = (dd_dpt * (prec - prec_old)).sum(axis=-1, keepdims=True)
    du_dprec = -(dd_dpt * ua) / dg_du
    g_pt = grad_out[active] * (-0.5 / prec_tilde)
    inner = (g_pt * (prec - prec_old)).sum(axis=-1, keepdims=True)
    g_prec = ua * g_pt + inner * du_dprec
    g_log_std_active = -2.0 * prec * g_prec
    grad = grad_out.copy()
    grad[active] = g_log_std_active
    return grad


def project_policy(new: DiagGaussian, old: DiagGaussian, bounds: TrustRegionBounds):
    """Project a batch of Gaussians onto per-state trust regions around `old`.

    Returns (projected distribution, cache for the backward pass).  Rows
    already inside both bounds pass through bitwise unchanged.
    """
    mean = np.atleast_2d(new.mean)
    shape = np.broadcast_shapes(mean.shape, new.log_std.shape,
                                np.atleast_2d(old.mean).shape, old.log_std.shape)
    mean = np.broadcast_to(mean, shape)
    log_std = np.broadcast_to(new.log_std, shape)
    mean_old = np.broadcast_to(np.atleast_2d(old.mean), shape)
    log_std_old = np.broadcast_to(old.log_std, shape)
    std_old = np.exp(log_std_old)
    proj_mean, scale = project_mean(mean, mean_old, std_old, bounds.eps_mean)
    proj_log_std, u = project_cov(log_std, log_std_old, bounds.eps_cov)
    squeeze = np.asarray(new.mean).ndim == 1
    cache = dict(mean=mean, mean_old=mean_old, std_old=std_old, scale=scale,
                 log_std=log_std, log_std_old=log_std_old, u=u, squeeze=squeeze)
    if squeeze:
        return DiagGaussian(proj_mean[0], proj_log_std[0]), cache
    return DiagGaussian(proj_mean, proj_log_std), cache


def project_policy_backward(cache, grad_mean, grad_log_std):
    """Propagate gradients from the projected parameters to the unprojected ones."""
    grad_mean = np.atleast_2d(np.asarray(grad_mean, float))
    grad_log_std = np.atleast_2d(np.asarray(grad_log_std, float))
    g_mean = project_mean_backward(grad_mean, cache["mean"], cache["mean_old"],
                                   cache["std_old"], cache["scale"])
    g_log_std = project_cov_backward(grad_log_std, cache["log_std"],
                                     cache["log_std_old"], cache["u"])
    if cache["squeeze"]:
        return g_mean[0], g_log_std[0]
    return g_mean, g_log_std


def trust_region_regression_loss(proj: DiagGaussian, unproj: DiagGaussian):
    """KL(unproj || proj) per row plus its gradients w.r.t. the unprojected
    mean and log_std; the projected target is treated as constant."""
    mean_p = np.atleast_2d(unproj.mean)
    shape = np.broadcast_shapes(mean_p.shape, unproj.log_std.shape,
                                np.atleast_2d(proj.mean).shape, proj.log_std.shape)
    mean_p = np.broadcast_to(mean_p, shape)
    log_std_p = np.broadcast_to(unproj.log_std, shape)
    mean_q = np.broadcast_to(np.atleast_2d(proj.mean), shape)
    log_std_q = np.broadcast_to(proj.log_std, shape)
    var_q = np.exp(2.0 * log_std_q)
    ratio = np.exp(2.0 * (log_std_p - log_std_q))
    kl = ((log_std_q - log_std_p) + (np.exp(2.0 * log_std_p)
          + (mean_p - mean_q) ** 2) / (2.0 * var_q) - 0.5).sum(axis=-1)
    grad_mean = (mean_p - mean_q) / var_q
    grad_log_std = ratio - 1.0
    if np.asarray(unproj.mean).ndim == 1:
        return float(kl[0]), grad_mean[0], grad_log_std[0]
    return kl, grad_mean, grad_log_std
