import numpy as np
import pytest

from mp_replan import MlpSpec, TrustRegionBounds
from mp_replan.losses import surrogate_loss, value_loss, value_update_grads
from mp_replan.policy import GaussianPolicy, ValueFunction


@pytest.fixture()
def policy():
    return GaussianPolicy(MlpSpec(3, (8,), 2, "tanh"), np.random.default_rng(0),
                          final_scale=0.5)


def make_batch(policy, n=16, seed=1):
    rng = np.random.default_rng(seed)
    obs = rng.standard_normal((n, policy.input_dim))
    dist = policy.dist(obs)
    actions = dist.sample(rng)
    old_logp = dist.log_prob(actions)
    adv = rng.standard_normal(n)
    return obs, actions, adv, old_logp, np.atleast_2d(dist.mean), policy.clamped_log_std()


def test_value_loss_zero_at_equality():
    loss, grad = value_loss(np.array([1.0, 2.0]), np.array([1.0, 2.0]))
    assert loss == 0.0
    np.testing.assert_array_equal(grad, 0.0)


def test_value_loss_values_and_gradient():
    loss, grad = value_loss(np.array([0.0]), np.array([2.0]))
    assert loss == 4.0
    assert grad[0] == pytest.approx(2.0 * (0.0 - 2.0) / 1)
    loss, grad = value_loss(np.zeros(4), np.array([1.0, 2.0, 3.0, 4.0]))
    np.testing.assert_allclose(grad, 2.0 * (np.zeros(4) - np.arange(1.0, 5.0)) / 4)


def test_value_loss_length_mismatch():
    with pytest.raises(ValueError):
        value_loss(np.zeros(3), np.zeros(4))


def test_surrogate_identity_policy_loss_is_minus_mean_advantage(policy):
    obs, actions, adv, old_logp, old_mean, old_ls = make_batch(policy)
    loss, _, stats = surrogate_loss(policy, obs, actions, adv, old_logp,
                                    old_mean, old_ls, "ppo_clip")
    assert loss == pytest.approx(-float(np.mean(adv)), rel=1e-10)
    assert stats["ratio_mean"] == pytest.approx(1.0, rel=1e-12)


def test_surrogate_zero_advantages_zero_gradient(policy):
    obs, actions, adv, old_logp, old_mean, old_ls = make_batch(policy)
    _, grads, _ = surrogate_loss(policy, obs, actions, np.zeros_like(adv),
                                 old_logp, old_mean, old_ls, "ppo_clip")
    np.testing.assert_allclose(grads, 0.0, atol=1e-15)


def test_ppo_clip_contribution_formula():
    # rho = 2, A = 1, eps = 0.2: the clipped branch contributes 1.2
    ratio = 2.0
    adv = 1.0
    eps = 0.2
    contribution = min(ratio * adv, np.clip(ratio, 1 - eps, 1 + eps) * adv)
    assert contribution == pytest.approx(1.2)


def test_surrogate_clip_limits_gradient(policy):
    obs, actions, adv, old_logp, old_mean, old_ls = make_batch(policy)
    # shift old log-probs so every ratio is far above the clip band
    shifted = old_logp - 5.0
    positive = np.abs(adv) + 0.1
    _, grads, stats = surrogate_loss(policy, obs, actions, positive, shifted,
                                     old_mean, old_ls, "ppo_clip", clip_eps=0.2)
    assert stats["clip_fraction"] == 1.0
    np.testing.assert_allclose(grads, 0.0, atol=1e-12)


def test_surrogate_gradient_equals_vanilla_policy_gradient(policy):
    # at new = old the importance-sampling gradient reduces to the likelihood
    # ratio estimator mean(A grad logp), computed here independently
    obs, actions, adv, old_logp, old_mean, old_ls = make_batch(policy, n=32, seed=3)
    _, grads, _ = surrogate_loss(policy, obs, actions, adv, old_logp,
                                 old_mean, old_ls, "ppo_clip")
    mean, cache = policy.mean_net.forward_cached(obs)
    std = np.exp(old_ls)
    z = (actions - mean) / std
    upstream_mean = -(adv[:, None] * z / std) / len(obs)
    upstream_ls = -(adv[:, None] * (z * z - 1.0)) / len(obs)
    vanilla = policy.backward(cache, upstream_mean, upstream_ls.sum(axis=0))
    assert np.max(np.abs(grads - vanilla)) < 1e-10


def test_surrogate_trpl_mode_runs_and_penalizes(policy):
    obs, actions, adv, old_logp, old_mean, old_ls = make_batch(policy, n=8, seed=5)
    bounds = TrustRegionBounds(1e-4, 1e-5)
    # push the policy away from the snapshot so the projection activates
    flat = policy.get_flat()
    policy.set_flat(flat + 0.05)
    loss_tr, grads_tr, _ = surrogate_loss(policy, obs, actions, adv, old_logp,
                                          old_mean, old_ls, "trpl", bounds=bounds,
                                          trust_region_coeff=10.0)
    assert np.isfinite(loss_tr)
    assert np.any(grads_tr != 0.0)
    policy.set_flat(flat)


def test_surrogate_full_gradient_matches_finite_differences(policy):
    # end-to-end check through net, projection and ratio objective
    obs, actions, adv, old_logp, old_mean, old_ls = make_batch(policy, n=6, seed=7)
    bounds = TrustRegionBounds(0.05, 0.005)
    base = policy.get_flat() + 0.03  # make some states project
    h = 1e-6

    for mode in ("ppo_clip", "trpl"):
        policy.set_flat(base)
        _, grads, _ = surrogate_loss(policy, obs, actions, adv, old_logp,
                                     old_mean, old_ls, mode, bounds=bounds,
                                     trust_region_coeff=5.0)
        rng = np.random.default_rng(11)
        for j in rng.choice(policy.num_params, size=25, replace=False):
            bumped = base.copy(); bumped[j] += h
            policy.set_flat(bumped)
            hi, _, _ = surrogate_loss(policy, obs, actions, adv, old_logp,
                                      old_mean, old_ls, mode, bounds=bounds,
                                      trust_region_coeff=5.0)
            bumped[j] -= 2 * h
            policy.set_flat(bumped)
            lo, _, _ = surrogate_loss(policy, obs, actions, adv, old_logp,
                                      old_mean, old_ls, mode, bounds=bounds,
                                      trust_region_coeff=5.0)
            fd = (hi - lo) / (2 * h)
            assert grads[j] == pytest.approx(fd, rel=2e-4, abs=2e-7), (mode, j)
        policy.set_flat(base - 0.03)


def test_surrogate_rejects_nan_ratio(policy):
    obs, actions, adv, old_logp, old_mean, old_ls = make_batch(policy)
    with pytest.raises(FloatingPointError):
        surrogate_loss(policy, obs, actions, adv, old_logp - np.inf,
                       old_mean, old_ls, "ppo_clip")


def test_surrogate_unknown_mode(policy):
    obs, actions, adv, old_logp, old_mean, old_ls = make_batch(policy)
    with pytest.raises(ValueError):
        surrogate_loss(policy, obs, actions, adv, old_logp, old_mean, old_ls,
                       "natural")


def test_value_update_reduces_loss():
    rng = np.random.default_rng(13)
    vf = ValueFunction(MlpSpec(3, (8,), 1, "tanh"), rng)
    obs = rng.standard_normal((32, 3))
    targets = rng.standard_normal(32)
    loss0, grads = value_update_grads(vf, obs, targets)
    vf.set_flat(vf.get_flat() - 0.05 * grads)
    loss1, _ = value_update_grads(vf, obs, targets)
    assert loss1 < loss0
