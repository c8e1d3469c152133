import numpy as np
import pytest

from mp_replan import episode_return, gae_advantages, segment_reward


def test_segment_reward_single_step():
    for r in (-3.0, 0.0, 2.5):
        assert segment_reward([r], 0.9) == r


def test_segment_reward_undiscounted_sum():
    assert segment_reward([1.0, 2.0, 3.0], 1.0) == 6.0


def test_segment_reward_discounted():
    assert segment_reward([1.0, 1.0], 0.5) == 1.5


def test_segment_reward_empty_rejected():
    with pytest.raises(ValueError):
        segment_reward([], 0.9)


def test_episode_return_black_box_case():
    # k = T: the single segment reward equals the episode return
    rng = np.random.default_rng(0)
    rewards = rng.standard_normal(100)
    gamma = 0.97
    total = segment_reward(rewards, gamma)
    assert episode_return([total], [100], gamma) == pytest.approx(total)
    direct = float(np.sum(gamma ** np.arange(100) * rewards))
    assert total == pytest.approx(direct, abs=1e-12)


def test_episode_return_step_case():
    rng = np.random.default_rng(1)
    rewards = rng.standard_normal(50)
    gamma = 0.9
    segments = [segment_reward([r], gamma) for r in rewards]
    composed = episode_return(segments, np.ones(50, dtype=int), gamma)
    direct = float(np.sum(gamma ** np.arange(50) * rewards))
    assert composed == pytest.approx(direct, abs=1e-12)


@pytest.mark.parametrize("episode_len", [100, 97])
@pytest.mark.parametrize("k", [1, 2, 5, 10, 25, 50, 100])
def test_episode_return_identity_brute_force(episode_len, k):
    rng = np.random.default_rng(episode_len * 1000 + k)
    gamma = 0.99
    rewards = rng.standard_normal(episode_len)
    seg_rewards, horizons = [], []
    for start in range(0, episode_len, k):
        chunk = rewards[start:start + k]
        seg_rewards.append(segment_reward(chunk, gamma))
        horizons.append(len(chunk))
    composed = episode_return(seg_rewards, horizons, gamma)
    direct = float(np.sum(gamma ** np.arange(episode_len) * rewards))
    assert abs(composed - direct) < 1e-12


def test_episode_return_rejects_gaps():
    with pytest.raises(ValueError):
        episode_return([1.0, 2.0], [10, 10], 0.9, starts=[0, 11])
    with pytest.raises(ValueError):
        episode_return([1.0, 2.0], [10, 10], 0.9, starts=[0, 9])
    episode_return([1.0, 2.0], [10, 10], 0.9, starts=[0, 10])


def test_gae_monte_carlo_limit():
    # lambda = 1, gamma_eff = 1: advantage is the future-sum minus the value
    rng = np.random.default_rng(2)
    rewards = rng.standard_normal(8)
    values = rng.standard_normal(9)
    values[-1] = 0.0
    adv, targets = gae_advantages(rewards, values, 1.0, 1.0)
    future = np.cumsum(rewards[::-1])[::-1]
    np.testing.assert_allclose(adv, future - values[:-1], atol=1e-12)
    np.testing.assert_allclose(targets, future, atol=1e-12)


def test_gae_one_step_td_limit():
    rng = np.random.default_rng(3)
    rewards = rng.standard_normal(6)
    values = rng.standard_normal(7)
    gamma_eff = 0.95
    adv, _ = gae_advantages(rewards, values, gamma_eff, 0.0)
    expected = rewards + gamma_eff * values[1:] - values[:-1]
    np.testing.assert_allclose(adv, expected, atol=1e-12)


def test_gae_matches_direct_sum():
    rng = np.random.default_rng(4)
    n = 12
    rewards = rng.standard_normal(n)
    values = rng.standard_normal(n + 1)
    gammas = np.full(n, 0.9)
    lam = 0.8
    adv, _ = gae_advantages(rewards, values, gammas, lam)
    deltas = rewards + gammas * values[1:] - values[:-1]
    for t in range(n):
        expected = sum((0.9 * lam) ** i * deltas[t + i] for i in range(n - t))
        assert adv[t] == pytest.approx(expected, abs=1e-12)


def test_gae_length_mismatch():
    with pytest.raises(ValueError):
        gae_advantages(np.zeros(5), np.zeros(5), 0.99, 0.95)
