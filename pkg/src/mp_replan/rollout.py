"""Segment-based rollout collection with a configurable planning horizon.

Every k env steps the policy samples a new movement-parameter vector, the
generator turns it into a desired trajectory seeded at the measured joint
state, and a PD controller tracks it.  k = 1 recovers step-based control,
k = T the black-box (episodic) regime where the policy sees only the context.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .basis import DmpConfig, MpBasisSet, precompute_basis_set
from .controller import PdGains, pd_action
from .dmp import integrate as dmp_integrate
from .policy import GaussianPolicy
from .prodmp import evaluate as prodmp_evaluate
from .promp import promp_evaluate
from .segments import segment_reward
from .trajectory import InitialCondition

MP_TYPES = ("promp", "dmp", "prodmp")


@dataclass(frozen=True)
class RolloutConfig:
    """Planning horizon, episode length and discounting for segment collection."""

    horizon_k: int
    episode_len: int
    gamma: float = 0.99
    gae_lambda: float = 0.95
    segments_per_batch: int = 100
    black_box: bool = False

    def __post_init__(self):
        if not 1 <= self.horizon_k <= self.episode_len:
            raise ValueError(
                f"horizon_k must lie in [1, {self.episode_len}], got {self.horizon_k}")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must lie in (0, 1]")
        if not 0.0 <= self.gae_lambda <= 1.0:
            raise ValueError("gae_lambda must lie in [0, 1]")
        if self.black_box and self.horizon_k != self.episode_len:
            raise ValueError("black-box mode requires horizon_k == episode_len")


class MpStack:
    """Movement-primitive generator bundle used by the collector.

    Maps a flat parameter vector to per-DoF desired positions/velocities at
    the requested times, seeded at the measured state for the dynamic types.
    """

    def __init__(self, mp_type: str, cfg: DmpConfig, num_dof: int,
                 grid_len: int | None = None, basis: MpBasisSet | None = None,
                 dmp_oversample: int = 10, control_dt: float | None = None):
        if mp_type not in MP_TYPES:
            raise ValueError(f"mp_type must be one of {MP_TYPES}")
        if mp_type == "promp" and cfg.num_basis < 1:
            raise ValueError("promp requires at least one basis function")
        self.mp_type = mp_type
        self.cfg = cfg
        self.num_dof = num_dof
        self.dmp_oversample = dmp_oversample
        self._stride = None
        if mp_type == "prodmp":
            self.basis = basis if basis is not None else precompute_basis_set(
                cfg, grid_len if grid_len is not None else 1001)
            if control_dt is not None:
                stride = control_dt / self.basis.grid_step
                if abs(stride - round(stride)) < 1e-9:
                    self._stride = int(round(stride))
        else:
            self.basis = basis

    @property
    def weight_dim(self) -> int:
        per_dof = self.cfg.num_basis if self.mp_type == "promp" else self.cfg.num_basis + 1
        return self.num_dof * per_dof

    def desired_aligned(self, step_index: int, horizon: int, q, qd, flat_weights):
        """Grid-aligned closed-form evaluation, entirely from the cached tables.

        Returns desired (pos, vel) at the control steps step_index ..
        step_index + horizon inclusive.  Requires construction with a
        control_dt that divides the grid.
        """
        basis = self.basis
        stride = self._stride
        w = np.asarray(flat_weights, dtype=float).reshape(self.num_dof, -1)
        i0 = step_index * stride
        idx = i0 + stride * np.arange(horizon + 1)
        y1b, y2b = basis.y1[i0], basis.y2[i0]
        dy1b, dy2b = basis.dy1[i0], basis.dy2[i0]
        wronskian = y1b * dy2b - y2b * dy1b
        phi = w @ basis.pos_basis[i0]
        dphi = w @ basis.vel_basis[i0]
        c1 = ((dy2b * q - y2b * qd) + (y2b * dphi - dy2b * phi)) / wronskian
        c2 = ((y1b * qd - dy1b * q) + (dy1b * phi - y1b * dphi)) / wronskian
        pos = (np.outer(basis.y1[idx], c1) + np.outer(basis.y2[idx], c2)
               + basis.pos_basis[idx] @ w.T)
        vel = (np.outer(basis.dy1[idx], c1) + np.outer(basis.dy2[idx], c2)
               + basis.vel_basis[idx] @ w.T)
        return pos, vel

    def supports_aligned(self, episode_len: int) -> bool:
        return (self._stride is not None
                and episode_len * self._stride <= len(self.basis.time_grid) - 1)

    def desired(self, t_b: float, q, qd, flat_weights, times):
        """Desired (pos, vel) arrays of shape (len(times), num_dof)."""
        w = np.asarray(flat_weights, dtype=float).reshape(self.num_dof, -1)
        if self.mp_type == "promp":
            traj = promp_evaluate(w, times, self.cfg.phase)
        elif self.mp_type == "prodmp":
            ic = InitialCondition(t_b, np.asarray(q, float), np.asarray(qd, float))
            traj = prodmp_evaluate(ic, w, self.basis, times)
        else:
            if len(times) < 2:
                raise ValueError("dmp integration needs at least two query times")
            ic = InitialCondition(t_b, np.asarray(q, float), np.asarray(qd, float))
            step = float(times[1] - times[0])
            sub = self.dmp_oversample
            fine = dmp_integrate(ic, w, self.cfg, step / sub, (len(times) - 1) * sub)
            idx = np.arange(len(times)) * sub
            return fine.pos[idx], fine.vel[idx]
        return traj.pos, traj.vel


@dataclass
class EpisodeResult:
    states: np.ndarray
    weights: np.ndarray
    seg_rewards: np.ndarray
    horizons: np.ndarray
    next_states: np.ndarray
    dones: np.ndarray
    old_log_probs: np.ndarray
    old_means: np.ndarray
    total_reward: float
    success: bool
    final_distance: float
    energy: float
    boundary_pos_jump: float
    boundary_vel_jump: float
    trace: dict | None = None


@dataclass
class SegmentBatch:
    """Stacked temporally-abstracted samples (state, weights, segment reward)."""

    states: np.ndarray
    weights: np.ndarray
    seg_rewards: np.ndarray
    horizons: np.ndarray
    next_states: np.ndarray
    dones: np.ndarray
    old_log_probs: np.ndarray
    old_means: np.ndarray
    old_log_std: np.ndarray
    episode_slices: list = field(default_factory=list)
    episodes: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.states)


def run_episode(policy: GaussianPolicy, env, mp: MpStack, gains: PdGains,
                cfg: RolloutConfig, rng: np.random.Generator,
                deterministic: bool = False, record_trace: bool = False) -> EpisodeResult:
    obs = env.reset(rng)
    T, k, dt = cfg.episode_len, cfg.horizon_k, env.dt
    states, weights, seg_rewards, horizons = [], [], [], []
    next_states, dones, old_logps, old_means = [], [], [], []
    total_reward = 0.0
    jump_pos = 0.0
    jump_vel = 0.0
    trace = {"t": [], "q": [], "qd": [], "a": [], "r": []} if record_trace else None
    info = {}
    aligned = mp.mp_type == "prodmp" and mp.supports_aligned(T)
    t = 0
    while t < T:
        k_t = min(k, T - t)
        s = np.asarray(env.context if cfg.black_box else obs, dtype=float)
        dist = policy.dist(s)
        w = np.asarray(dist.mean, float).copy() if deterministic else dist.sample(rng)
        old_logp = float(dist.log_prob(w))
        q, qd = env.joint_state()
        if aligned:
            pos_d, vel_d = mp.desired_aligned(t, k_t, q, qd, w)
        else:
            times = dt * (t + np.arange(k_t + 1))
            pos_d, vel_d = mp.desired(t * dt, q, qd, w, times)
        jump_pos = max(jump_pos, float(np.max(np.abs(pos_d[0] - q))))
        jump_vel = max(jump_vel, float(np.max(np.abs(vel_d[0] - qd))))
        step_rewards = np.empty(k_t)
        for i in range(k_t):
            mq, mqd = env.joint_state()
            action = pd_action((pos_d[i + 1], vel_d[i + 1]), (mq, mqd), gains,
                               env.action_bound)
            if not np.all(np.isfinite(action)):
                raise FloatingPointError(
                    f"non-finite action at step {t + i}; aborting rollout")
            obs, reward, done, info = env.step(action)
            step_rewards[i] = reward
            if record_trace:
                trace["t"].append((t + i + 1) * dt)
                trace["q"].append(mq)
                trace["qd"].append(mqd)
                trace["a"].append(action)
                trace["r"].append(reward)
        states.append(s)
        weights.append(w)
        seg_rewards.append(segment_reward(step_rewards, cfg.gamma))
        horizons.append(k_t)
        next_states.append(np.asarray(env.context if cfg.black_box else obs, dtype=float))
        dones.append(t + k_t >= T)
        old_logps.append(old_logp)
        old_means.append(np.asarray(dist.mean, dtype=float))
        total_reward += float(step_rewards.sum())
        t += k_t
    if record_trace:
        trace = {key: np.asarray(val) for key, val in trace.items()}
    return EpisodeResult(
        states=np.asarray(states), weights=np.asarray(weights),
        seg_rewards=np.asarray(seg_rewards), horizons=np.asarray(horizons, dtype=int),
        next_states=np.asarray(next_states), dones=np.asarray(dones, dtype=bool),
        old_log_probs=np.asarray(old_logps), old_means=np.asarray(old_means),
        total_reward=total_reward, success=bool(info.get("success", False)),
        final_distance=float(info.get("distance", np.nan)),
        energy=float(info.get("energy_total", np.nan)),
        boundary_pos_jump=jump_pos, boundary_vel_jump=jump_vel, trace=trace)


def collect_segments(policy: GaussianPolicy, env_factory, mp: MpStack,
                     gains: PdGains, cfg: RolloutConfig,
                     seed_seq: np.random.SeedSequence, threads: int = 1,
                     deterministic: bool = False) -> SegmentBatch:
    """Collect whole episodes until segments_per_batch samples are gathered.

    Episodes are independent: each gets its own child seed and env instance,
    so results are bitwise reproducible for a given seed regardless of the
    number of worker threads.
    """
    segs_per_episode = -(-cfg.episode_len // cfg.horizon_k)
    n_episodes = max(1, -(-cfg.segments_per_batch // segs_per_episode))
    children = seed_seq.spawn(n_episodes)

    def job(i):
        env = env_factory()
        rng = np.random.default_rng(children[i])
        return run_episode(policy, env, mp, gains, cfg, rng,
                           deterministic=deterministic)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            episodes = list(pool.map(job, range(n_episodes)))
    else:
        episodes = [job(i) for i in range(n_episodes)]

    slices = []
    offset = 0
    for ep in episodes:
        slices.append((offset, offset + len(ep.states)))
        offset += len(ep.states)
    return SegmentBatch(
        states=np.concatenate([ep.states for ep in episodes]),
        weights=np.concatenate([ep.weights for ep in episodes]),
        seg_rewards=np.concatenate([ep.seg_rewards for ep in episodes]),
        horizons=np.concatenate([ep.horizons for ep in episodes]),
        next_states=np.concatenate([ep.next_states for ep in episodes]),
        dones=np.concatenate([ep.dones for ep in episodes]),
        old_log_probs=np.concatenate([ep.old_log_probs for ep in episodes]),
        old_means=np.concatenate([ep.old_means for ep in episodes]),
        old_log_std=policy.clamped_log_std().copy(),
        episode_slices=slices, episodes=episodes)


class FrameSkip:
    """Repeats each action for a fixed number of env steps.

    The skipped-step rewards are summed with the same discounting as a
    planning segment, but the action itself cannot change within the window;
    this is the step-based contrast to trajectory-level replanning.
    """

    def __init__(self, env, repeat: int, gamma: float = 1.0):
        if repeat < 1:
            raise ValueError(f"repeat must be at least 1, got {repeat}")
        self.env = env
        self.repeat = repeat
        self.gamma = gamma

    @property
    def episode_len(self) -> int:
        return -(-self.env.episode_len // self.repeat)

    def __getattr__(self, name):
        return getattr(self.env, name)

    def reset(self, rng):
        return self.env.reset(rng)

    def step(self, action):
        total = 0.0
        done = False
        obs, info = None, {}
        for i in range(self.repeat):
            obs, reward, done, info = self.env.step(action)
            total += self.gamma**i * reward
            if done:
                break
        return obs, total, done, info


def eval_episodes(policy: GaussianPolicy, env_factory, mp: MpStack, gains: PdGains,
                  cfg: RolloutConfig, seed: int, episodes: int,
                  deterministic: bool = True, record_traces: bool = False):
    """Run evaluation episodes; returns a list of EpisodeResult."""
    seed_seq = np.random.SeedSequence(seed)
    children = seed_seq.spawn(episodes)
    results = []
    for i in range(episodes):
        env = env_factory()
        rng = np.random.default_rng(children[i])
        results.append(run_episode(policy, env, mp, gains, cfg, rng,
                                   deterministic=deterministic,
                                   record_trace=record_traces))
    return results
