"""Training loop: collect segments, estimate advantages, update policy and value.

Seeding is arranged so that every randomized stage derives from (seed, stage,
iteration); resuming from a checkpoint therefore continues exactly the run an
uninterrupted training would have produced.
"""

from __future__ import annotations

import json
import os
import struct
import time
from pathlib import Path

import numpy as np

from .basis import DmpConfig
from .controller import PdGains
from .gaussian import DiagGaussian, kl_diag
from .losses import surrogate_loss, value_update_grads
from .nets import MlpSpec
from .optim import Adam
from .phase import PhaseConfig
from .policy import GaussianPolicy, ValueFunction
from .projection import TrustRegionBounds
from .reacher import GoalSwitchConfig, ReacherEnv
from .rollout import MpStack, RolloutConfig, collect_segments
from .runconfig import RunConfig
from .segments import gae_advantages

_CKPT_MAGIC = b"MPCK"
_CKPT_VERSION = 1
_ACT_CODES = {"tanh": 0, "relu": 1}
_ACT_NAMES = {code: name for name, code in _ACT_CODES.items()}

METRIC_KEYS = ("iter", "env_steps", "mean_return", "success_rate", "kl",
               "entropy", "wall_ms", "mean_final_distance", "mean_energy")


def make_env_factory(cfg: RunConfig):
    switch = None
    if cfg.goal_switch:
        switch = GoalSwitchConfig(cfg.switch_fraction, cfg.switch_delta_low,
                                  cfg.switch_delta_high)
    def factory():
        return ReacherEnv(cfg.env_variant, goal_switch=switch,
                          episode_len=cfg.episode_len)
    return factory


def build_mp_stack(cfg: RunConfig, env) -> MpStack:
    tau = env.episode_len * env.dt
    dmp_cfg = DmpConfig(alpha=cfg.alpha, num_basis=cfg.num_basis,
                        phase=PhaseConfig(alpha_x=cfg.alpha_x, tau=tau))
    grid_len = env.episode_len * cfg.grid_per_step + 1
    return MpStack(cfg.mp_type, dmp_cfg, env.num_dof, grid_len=grid_len,
                   dmp_oversample=cfg.dmp_oversample, control_dt=env.dt)


def build_rollout_config(cfg: RunConfig) -> RolloutConfig:
    return RolloutConfig(horizon_k=cfg.horizon_k, episode_len=cfg.episode_len,
                         gamma=cfg.gamma, gae_lambda=cfg.gae_lambda,
                         segments_per_batch=cfg.segments_per_batch,
                         black_box=cfg.black_box_resolved)


def build_networks(cfg: RunConfig, obs_dim: int, weight_dim: int,
                   num_dof: int | None = None):
    policy_rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 0]))
    value_rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 1]))
    residual_map = None
    if (cfg.residual_goal and num_dof is not None and not cfg.black_box_resolved
            and cfg.mp_type in ("prodmp", "dmp")):
        # zero network output then holds the measured posture: the goal column
        # of each DoF rides on its observed joint position
        residual_map = np.zeros((weight_dim, obs_dim))
        cols = cfg.num_basis + 1
        for d in range(num_dof):
            residual_map[d * cols + cfg.num_basis, d] = 1.0
    policy = GaussianPolicy(MlpSpec(obs_dim, cfg.hidden, weight_dim, cfg.activation),
                            policy_rng, log_std_init=cfg.log_std_init,
                            final_scale=cfg.final_scale, residual_map=residual_map)
    value_fn = ValueFunction(MlpSpec(obs_dim, cfg.hidden, 1, cfg.activation), value_rng)
    return policy, value_fn


def thread_count(cfg: RunConfig) -> int:
    cap = os.environ.get("MP_REPLAN_THREADS")
    threads = cfg.threads
    if cap:
        threads = min(threads, max(1, int(cap)))
    return threads


def compute_advantages(batch, value_fn, gamma: float, lam: float):
    advantages = np.empty(len(batch))
    targets = np.empty(len(batch))
    for start, stop in batch.episode_slices:
        values = value_fn.values(batch.states[start:stop])
        if batch.dones[stop - 1]:
            bootstrap = 0.0
        else:
            bootstrap = float(value_fn.values(batch.next_states[stop - 1][None])[0])
        values = np.append(values, bootstrap)
        gammas = gamma ** batch.horizons[start:stop].astype(float)
        adv, tgt = gae_advantages(batch.seg_rewards[start:stop], values, gammas, lam)
        advantages[start:stop] = adv
        targets[start:stop] = tgt
    return advantages, targets


def save_checkpoint(path, policy: GaussianPolicy, value_fn: ValueFunction,
                    adam_policy: Adam, adam_value: Adam,
                    iteration: int, env_steps: int) -> None:
    path = Path(path)
    pspec = policy.mean_net.spec
    vspec = value_fn.net.spec
    header = [int(_ACT_CODES[pspec.activation]), pspec.input_dim,
              len(pspec.hidden), *pspec.hidden, pspec.output_dim,
              len(vspec.hidden), *vspec.hidden]
    residual = (policy.residual_map if policy.residual_map is not None
                else np.empty(0))
    arrays = [policy.get_flat(), value_fn.get_flat(),
              adam_policy.m, adam_policy.v, adam_value.m, adam_value.v,
              residual.reshape(-1)]
    with open(path, "wb") as fh:
        fh.write(_CKPT_MAGIC)
        fh.write(struct.pack("<q", _CKPT_VERSION))
        fh.write(struct.pack("<q", len(header)))
        fh.write(struct.pack(f"<{len(header)}q", *header))
        fh.write(struct.pack("<7q", *(arr.size for arr in arrays)))
        for arr in arrays:
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    manifest = {
        "iteration": iteration,
        "env_steps": env_steps,
        "policy_spec": {"input_dim": pspec.input_dim, "hidden": list(pspec.hidden),
                        "output_dim": pspec.output_dim, "activation": pspec.activation},
        "value_spec": {"input_dim": vspec.input_dim, "hidden": list(vspec.hidden)},
        "adam": {"policy": {"t": adam_policy.t, "lr": adam_policy.lr},
                 "value": {"t": adam_value.t, "lr": adam_value.lr}},
    }
    with open(str(path) + ".manifest.txt", "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")


def load_checkpoint(path):
    path = Path(path)
    with open(path, "rb") as fh:
        if fh.read(4) != _CKPT_MAGIC:
            raise ValueError(f"not a checkpoint file: {path}")
        (version,) = struct.unpack("<q", fh.read(8))
        if version != _CKPT_VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        (header_len,) = struct.unpack("<q", fh.read(8))
        header = list(struct.unpack(f"<{header_len}q", fh.read(8 * header_len)))
        sizes = struct.unpack("<7q", fh.read(56))
        arrays = []
        for size in sizes:
            data = np.frombuffer(fh.read(8 * size), dtype="<f8", count=size)
            if data.size != size:
                raise ValueError(f"truncated checkpoint file: {path}")
            arrays.append(data.copy())
    manifest_path = str(path) + ".manifest.txt"
    with open(manifest_path) as fh:
        manifest = json.load(fh)

    activation = _ACT_NAMES[header[0]]
    input_dim = header[1]
    n_hidden = header[2]
    hidden = tuple(header[3:3 + n_hidden])
    output_dim = header[3 + n_hidden]
    v_n_hidden = header[4 + n_hidden]
    v_hidden = tuple(header[5 + n_hidden:5 + n_hidden + v_n_hidden])

    rng = np.random.default_rng(0)
    residual_map = None
    if arrays[6].size:
        residual_map = arrays[6].reshape(output_dim, input_dim)
    policy = GaussianPolicy(MlpSpec(input_dim, hidden, output_dim, activation), rng,
                            residual_map=residual_map)
    value_fn = ValueFunction(MlpSpec(input_dim, v_hidden, 1, activation), rng)
    policy.set_flat(arrays[0])
    value_fn.set_flat(arrays[1])
    adam_policy = Adam(policy.num_params, lr=manifest["adam"]["policy"]["lr"])
    adam_policy.load_state_dict({"m": arrays[2], "v": arrays[3],
                                 "t": manifest["adam"]["policy"]["t"],
                                 "lr": manifest["adam"]["policy"]["lr"]})
    adam_value = Adam(value_fn.num_params, lr=manifest["adam"]["value"]["lr"])
    adam_value.load_state_dict({"m": arrays[4], "v": arrays[5],
                                "t": manifest["adam"]["value"]["t"],
                                "lr": manifest["adam"]["value"]["lr"]})
    return {"policy": policy, "value_fn": value_fn, "adam_policy": adam_policy,
            "adam_value": adam_value, "iteration": manifest["iteration"],
            "env_steps": manifest["env_steps"], "manifest": manifest}


def _dump_diagnostics(out_dir: Path, policy, value_fn, batch, message: str) -> Path:
    dump = out_dir / "diagnostic_dump.npz"
    np.savez(dump, policy_params=policy.get_flat(), value_params=value_fn.get_flat(),
             states=batch.states, weights=batch.weights,
             seg_rewards=batch.seg_rewards, message=np.array(message))
    return dump


def train(cfg: RunConfig, out_dir, resume=None, progress=False) -> dict:
    """Run training per the config; writes metrics JSONL and checkpoints.

    Returns a summary with the metric records and final checkpoint path.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ckpt_dir = out / "checkpoints"
    ckpt_dir.mkdir(exist_ok=True)
    from .runconfig import write_resolved
    write_resolved(cfg, out / "config.resolved")

    env_factory = make_env_factory(cfg)
    probe_env = env_factory()
    mp = build_mp_stack(cfg, probe_env)
    rcfg = build_rollout_config(cfg)
    gains = PdGains.uniform(cfg.kp, cfg.kd, probe_env.num_dof)
    obs_dim = probe_env.context_dim if rcfg.black_box else probe_env.observation_dim

    if resume is not None:
        state = load_checkpoint(resume)
        policy, value_fn = state["policy"], state["value_fn"]
        adam_policy, adam_value = state["adam_policy"], state["adam_value"]
        start_iter = state["iteration"]
        env_steps = state["env_steps"]
        metrics_mode = "a"
    else:
        policy, value_fn = build_networks(cfg, obs_dim, mp.weight_dim,
                                          num_dof=probe_env.num_dof)
        adam_policy = Adam(policy.num_params, lr=cfg.lr)
        adam_value = Adam(value_fn.num_params, lr=cfg.value_lr)
        start_iter = 0
        env_steps = 0
        metrics_mode = "w"

    bounds = TrustRegionBounds(cfg.eps_mean, cfg.eps_cov)
    threads = thread_count(cfg)
    metrics_path = out / "metrics.jsonl"
    records = []

    with open(metrics_path, metrics_mode) as metrics_fh:
        for it in range(start_iter, cfg.iterations):
            t_start = time.perf_counter()
            batch = collect_segments(policy, env_factory, mp, gains, rcfg,
                                     np.random.SeedSequence([cfg.seed, 2, it]),
                                     threads=threads)
            env_steps += int(batch.horizons.sum())
            advantages, targets = compute_advantages(batch, value_fn,
                                                     cfg.gamma, cfg.gae_lambda)
            adv_std = advantages.std()
            norm_adv = (advantages - advantages.mean()) / (adv_std + 1e-8)

            shuffle_rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 3, it]))
            n = len(batch)
            try:
                for _ in range(cfg.epochs):
                    perm = shuffle_rng.permutation(n)
                    for lo in range(0, n, cfg.minibatch):
                        idx = perm[lo:lo + cfg.minibatch]
                        loss, grads, _ = surrogate_loss(
                            policy, batch.states[idx], batch.weights[idx],
                            norm_adv[idx], batch.old_log_probs[idx],
                            batch.old_means[idx], batch.old_log_std,
                            cfg.mode, clip_eps=cfg.clip_eps, bounds=bounds,
                            trust_region_coeff=cfg.trust_region_coeff,
                            entropy_coeff=cfg.entropy_coeff)
                        if not np.isfinite(loss):
                            raise FloatingPointError(f"non-finite policy loss {loss}")
                        policy.set_flat(adam_policy.step(policy.get_flat(), grads))
                        v_loss, v_grads = value_update_grads(
                            value_fn, batch.states[idx], targets[idx])
                        if not np.isfinite(v_loss):
                            raise FloatingPointError(f"non-finite value loss {v_loss}")
                        value_fn.set_flat(adam_value.step(value_fn.get_flat(), v_grads))
            except FloatingPointError as exc:
                dump = _dump_diagnostics(out, policy, value_fn, batch, str(exc))
                raise RuntimeError(
                    f"training diverged at iteration {it}: {exc}; state dumped to {dump}"
                ) from exc

            new_dist = policy.dist(batch.states)
            old_dist = DiagGaussian(batch.old_means, batch.old_log_std)
            kl = float(np.mean(kl_diag(new_dist, old_dist)))
            episodes = batch.episodes
            record = {
                "iter": it + 1,
                "env_steps": env_steps,
                "mean_return": float(np.mean([ep.total_reward for ep in episodes])),
                "success_rate": float(np.mean([ep.success for ep in episodes])),
                "kl": kl,
                "entropy": new_dist.entropy(),
                "wall_ms": (time.perf_counter() - t_start) * 1e3,
                "mean_final_distance": float(np.mean([ep.final_distance
                                                      for ep in episodes])),
                "mean_energy": float(np.mean([ep.energy for ep in episodes])),
            }
            records.append(record)
            metrics_fh.write(json.dumps(record) + "\n")
            metrics_fh.flush()
            if progress:
                print(f"iter {record['iter']:4d} steps {env_steps:8d} "
                      f"return {record['mean_return']:10.2f} "
                      f"success {record['success_rate']:.2f}", flush=True)
            if (it + 1) % cfg.checkpoint_every == 0 and (it + 1) < cfg.iterations:
                save_checkpoint(ckpt_dir / f"ckpt_{it + 1:06d}.bin", policy, value_fn,
                                adam_policy, adam_value, it + 1, env_steps)

    final_path = ckpt_dir / f"ckpt_{cfg.iterations:06d}.bin"
    save_checkpoint(final_path, policy, value_fn, adam_policy, adam_value,
                    cfg.iterations, env_steps)
    return {"iterations": cfg.iterations, "env_steps": env_steps,
            "checkpoint": str(final_path), "metrics": records,
            "policy": policy, "value_fn": value_fn}
