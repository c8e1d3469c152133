"""Planar 5-joint kinematic reacher with double-integrator joints.

Deterministic desk-scale stand-in for a physics simulation: joints integrate
commanded accelerations (semi-implicit Euler), the end effector follows from
forward kinematics, and the reward variants reproduce the dense / temporally
sparse / non-Markovian structures plus an optional mid-episode goal switch.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

VARIANTS = ("dense", "sparse", "non_markovian")


@dataclass(frozen=True)
class GoalSwitchConfig:
    """Displace the goal by a random delta after a fraction of the episode."""

    switch_fraction: float = 0.2
    delta_low: float = -0.25
    delta_high: float = 0.2

    def __post_init__(self):
        if not 0.0 < self.switch_fraction < 1.0:
            raise ValueError("switch_fraction must lie in (0, 1)")
        if self.delta_high < self.delta_low:
            raise ValueError("empty delta range")


@dataclass(frozen=True)
class ReacherState:
    joint_pos: np.ndarray
    joint_vel: np.ndarray
    goal: np.ndarray
    step_index: int


class ReacherEnv:
    """5-DoF planar reacher; actions are joint accelerations in rad/s^2.

    Goals are sampled uniformly (radius and angle) in the reachable
    upper-half-plane annulus, so the goal's y coordinate is always >= 0.
    The sparse and non-Markovian variants append the normalized step index
    to the observation.
    """

    num_dof = 5
    link_length = 0.2
    dt = 0.02
    episode_len = 100
    action_bound = 5.0
    goal_radius = (0.35, 0.8)
    success_distance = 0.05

    # sparse-terminal coefficients: goal distance and velocity penalty
    sparse_goal_coeff = 200.0
    sparse_vel_coeff = 10.0
    non_markov_coeff = 200.0

    def __init__(self, variant: str = "dense",
                 goal_switch: GoalSwitchConfig | None = None,
                 episode_len: int | None = None):
        if variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {variant!r}")
        self.variant = variant
        self.goal_switch = goal_switch
        if episode_len is not None:
            if episode_len < 1:
                raise ValueError("episode_len must be positive")
            self.episode_len = int(episode_len)
        self._rng = None
        self._q = np.zeros(self.num_dof)
        self._qd = np.zeros(self.num_dof)
        self._goal = np.zeros(2)
        self._step = 0
        self._min_distance = np.inf
        self._energy_total = 0.0
        self._ee = None

    # -- kinematics ---------------------------------------------------------

    @classmethod
    def forward_kinematics(cls, joint_pos) -> np.ndarray:
        """End-effector position of the cumulative-angle planar chain."""
        angles = np.cumsum(np.asarray(joint_pos, dtype=float))
        return cls.link_length * np.array([np.cos(angles).sum(), np.sin(angles).sum()])

    @classmethod
    def jacobian(cls, joint_pos) -> np.ndarray:
        """Analytic end-effector Jacobian (2 x num_dof)."""
        angles = np.cumsum(np.asarray(joint_pos, dtype=float))
        jac = np.zeros((2, cls.num_dof))
        for j in range(cls.num_dof):
            jac[0, j] = -cls.link_length * np.sin(angles[j:]).sum()
            jac[1, j] = cls.link_length * np.cos(angles[j:]).sum()
        return jac

    # -- env API --------------------------------------------------------------

    @property
    def max_reach(self) -> float:
        return self.link_length * self.num_dof

    @property
    def context(self) -> np.ndarray:
        return self._goal.copy()

    @property
    def state(self) -> ReacherState:
        return ReacherState(self._q.copy(), self._qd.copy(),
                            self._goal.copy(), self._step)

    @property
    def observation_dim(self) -> int:
        return 14 if self.variant == "dense" else 15

    @property
    def context_dim(self) -> int:
        return 2

    def joint_state(self):
        return self._q.copy(), self._qd.copy()

    def distance(self) -> float:
        return float(np.linalg.norm(self.forward_kinematics(self._q) - self._goal))

    def success(self) -> bool:
        """Final-step criterion only; solving the task earlier does not count."""
        if self._step != self.episode_len:
            raise RuntimeError("success is defined at the final step only")
        return self.distance() < self.success_distance

    def _observation(self) -> np.ndarray:
        ee = self._ee if self._ee is not None else self.forward_kinematics(self._q)
        parts = [self._q, self._qd, self._goal - ee, self._goal]
        if self.variant != "dense":
            parts.append(np.array([self._step / self.episode_len]))
        return np.concatenate(parts)

    def reset(self, rng: np.random.Generator) -> np.ndarray:
        self._rng = rng
        self._q = np.zeros(self.num_dof)
        self._qd = np.zeros(self.num_dof)
        radius = rng.uniform(*self.goal_radius)
        angle = rng.uniform(0.0, np.pi)
        self._goal = radius * np.array([np.cos(angle), np.sin(angle)])
        self._step = 0
        self._ee = self.forward_kinematics(self._q)
        self._min_distance = float(np.linalg.norm(self._ee - self._goal))
        self._energy_total = 0.0
        return self._observation()

    def _clip_goal(self, goal: np.ndarray) -> np.ndarray:
        goal = goal.copy()
        goal[1] = max(goal[1], 0.0)
        radius = float(np.linalg.norm(goal))
        lo, hi = self.goal_radius
        if radius < 1e-12:
            return np.array([lo, 0.0])
        if radius > hi:
            goal *= hi / radius
        elif radius < lo:
            goal *= lo / radius
        return goal

    def apply_goal_switch(self, rng: np.random.Generator) -> None:
        """Displace the goal by a random delta, clipped to the reachable region."""
        cfg = self.goal_switch
        delta = rng.uniform(cfg.delta_low, cfg.delta_high, size=2)
        self._goal = self._clip_goal(self._goal + delta)

    def step(self, action):
        if self._step >= self.episode_len:
            raise RuntimeError("episode finished; call reset")
        action = np.asarray(action, dtype=float)
        if action.shape != (self.num_dof,) or not np.isfinite(action).all():
            raise ValueError(f"action must be {self.num_dof} finite accelerations")
        applied = np.minimum(np.maximum(action, -self.action_bound), self.action_bound)
        self._qd = self._qd + applied * self.dt
        self._q = self._q + self._qd * self.dt
        self._step += 1

        control_cost = float(applied @ applied)
        self._energy_total += control_cost
        angles = np.cumsum(self._q)
        self._ee = self.link_length * np.array([np.cos(angles).sum(),
                                                np.sin(angles).sum()])
        dist = float(np.hypot(self._ee[0] - self._goal[0], self._ee[1] - self._goal[1]))
        self._min_distance = min(self._min_distance, dist)
        final = self._step == self.episode_len

        if self.variant == "dense":
            reward = -control_cost - dist
        elif self.variant == "sparse":
            reward = -control_cost
            if final:
                reward -= self.sparse_goal_coeff * dist \
                    + self.sparse_vel_coeff * float(np.sum(self._qd**2))
        else:
            reward = -control_cost
            if final:
                reward -= self.non_markov_coeff * self._min_distance

        if (self.goal_switch is not None and
                self._step == int(self.goal_switch.switch_fraction * self.episode_len)):
            self.apply_goal_switch(self._rng)

        info = {
            "distance": dist,
            "energy": control_cost,
            "energy_total": self._energy_total,
            "min_distance": self._min_distance,
        }
        if final:
            info["success"] = dist < self.success_distance
        return self._observation(), float(reward), final, info


def write_trace_csv(path, times, joint_pos, joint_vel, actions, rewards) -> None:
    """Episode trace as CSV: t, q1..q5, qd1..qd5, a1..a5, r."""
    n_dof = joint_pos.shape[1]
    header = (["t"] + [f"q{i+1}" for i in range(n_dof)]
              + [f"qd{i+1}" for i in range(n_dof)]
              + [f"a{i+1}" for i in range(n_dof)] + ["r"])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(len(times)):
            row = [repr(float(times[i]))]
            row += [repr(float(v)) for v in joint_pos[i]]
            row += [repr(float(v)) for v in joint_vel[i]]
            row += [repr(float(v)) for v in actions[i]]
            row.append(repr(float(rewards[i])))
            writer.writerow(row)


def read_trace_csv(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        n_dof = (len(header) - 2) // 3
        times, q, qd, a, r = [], [], [], [], []
        for row in reader:
            values = [float(v) for v in row]
            times.append(values[0])
            q.append(values[1:1 + n_dof])
            qd.append(values[1 + n_dof:1 + 2 * n_dof])
            a.append(values[1 + 2 * n_dof:1 + 3 * n_dof])
            r.append(values[-1])
    return (np.array(times), np.array(q), np.array(qd), np.array(a), np.array(r))
