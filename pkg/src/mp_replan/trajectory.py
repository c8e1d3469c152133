"""Weight vectors, initial conditions and desired trajectories."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class WeightVector:
    """Per-DoF movement parameters: shape weights followed by the goal.

    Stored as a (dof, num_basis + 1) matrix; the last column is the goal
    attractor of each DoF.
    """

    per_dof: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.per_dof, dtype=float)
        if arr.ndim != 2 or arr.shape[1] < 1:
            raise ValueError("per_dof must be a (dof, num_basis + 1) matrix")
        if not np.all(np.isfinite(arr)):
            raise ValueError("weight entries must be finite")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "per_dof", arr)

    @property
    def num_dof(self) -> int:
        return self.per_dof.shape[0]

    @property
    def num_basis(self) -> int:
        return self.per_dof.shape[1] - 1

    @property
    def goals(self) -> np.ndarray:
        return self.per_dof[:, -1]

    @classmethod
    def from_flat(cls, flat, num_dof: int) -> "WeightVector":
        flat = np.asarray(flat, dtype=float)
        if flat.size % num_dof != 0:
            raise ValueError(f"cannot split {flat.size} weights across {num_dof} DoFs")
        return cls(flat.reshape(num_dof, -1))

    def to_flat(self) -> np.ndarray:
        return self.per_dof.reshape(-1).copy()


def weight_matrix(weights) -> np.ndarray:
    """Coerce a WeightVector or array-like to a read-only (dof, cols) matrix."""
    arr = getattr(weights, "per_dof", weights)
    arr = np.asarray(arr, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise ValueError("weights must be a vector or a (dof, cols) matrix")
    if not np.all(np.isfinite(arr)):
        raise ValueError("weight entries must be finite")
    return arr


@dataclass(frozen=True)
class InitialCondition:
    """State (position, velocity per DoF) the trajectory must pass through at t_b."""

    t_b: float
    y_b: np.ndarray
    dy_b: np.ndarray

    def __post_init__(self):
        y = np.atleast_1d(np.asarray(self.y_b, dtype=float))
        dy = np.atleast_1d(np.asarray(self.dy_b, dtype=float))
        if y.shape != dy.shape or y.ndim != 1:
            raise ValueError("y_b and dy_b must be 1-D arrays of equal length")
        if not (np.isfinite(self.t_b) and self.t_b >= 0):
            raise ValueError(f"t_b must be finite and nonnegative, got {self.t_b}")
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(dy))):
            raise ValueError("initial state must be finite")
        y = y.copy(); y.setflags(write=False)
        dy = dy.copy(); dy.setflags(write=False)
        object.__setattr__(self, "t_b", float(self.t_b))
        object.__setattr__(self, "y_b", y)
        object.__setattr__(self, "dy_b", dy)

    @property
    def num_dof(self) -> int:
        return len(self.y_b)


@dataclass(frozen=True)
class DesiredTrajectory:
    """Time-indexed desired positions and velocities, one column per DoF."""

    times: np.ndarray
    pos: np.ndarray
    vel: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        pos = np.asarray(self.pos, dtype=float)
        vel = np.asarray(self.vel, dtype=float)
        if pos.ndim == 1:
            pos = pos[:, None]
        if vel.ndim == 1:
            vel = vel[:, None]
        if not (len(t) == len(pos) == len(vel)) or pos.shape != vel.shape:
            raise ValueError("times, pos and vel must have matching lengths")
        if len(t) > 1 and np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        if not (np.all(np.isfinite(pos)) and np.all(np.isfinite(vel))):
            raise ValueError("trajectory values must be finite")
        for arr in (t, pos, vel):
            arr.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "pos", pos)
        object.__setattr__(self, "vel", vel)

    @property
    def num_dof(self) -> int:
        return self.pos.shape[1]

    def __len__(self) -> int:
        return len(self.times)


def write_trajectory_csv(traj: DesiredTrajectory, path) -> None:
    """Export as CSV with columns t, dof, pos, vel (one row per time and DoF)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "dof", "pos", "vel"])
        for i, t in enumerate(traj.times):
            for d in range(traj.num_dof):
                writer.writerow([repr(float(t)), d,
                                 repr(float(traj.pos[i, d])), repr(float(traj.vel[i, d]))])


def read_trajectory_csv(path) -> DesiredTrajectory:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["t", "dof", "pos", "vel"]:
            raise ValueError(f"unexpected trajectory CSV header: {header}")
        for row in reader:
            rows.append((float(row[0]), int(row[1]), float(row[2]), float(row[3])))
    if not rows:
        raise ValueError(f"empty trajectory file: {path}")
    times = sorted({r[0] for r in rows})
    dofs = 1 + max(r[1] for r in rows)
    index = {t: i for i, t in enumerate(times)}
    pos = np.zeros((len(times), dofs))
    vel = np.zeros((len(times), dofs))
    for t, d, p, v in rows:
        pos[index[t], d] = p
        vel[index[t], d] = v
    return DesiredTrajectory(times=np.array(times), pos=pos, vel=vel)
