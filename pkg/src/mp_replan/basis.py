"""Spring-damper complementary functions and precomputed trajectory bases.

The critically damped second-order system behind the closed-form primitive is

    y'' + (alpha/tau) y' + (alpha*beta/tau^2) y = F(x, g)

whose homogeneous solutions y1, y2 and particular-solution integrals p1, p2,
q1, q2 combine into position and velocity basis rows.  The p-integrals mix the
phase-driven forcing bundle and have no closed form, so they are accumulated
by trapezoidal quadrature on a uniform time grid and cached in `MpBasisSet`.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .phase import PhaseConfig, phase

_HEADER = struct.Struct("<4d2q")


@dataclass(frozen=True)
class DmpConfig:
    """Spring constant, damper constant and forcing basis count.

    beta defaults to alpha / 4, which makes the system critically damped.
    num_basis = 0 disables the shape weights and keeps only the goal
    attractor, so each DoF is parameterized by a single value.
    """

    alpha: float = 25.0
    num_basis: int = 5
    phase: PhaseConfig = field(default_factory=PhaseConfig)
    beta: float | None = None

    def __post_init__(self):
        if not (self.alpha > 0 and np.isfinite(self.alpha)):
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if self.beta is None:
            object.__setattr__(self, "beta", self.alpha / 4.0)
        if not (self.beta > 0 and np.isfinite(self.beta)):
            raise ValueError(f"beta must be positive, got {self.beta}")
        if int(self.num_basis) != self.num_basis or self.num_basis < 0:
            raise ValueError(f"num_basis must be a nonnegative integer, got {self.num_basis}")

    @property
    def tau(self) -> float:
        return self.phase.tau


def rbf_centers(num_basis: int, phase_cfg: PhaseConfig):
    """Gaussian centers equally spaced in phase on [x(tau), 1], plus the shared bandwidth."""
    x_min = float(np.exp(-phase_cfg.alpha_x))
    if num_basis == 0:
        return np.empty(0), 1.0
    if num_basis == 1:
        return np.array([0.5 * (x_min + 1.0)]), 0.5 * (1.0 - x_min) ** 2
    centers = np.linspace(x_min, 1.0, num_basis)
    spacing = float(centers[1] - centers[0])
    return centers, 0.5 * spacing**2


def rbf_basis(x, cfg: DmpConfig):
    """Normalized Gaussian bundle over the phase; entries are >= 0 and sum to 1.

    The extra factor x of the forcing term is applied by the consumer, not here.
    """
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr <= 0) or np.any(x_arr > 1):
        raise ValueError("rbf_basis requires phase values in (0, 1]")
    if cfg.num_basis == 0:
        return np.zeros(x_arr.shape + (0,))
    centers, bandwidth = rbf_centers(cfg.num_basis, cfg.phase)
    values = np.exp(-((x_arr[..., None] - centers) ** 2) / (2.0 * bandwidth))
    values /= values.sum(axis=-1, keepdims=True)
    return values


def complementary(t, cfg: DmpConfig):
    """Homogeneous solutions of the critically damped system and their rates.

    y1 = exp(-a t), y2 = t y1 with a = alpha / (2 tau); returns (y1, y2, dy1, dy2).
    """
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise ValueError("complementary functions are only defined for t >= 0")
    a = cfg.alpha / (2.0 * cfg.tau)
    y1 = np.exp(-a * t_arr)
    y2 = t_arr * y1
    dy1 = -a * y1
    dy2 = (1.0 - a * t_arr) * y1
    return y1, y2, dy1, dy2


def q1q2(t, cfg: DmpConfig):
    """Closed-form goal-term integrals q1, q2; both vanish at t = 0."""
    t_arr = np.asarray(t, dtype=float)
    a = cfg.alpha / (2.0 * cfg.tau)
    e = np.exp(a * t_arr)
    q1 = (a * t_arr - 1.0) * e + 1.0
    q2 = a * (e - 1.0)
    return q1, q2


@dataclass(frozen=True)
class MpBasisSet:
    """Precomputed phase grid, complementary-function tables and basis matrices.

    pos_basis columns are [y2*p2 - y1*p1 | y2*q2 - y1*q1]; vel_basis is the
    same assembly with dy1, dy2.  Rows at t = 0 are exactly zero.  Immutable
    once built; all arrays are read-only views.
    """

    cfg: DmpConfig
    time_grid: np.ndarray
    y1: np.ndarray
    y2: np.ndarray
    dy1: np.ndarray
    dy2: np.ndarray
    q1: np.ndarray
    q2: np.ndarray
    p1: np.ndarray
    p2: np.ndarray
    pos_basis: np.ndarray
    vel_basis: np.ndarray

    @property
    def grid_len(self) -> int:
        return len(self.time_grid)

    @property
    def grid_step(self) -> float:
        return float(self.time_grid[1] - self.time_grid[0])


def _cumtrapz(values: np.ndarray, dt: float) -> np.ndarray:
    out = np.zeros_like(values)
    out[1:] = np.cumsum(0.5 * dt * (values[1:] + values[:-1]), axis=0)
    return out


def precompute_basis_set(cfg: DmpConfig, grid_len: int) -> MpBasisSet:
    """Build the shared basis tables on a uniform grid over [0, tau].

    p1 and p2 are accumulated by trapezoidal quadrature of their integrands;
    a finer grid only improves accuracy.
    """
    if grid_len < 2:
        raise ValueError(f"grid_len must be at least 2, got {grid_len}")
    tau = cfg.tau
    grid = np.linspace(0.0, tau, grid_len)
    dt = float(grid[1] - grid[0])
    y1, y2, dy1, dy2 = complementary(grid, cfg)
    q1, q2 = q1q2(grid, cfg)

    a = cfg.alpha / (2.0 * tau)
    x = phase(grid, cfg.phase)
    grow = np.exp(a * grid)
    if cfg.num_basis > 0:
        forcing = (x * grow)[:, None] * rbf_basis(x, cfg) / tau**2
        p1 = _cumtrapz(grid[:, None] * forcing, dt)
        p2 = _cumtrapz(forcing, dt)
    else:
        p1 = np.zeros((grid_len, 0))
        p2 = np.zeros((grid_len, 0))

    pos_w = y2[:, None] * p2 - y1[:, None] * p1
    vel_w = dy2[:, None] * p2 - dy1[:, None] * p1
    pos_g = y2 * q2 - y1 * q1
    vel_g = dy2 * q2 - dy1 * q1
    pos_basis = np.column_stack([pos_w, pos_g])
    vel_basis = np.column_stack([vel_w, vel_g])

    arrays = dict(
        time_grid=grid, y1=y1, y2=y2, dy1=dy1, dy2=dy2, q1=q1, q2=q2,
        p1=p1, p2=p2, pos_basis=pos_basis, vel_basis=vel_basis,
    )
    for arr in arrays.values():
        arr.setflags(write=False)
    return MpBasisSet(cfg=cfg, **arrays)


def basis_rows(basis: MpBasisSet, times) -> tuple[np.ndarray, np.ndarray]:
    """Position and velocity basis rows at arbitrary times.

    Rollout steps align with the grid by construction; linear interpolation
    only serves queries that fall between grid points.  Times outside the
    precomputed range raise.
    """
    t = np.atleast_1d(np.asarray(times, dtype=float))
    grid = basis.time_grid
    lo, hi = float(grid[0]), float(grid[-1])
    tol = 1e-9 * max(hi - lo, 1.0)
    if np.any(t < lo - tol) or np.any(t > hi + tol):
        raise ValueError(
            f"query times must lie within the precomputed grid [{lo}, {hi}]"
        )
    t = np.clip(t, lo, hi)
    idx = np.searchsorted(grid, t, side="right") - 1
    idx = np.clip(idx, 0, len(grid) - 2)
    frac = ((t - grid[idx]) / (grid[idx + 1] - grid[idx]))[:, None]
    pos = (1.0 - frac) * basis.pos_basis[idx] + frac * basis.pos_basis[idx + 1]
    vel = (1.0 - frac) * basis.vel_basis[idx] + frac * basis.vel_basis[idx + 1]
    return pos, vel


def save_basis_set(basis: MpBasisSet, path) -> None:
    """Serialize to a flat little-endian binary file for reuse across runs."""
    cfg = basis.cfg
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(cfg.alpha, cfg.beta, cfg.phase.alpha_x, cfg.tau,
                              cfg.num_basis, basis.grid_len))
        for name in ("time_grid", "y1", "y2", "dy1", "dy2", "q1", "q2",
                     "p1", "p2", "pos_basis", "vel_basis"):
            arr = getattr(basis, name)
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_basis_set(path) -> MpBasisSet:
    with open(path, "rb") as fh:
        header = fh.read(_HEADER.size)
        if len(header) != _HEADER.size:
            raise ValueError(f"truncated basis-set file: {path}")
        alpha, beta, alpha_x, tau, num_basis, grid_len = _HEADER.unpack(header)
        num_basis, grid_len = int(num_basis), int(grid_len)
        cfg = DmpConfig(alpha=alpha, beta=beta, num_basis=num_basis,
                        phase=PhaseConfig(alpha_x=alpha_x, tau=tau))
        shapes = dict(
            time_grid=(grid_len,), y1=(grid_len,), y2=(grid_len,),
            dy1=(grid_len,), dy2=(grid_len,), q1=(grid_len,), q2=(grid_len,),
            p1=(grid_len, num_basis), p2=(grid_len, num_basis),
            pos_basis=(grid_len, num_basis + 1), vel_basis=(grid_len, num_basis + 1),
        )
        arrays = {}
        for name, shape in shapes.items():
            count = int(np.prod(shape))
            data = np.frombuffer(fh.read(count * 8), dtype="<f8", count=count)
            arr = data.reshape(shape).copy()
            arr.setflags(write=False)
            arrays[name] = arr
    return MpBasisSet(cfg=cfg, **arrays)
