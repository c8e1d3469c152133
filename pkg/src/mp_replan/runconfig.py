"""Plain-text run configuration: sectioned key=value files, fully defaulted.

The parser is dependency-free and tracks line numbers so validation errors
can point at the offending line.  Every field has a default except the five
required keys (env.variant, mp.type, mp.num_basis, rollout.horizon_k,
algo.mode); `resolved_lines` emits the complete effective configuration.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

from .reacher import VARIANTS
from .rollout import MP_TYPES


class ConfigError(ValueError):
    def __init__(self, message: str, path=None, line=None):
        location = ""
        if path is not None:
            location = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(location + message)


def _parse_bool(raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("true", "on", "yes", "1"):
        return True
    if lowered in ("false", "off", "no", "0"):
        return False
    raise ValueError(f"expected a boolean, got {raw!r}")


def _parse_hidden(raw: str) -> tuple:
    parts = [p.strip() for p in raw.split(",") if p.strip()]
    dims = tuple(int(p) for p in parts)
    if any(d < 1 for d in dims):
        raise ValueError("hidden layer sizes must be positive")
    return dims


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "on" if value else "off"
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    return str(value)


@dataclass(frozen=True)
class RunConfig:
    # run
    seed: int = 0
    iterations: int = 50
    checkpoint_every: int = 10
    threads: int = 1
    # env
    env_variant: str = "dense"
    episode_len: int = 100
    goal_switch: bool = False
    switch_fraction: float = 0.2
    switch_delta_low: float = -0.25
    switch_delta_high: float = 0.2
    # mp
    mp_type: str = "prodmp"
    num_basis: int = 5
    alpha: float = 25.0
    alpha_x: float = 3.0
    grid_per_step: int = 10
    dmp_oversample: int = 10
    allow_discontinuous: bool = False
    # controller
    kp: float = 100.0
    kd: float = 20.0
    # rollout
    horizon_k: int = 100
    gamma: float = 0.99
    gae_lambda: float = 0.95
    segments_per_batch: int = 100
    black_box: str = "auto"
    # algo
    mode: str = "trpl"
    lr: float = 3e-4
    value_lr: float = 3e-4
    epochs: int = 10
    minibatch: int = 64
    clip_eps: float = 0.2
    eps_mean: float = 0.005
    eps_cov: float = 0.0005
    trust_region_coeff: float = 25.0
    entropy_coeff: float = 0.0
    # policy
    hidden: tuple = (64, 64)
    activation: str = "tanh"
    log_std_init: float = 0.0
    final_scale: float = 0.01
    residual_goal: bool = True

    def __post_init__(self):
        self.validate()

    @property
    def black_box_resolved(self) -> bool:
        if self.black_box == "auto":
            return self.horizon_k == self.episode_len
        return self.black_box == "on"

    def validate(self) -> None:
        if self.env_variant not in VARIANTS:
            raise ConfigError(f"env.variant must be one of {VARIANTS}, got {self.env_variant!r}")
        if self.mp_type not in MP_TYPES:
            raise ConfigError(f"mp.type must be one of {MP_TYPES}, got {self.mp_type!r}")
        if self.mode not in ("ppo_clip", "trpl"):
            raise ConfigError(f"algo.mode must be ppo_clip or trpl, got {self.mode!r}")
        if self.num_basis < 0:
            raise ConfigError("mp.num_basis must be nonnegative")
        if self.mp_type == "promp" and self.num_basis < 1:
            raise ConfigError("mp.type = promp requires mp.num_basis >= 1")
        if self.episode_len < 1:
            raise ConfigError("env.episode_len must be positive")
        if not 1 <= self.horizon_k <= self.episode_len:
            raise ConfigError(
                f"rollout.horizon_k must lie in [1, {self.episode_len}] (episode_len),"
                f" got {self.horizon_k}")
        if (self.mp_type == "promp" and self.horizon_k < self.episode_len
                and not self.allow_discontinuous):
            raise ConfigError(
                "replanning (horizon_k < episode_len) needs mp.type = prodmp for smooth"
                " trajectories; set mp.allow_discontinuous = on to override")
        if self.black_box not in ("auto", "on", "off"):
            raise ConfigError("rollout.black_box must be auto, on or off")
        if self.black_box == "on" and self.horizon_k != self.episode_len:
            raise ConfigError("rollout.black_box = on requires horizon_k == episode_len")
        if not 0.0 < self.gamma <= 1.0:
            raise ConfigError("rollout.gamma must lie in (0, 1]")
        if not 0.0 <= self.gae_lambda <= 1.0:
            raise ConfigError("rollout.gae_lambda must lie in [0, 1]")
        if not 0.0 < self.switch_fraction < 1.0:
            raise ConfigError("env.switch_fraction must lie in (0, 1)")
        if self.switch_delta_high < self.switch_delta_low:
            raise ConfigError("env.switch_delta_high must be >= env.switch_delta_low")
        for name in ("iterations",):
            if getattr(self, name) < 0:
                raise ConfigError(f"run.{name} must be nonnegative")
        for name in ("checkpoint_every", "threads", "segments_per_batch", "epochs",
                     "minibatch", "grid_per_step", "dmp_oversample"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        for name in ("lr", "value_lr"):
            if getattr(self, name) < 0:
                raise ConfigError(f"algo.{name.replace('value_lr', 'value_lr')} must be nonnegative")
        for name in ("alpha", "alpha_x", "eps_mean", "eps_cov"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.kp < 0 or self.kd < 0:
            raise ConfigError("controller gains must be nonnegative")
        if self.activation not in ("tanh", "relu"):
            raise ConfigError("policy.activation must be tanh or relu")


# (section, key) -> (attribute, converter, required)
SCHEMA = {
    ("run", "seed"): ("seed", int, False),
    ("run", "iterations"): ("iterations", int, False),
    ("run", "checkpoint_every"): ("checkpoint_every", int, False),
    ("run", "threads"): ("threads", int, False),
    ("env", "variant"): ("env_variant", str, True),
    ("env", "episode_len"): ("episode_len", int, False),
    ("env", "goal_switch"): ("goal_switch", _parse_bool, False),
    ("env", "switch_fraction"): ("switch_fraction", float, False),
    ("env", "switch_delta_low"): ("switch_delta_low", float, False),
    ("env", "switch_delta_high"): ("switch_delta_high", float, False),
    ("mp", "type"): ("mp_type", str, True),
    ("mp", "num_basis"): ("num_basis", int, True),
    ("mp", "alpha"): ("alpha", float, False),
    ("mp", "alpha_x"): ("alpha_x", float, False),
    ("mp", "grid_per_step"): ("grid_per_step", int, False),
    ("mp", "dmp_oversample"): ("dmp_oversample", int, False),
    ("mp", "allow_discontinuous"): ("allow_discontinuous", _parse_bool, False),
    ("controller", "kp"): ("kp", float, False),
    ("controller", "kd"): ("kd", float, False),
    ("rollout", "horizon_k"): ("horizon_k", int, True),
    ("rollout", "gamma"): ("gamma", float, False),
    ("rollout", "gae_lambda"): ("gae_lambda", float, False),
    ("rollout", "segments_per_batch"): ("segments_per_batch", int, False),
    ("rollout", "black_box"): ("black_box", str, False),
    ("algo", "mode"): ("mode", str, True),
    ("algo", "lr"): ("lr", float, False),
    ("algo", "value_lr"): ("value_lr", float, False),
    ("algo", "epochs"): ("epochs", int, False),
    ("algo", "minibatch"): ("minibatch", int, False),
    ("algo", "clip_eps"): ("clip_eps", float, False),
    ("algo", "eps_mean"): ("eps_mean", float, False),
    ("algo", "eps_cov"): ("eps_cov", float, False),
    ("algo", "trust_region_coeff"): ("trust_region_coeff", float, False),
    ("algo", "entropy_coeff"): ("entropy_coeff", float, False),
    ("policy", "hidden"): ("hidden", _parse_hidden, False),
    ("policy", "activation"): ("activation", str, False),
    ("policy", "log_std_init"): ("log_std_init", float, False),
    ("policy", "final_scale"): ("final_scale", float, False),
    ("policy", "residual_goal"): ("residual_goal", _parse_bool, False),
}

_ATTR_TO_KEY = {attr: (section, key) for (section, key), (attr, _, _) in SCHEMA.items()}


def parse_config(path) -> RunConfig:
    """Parse and validate a config file; errors carry file and line."""
    raw = {}
    section = None
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith(("#", ";")):
                continue
            if stripped.startswith("[") and stripped.endswith("]"):
                section = stripped[1:-1].strip().lower()
                continue
            if "=" not in stripped:
                raise ConfigError(f"expected key = value, got {stripped!r}", path, lineno)
            if section is None:
                raise ConfigError("key outside any [section]", path, lineno)
            key, _, value = stripped.partition("=")
            key = key.strip().lower()
            value = value.split("#", 1)[0].strip()
            if (section, key) not in SCHEMA:
                raise ConfigError(f"unknown key {section}.{key}", path, lineno)
            if (section, key) in raw:
                raise ConfigError(f"duplicate key {section}.{key}", path, lineno)
            raw[(section, key)] = (value, lineno)

    kwargs = {}
    for (section, key), (attr, convert, required) in SCHEMA.items():
        if (section, key) in raw:
            value, lineno = raw[(section, key)]
            try:
                kwargs[attr] = convert(value)
            except ValueError as exc:
                raise ConfigError(f"{section}.{key}: {exc}", path, lineno) from None
        elif required:
            raise ConfigError(f"missing required key {section}.{key}", path)
    try:
        return RunConfig(**kwargs)
    except ConfigError as exc:
        raise ConfigError(str(exc), path) from None


def resolved_lines(cfg: RunConfig) -> list:
    """The complete effective configuration, defaults included."""
    lines = []
    current = None
    for field_info in fields(cfg):
        section, key = _ATTR_TO_KEY[field_info.name]
        if section != current:
            if current is not None:
                lines.append("")
            lines.append(f"[{section}]")
            current = section
        lines.append(f"{key} = {_fmt(getattr(cfg, field_info.name))}")
    return lines


def write_resolved(cfg: RunConfig, path) -> None:
    with open(path, "w") as fh:
        fh.write("\n".join(resolved_lines(cfg)) + "\n")
