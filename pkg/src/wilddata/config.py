"""Run configuration for the command-line pipeline."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .surgery import PRESETS


class ConfigError(ValueError):
    pass


def _state(v, name):
    if isinstance(v, str):
        v = [float(s) for s in v.split(",")]
    v = [float(s) for s in v]
    if len(v) != 4:
        raise ConfigError(f"{name} needs four values rho,theta,u1,u2")
    if not all(math.isfinite(s) for s in v):
        raise ConfigError(f"{name} must be finite")
    if v[0] <= 0.0 or v[1] <= 0.0:
        raise ConfigError(f"{name}: rho and theta must be positive")
    return v


@dataclass
class RunConfig:
    c_v: float = 2.5
    epsilon: float = 0.3
    q: float = 1.0
    nx: int = 512
    ny: int = 64
    n_hint: int = 0
    left: list = field(default_factory=lambda: [1.0, 1.0, 0.0, 0.0])
    right: list = field(default_factory=lambda: [0.125, 0.8, 0.0, 0.0])
    base: str = "smooth-vortex"
    base_params: dict = field(default_factory=dict)
    snapshots: int = 32
    i_star: int | None = None
    out: str = "out"
    seed: int = 0
    probes: int = 10

    def __post_init__(self):
        self.validate()

    def validate(self):
        if not (isinstance(self.c_v, (int, float)) and self.c_v > 1.0):
            raise ConfigError("c_v must exceed 1")
        if not 0.0 < self.epsilon < 1.0:
            raise ConfigError("epsilon must lie in (0, 1)")
        if not self.q >= 1.0:
            raise ConfigError("q must be at least 1")
        for name in ("nx", "ny", "snapshots"):
            v = getattr(self, name)
            if not (isinstance(v, int) and v >= 1):
                raise ConfigError(f"{name} must be a positive integer")
        if self.snapshots < 16:
            raise ConfigError("snapshots must be at least 16 for the weak-form quadrature")
        if self.n_hint < 0:
            raise ConfigError("n_hint must be non-negative")
        self.left = _state(self.left, "left")
        self.right = _state(self.right, "right")
        if self.base not in PRESETS:
            raise ConfigError(f"unknown base preset {self.base!r}; choose from {PRESETS}")
        if self.i_star is not None and not (isinstance(self.i_star, int) and self.i_star >= 1):
            raise ConfigError("i_star must be a positive integer")
        if self.probes < 1:
            raise ConfigError("probes must be positive")

    def to_dict(self) -> dict:
        return asdict(self)

    def echo(self) -> dict:
        """Config as echoed into artifacts; the output location is left out so
        runs into different directories write identical files."""
        d = asdict(self)
        d.pop("out")
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            d = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(d)
