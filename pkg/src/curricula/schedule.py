"""Generalized-logistic loss-weight schedules for difficulty groups."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

# exp() overflows past ~709; clamping keeps weights strictly inside (0, 1).
SATURATION = 700.0

PRESET_NAMES = ("inc", "anti", "constant")


@dataclass(frozen=True)
class GLFParams:
    """Rate/shift pair of one generalized logistic weight function."""

    rate: float
    shift: float

    def __post_init__(self):
        if not (math.isfinite(self.rate) and math.isfinite(self.shift)):
            raise ValueError(f"rate and shift must be finite, got ({self.rate}, {self.shift})")


@dataclass
class CurriculumConfig:
    """Per-group weight functions plus the flags that define one curriculum."""

    k: int
    per_group: list[GLFParams] = field(default_factory=list)
    non_monotonic: bool = False
    name: str = ""

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if len(self.per_group) != self.k:
            raise ValueError(f"expected {self.k} (rate, shift) pairs, got {len(self.per_group)}")

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "groups": [{"r": p.rate, "s": p.shift} for p in self.per_group],
            "non_monotonic": self.non_monotonic,
            "name": self.name,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CurriculumConfig":
        return cls(
            k=int(d["k"]),
            per_group=[GLFParams(float(g["r"]), float(g["s"])) for g in d["groups"]],
            non_monotonic=bool(d.get("non_monotonic", False)),
            name=str(d.get("name", "")),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path) -> "CurriculumConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))


_W_MAX = np.nextafter(1.0, 0.0)


def glf_weight(t, params: GLFParams):
    """Weight in (0, 1) at training progress ``t`` for one rate/shift pair.

    Accepts a scalar or an array of progress values. The exponent is clamped
    to +-700 so extreme rates saturate instead of overflowing; saturated
    weights stay strictly inside (0, 1).
    """
    z = np.clip(params.rate * (np.asarray(t, dtype=float) - params.shift), -SATURATION, SATURATION)
    w = np.minimum(1.0 / (1.0 + np.exp(-z)), _W_MAX)
    if w.ndim == 0:
        return float(w)
    return w


def weighted_loss(loss: float, t: float, group: int, config: CurriculumConfig) -> float:
    """Apply the group's schedule weight to one instantaneous loss value."""
    if not 0 <= group < config.k:
        raise IndexError(f"group {group} out of range [0, {config.k})")
    return glf_weight(t, config.per_group[group]) * loss


def preset(name: str, k: int) -> CurriculumConfig:
    """Build one of the reference curricula.

    ``inc`` introduces easier groups first (pivot weights staggered from t=0
    for the easiest group up to t=0.9 for the hardest), ``anti`` is its mirror
    image (hardest first), and ``constant`` holds every weight at 0.5.
    """
    if k < 2:
        raise ValueError("presets need k >= 2")
    pivots = [0.9 * g / (k - 1) for g in range(k)]
    if name == "inc":
        pairs = [GLFParams(10.0, s) for s in pivots]
    elif name == "anti":
        pairs = [GLFParams(10.0, s) for s in reversed(pivots)]
    elif name == "constant":
        pairs = [GLFParams(0.0, 0.5) for _ in range(k)]
    else:
        raise ValueError(f"unknown preset {name!r}; expected one of {PRESET_NAMES}")
    return CurriculumConfig(k=k, per_group=pairs, name=name)


def trajectory(config: CurriculumConfig, steps: int) -> np.ndarray:
    """Per-group weight curves sampled at ``steps`` evenly spaced t in [0, 1].

    Returns a (k, steps) matrix, one row per difficulty group.
    """
    if steps < 2:
        raise ValueError("steps must be >= 2")
    t = np.linspace(0.0, 1.0, steps)
    return np.vstack([glf_weight(t, p) for p in config.per_group])
