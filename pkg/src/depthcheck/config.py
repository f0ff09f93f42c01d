"""Run configuration: every tunable knob in one serializable object.

Each derived artifact (feature dumps, model bundles, reports) embeds the
producing tool version and the full configuration so results can be traced
back to the exact settings that made them.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from . import __version__
from .errors import ConfigError


@dataclass(frozen=True)
class SvmConfig:
    """RBF support vector machine settings.

    gamma == 0 means the scale heuristic 1 / (n_features * var(X)).
    """

    c: float = 1.0
    gamma: float = 0.0
    tol: float = 1e-3
    max_passes: int = 8
    sigmoid_folds: int = 3

    def __post_init__(self) -> None:
        if self.c <= 0:
            raise ConfigError(f"svm c must be > 0, got {self.c}")
        if self.gamma < 0:
            raise ConfigError(f"svm gamma must be >= 0, got {self.gamma}")
        if self.tol <= 0 or self.max_passes < 1 or self.sigmoid_folds < 2:
            raise ConfigError("svm tol must be > 0, max_passes >= 1, sigmoid_folds >= 2")


@dataclass(frozen=True)
class GbmConfig:
    """Gradient boosted trees on logistic loss."""

    rounds: int = 200
    depth: int = 4
    learning_rate: float = 0.1
    min_leaf: int = 2

    def __post_init__(self) -> None:
        if self.rounds < 0:
            raise ConfigError(f"gbm rounds must be >= 0, got {self.rounds}")
        if self.depth < 1 or self.min_leaf < 1:
            raise ConfigError("gbm depth and min_leaf must be >= 1")
        if not 0 < self.learning_rate <= 1:
            raise ConfigError(f"gbm learning rate must be in (0, 1], got {self.learning_rate}")


@dataclass(frozen=True)
class ForestConfig:
    """Random forest over bootstrap samples with per-split feature subsets."""

    trees: int = 300
    depth: int = 12
    min_leaf: int = 1

    def __post_init__(self) -> None:
        if self.trees < 1 or self.depth < 1 or self.min_leaf < 1:
            raise ConfigError("forest trees, depth, and min_leaf must all be >= 1")


@dataclass(frozen=True)
class RunConfig:
    """Top-level settings shared by the CLI, the service, and the library."""

    radius: int = 2
    bins: int = 100
    threshold: float = 0.5
    seed: int = 0
    threads: int = 0  # worker cap for per-frame measurement; 0 = all cores
    size_per_pixel: bool = False
    svm: SvmConfig = field(default_factory=SvmConfig)
    gbm: GbmConfig = field(default_factory=GbmConfig)
    forest: ForestConfig = field(default_factory=ForestConfig)

    def __post_init__(self) -> None:
        if not 1 <= self.radius <= 49:
            # radius 49 keeps the integer variance numerator inside int64 at depth 16
            raise ConfigError(f"window radius must be in [1, 49], got {self.radius}")
        if self.bins < 1:
            raise ConfigError(f"bin count must be >= 1, got {self.bins}")
        if not 0 <= self.threshold <= 1:
            raise ConfigError(f"decision threshold must be in [0, 1], got {self.threshold}")
        if self.threads < 0:
            raise ConfigError(f"threads must be >= 0, got {self.threads}")

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "RunConfig":
        if not isinstance(doc, dict):
            raise ConfigError("configuration document must be a JSON object")
        known = {f.name for f in dataclasses.fields(cls)}
        extra = set(doc) - known
        if extra:
            raise ConfigError(f"unknown configuration keys: {sorted(extra)}")
        kw: dict[str, Any] = dict(doc)
        for name, sub in (("svm", SvmConfig), ("gbm", GbmConfig), ("forest", ForestConfig)):
            if name in kw and isinstance(kw[name], dict):
                sub_known = {f.name for f in dataclasses.fields(sub)}
                sub_extra = set(kw[name]) - sub_known
                if sub_extra:
                    raise ConfigError(f"unknown {name} keys: {sorted(sub_extra)}")
                try:
                    kw[name] = sub(**kw[name])
                except TypeError as exc:
                    raise ConfigError(f"bad {name} configuration: {exc}") from exc
        try:
            return cls(**kw)
        except TypeError as exc:
            raise ConfigError(f"bad configuration: {exc}") from exc

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        try:
            doc = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read configuration {path}: {exc}") from exc
        return cls.from_dict(doc)


def provenance(config: RunConfig) -> dict[str, Any]:
    """Stamp embedded in every derived artifact."""
    return {"tool": "depthcheck", "version": __version__, "config": config.to_dict()}
