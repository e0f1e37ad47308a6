"""Runtime configuration shared by the CLI commands."""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Any, Mapping, Optional

from .errors import ConfigError

CONFIG_ENV_VAR = "HIPMETRICS_CONFIG"


@dataclass(frozen=True)
class Config:
    sigma: float = 5.0
    tta_views: int = 8
    sdr_radii: tuple[float, ...] = (2.0, 3.0, 4.0)
    alpha_threshold: float = 65.0
    lce_threshold: float = 40.0
    split_ratios: tuple[float, float, float] = (0.65, 0.10, 0.25)
    seed: int = 0
    restarts: int = 1000
    jobs: Optional[int] = None  # None = logical core count
    strict: bool = False

    def __post_init__(self):
        if self.sigma <= 0:
            raise ConfigError(f"sigma must be positive, got {self.sigma}")
        if self.tta_views < 1:
            raise ConfigError(f"tta_views must be >= 1, got {self.tta_views}")
        if not self.sdr_radii or any(r <= 0 for r in self.sdr_radii):
            raise ConfigError(f"sdr_radii must be positive, got {self.sdr_radii}")
        if self.alpha_threshold <= 0 or self.lce_threshold <= 0:
            raise ConfigError("angle thresholds must be positive")
        if len(self.split_ratios) != 3 or any(r <= 0 for r in self.split_ratios):
            raise ConfigError(f"split_ratios must be 3 positive values, got {self.split_ratios}")
        if not math.isclose(sum(self.split_ratios), 1.0, abs_tol=1e-9):
            raise ConfigError(f"split_ratios must sum to 1, got {self.split_ratios}")
        if self.restarts < 1:
            raise ConfigError(f"restarts must be >= 1, got {self.restarts}")
        if self.jobs is not None and self.jobs < 1:
            raise ConfigError(f"jobs must be >= 1, got {self.jobs}")


def load_config(path: Optional[str] = None,
                overrides: Optional[Mapping[str, Any]] = None) -> Config:
    """Build a Config from defaults, an optional JSON file, then overrides.

    The file path falls back to the HIPMETRICS_CONFIG environment variable;
    explicit flag overrides always win over file values.
    """
    values: dict[str, Any] = {}
    path = path or os.environ.get(CONFIG_ENV_VAR)
    if path:
        try:
            doc = json.loads(Path(path).read_text())
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc.msg}") from None
        if not isinstance(doc, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
        known = {f.name for f in fields(Config)}
        unknown = sorted(set(doc) - known)
        if unknown:
            raise ConfigError(f"{path}: unknown config keys {unknown}")
        values.update(doc)
    if overrides:
        values.update({k: v for k, v in overrides.items() if v is not None})
    for key in ("sdr_radii", "split_ratios"):
        if key in values:
            values[key] = tuple(float(v) for v in values[key])
    try:
        return Config(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def with_overrides(cfg: Config, **overrides: Any) -> Config:
    return replace(cfg, **{k: v for k, v in overrides.items() if v is not None})
