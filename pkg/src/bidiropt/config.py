"""Run configuration.

A config is a flat JSON object; every key must be known and well-typed, and
command-line flags override file values. BIDIROPT_CONFIG names a default
file for when --config is not given.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .cost import CostModel, _DEFAULT_COSTS
from .search import FRONTIER_POLICIES, SearchLimits


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class Config:
    costs: dict[str, int] = field(default_factory=dict)
    metric: str = "static"                  # "static" | "dynamic"
    passes: tuple[str, ...] | None = None   # None = all forward passes
    reverses: tuple[str, ...] | None = None
    max_sequence_length: int = 12
    max_programs_explored: int = 200_000
    max_instructions_per_program: int = 512
    cap_per_pass: int = 8
    ibo_max_frontier: int = 256
    step_limit: int = 10_000
    workload: str | None = None             # path to a JSON arg-vector list
    format: str = "json"                    # "json" | "text"
    seed: int = 0
    frontier_policy: str = "cheap-first"
    reverse_from: str = "frontier"          # "frontier" | "optimized"
    single_variant: bool = False

    def limits(self) -> SearchLimits:
        return SearchLimits(
            max_sequence_length=self.max_sequence_length,
            max_programs_explored=self.max_programs_explored,
            max_instructions_per_program=self.max_instructions_per_program,
            cap_per_pass=self.cap_per_pass,
            ibo_max_frontier=self.ibo_max_frontier,
        )

    def model(self) -> CostModel:
        return CostModel(dict(self.costs))


_FIELDS = {f.name: f for f in fields(Config)}


def _check(cfg: Config) -> Config:
    from .passes import FORWARD_PASSES
    from .reverse import REVERSE_PASSES

    if cfg.metric not in ("static", "dynamic"):
        raise ConfigError(f"metric must be 'static' or 'dynamic', got {cfg.metric!r}")
    if cfg.format not in ("json", "text"):
        raise ConfigError(f"format must be 'json' or 'text', got {cfg.format!r}")
    if cfg.frontier_policy not in FRONTIER_POLICIES:
        raise ConfigError(f"unknown frontier_policy {cfg.frontier_policy!r}")
    if cfg.reverse_from not in ("frontier", "optimized"):
        raise ConfigError(f"reverse_from must be 'frontier' or 'optimized'")
    for name, value in cfg.costs.items():
        if name not in _DEFAULT_COSTS:
            raise ConfigError(f"cost override for unknown opcode {name!r}")
        if not isinstance(value, int) or value < 0:
            raise ConfigError(f"cost for {name!r} must be a non-negative integer")
    if cfg.passes is not None:
        for p in cfg.passes:
            if p not in FORWARD_PASSES:
                raise ConfigError(f"unknown pass {p!r}")
    if cfg.reverses is not None:
        for r in cfg.reverses:
            if r not in REVERSE_PASSES:
                raise ConfigError(f"unknown reverse pass {r!r}")
    for name in ("max_sequence_length", "max_programs_explored",
                 "max_instructions_per_program", "cap_per_pass",
                 "ibo_max_frontier", "step_limit"):
        v = getattr(cfg, name)
        if not isinstance(v, int) or v < 1:
            raise ConfigError(f"{name} must be a positive integer, got {v!r}")
    return cfg


def load_config(path: str | Path | None = None) -> Config:
    """Read a config file (or BIDIROPT_CONFIG, or defaults), strictly."""
    if path is None:
        path = os.environ.get("BIDIROPT_CONFIG") or None
    if path is None:
        return _check(Config())
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"config {path} is not valid JSON: {e}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"config {path} must be a JSON object")
    kwargs = {}
    for key, value in raw.items():
        if key not in _FIELDS:
            raise ConfigError(f"unknown config key {key!r}")
        if key in ("passes", "reverses") and isinstance(value, list):
            value = tuple(value)
        kwargs[key] = value
    try:
        cfg = Config(**kwargs)
    except TypeError as e:
        raise ConfigError(str(e)) from None
    return _check(cfg)


def override(cfg: Config, **updates) -> Config:
    """Apply non-None command-line overrides on top of a config."""
    real = {k: v for k, v in updates.items() if v is not None}
    if not real:
        return cfg
    return _check(replace(cfg, **real))
