"""Experiment configuration and per-replicate result records."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

from ..errors import ConfigError

SCENARIOS = (
    "g2-validation",
    "pmm-vs-sls",
    "regression-gain",
    "volterra-spectral",
    "cusum-far",
    "dispatch-accuracy",
)

_DEFAULT_SIZES = {
    "g2-validation": [800],
    "pmm-vs-sls": [30, 200],
    "regression-gain": [200],
    "volterra-spectral": [16384],
    "cusum-far": [1000],
    "dispatch-accuracy": [10000],
}


@dataclass
class ExperimentConfig:
    scenario: str
    replicates: int = 100
    base_seed: int = 20260526
    sample_sizes: list = field(default_factory=list)
    workers: int = 1
    output_dir: Optional[str] = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}; "
                              f"choose from {', '.join(SCENARIOS)}")
        if self.replicates < 1:
            raise ConfigError("replicates must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if not self.sample_sizes:
            self.sample_sizes = list(_DEFAULT_SIZES[self.scenario])
        if any(int(n) < 1 for n in self.sample_sizes):
            raise ConfigError("sample sizes must be positive")
        self.sample_sizes = [int(n) for n in self.sample_sizes]
        self.base_seed = int(self.base_seed)

    def replicate_seed(self, replicate: int) -> int:
        """Seed splitting: replicate r runs on base_seed XOR r, so any single
        replicate can be reproduced in isolation."""
        return (self.base_seed ^ replicate) & 0xFFFFFFFFFFFFFFFF

    def as_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "replicates": self.replicates,
            "base_seed": self.base_seed,
            "sample_sizes": list(self.sample_sizes),
            "workers": self.workers,
            "output_dir": self.output_dir,
            "params": self.params,
        }


def load_config(path) -> ExperimentConfig:
    """Read a JSON config file into an ExperimentConfig."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return config_from_dict(raw)


def config_from_dict(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    if "scenario" not in raw:
        raise ConfigError("config requires a 'scenario' field")
    known = {"scenario", "replicates", "base_seed", "sample_sizes", "workers",
             "output_dir", "params"}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config fields: {sorted(unknown)}")
    try:
        return ExperimentConfig(**raw)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


@dataclass
class ResultRecord:
    """One row: a single estimator's output on a single replicate."""

    scenario: str
    replicate: int
    seed: int
    estimator: str
    sample_size: int
    values: dict = field(default_factory=dict)
    error: str = ""
