"""Numeric configuration shared by every analysis."""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from .errors import InvalidParameter

CONFIG_ENV_VAR = "LIMITENTRY_CONFIG"


@dataclass(frozen=True)
class NumericConfig:
    quad_abs_tol: float = 1e-10
    quad_rel_tol: float = 1e-9
    grid_points: int = 4096
    eq_tolerance: float = 1e-3
    rev_tolerance: float = 1e-6
    fp_tolerance: float = 1e-8
    max_iterations: int = 10_000
    consistency_band: float = 1e-6
    mc_samples: int = 1_000_000
    seed: int = 1729
    truncation_quantile: float = 1 - 1e-12

    def __post_init__(self):
        for name in ("quad_abs_tol", "quad_rel_tol", "eq_tolerance", "rev_tolerance",
                     "fp_tolerance", "consistency_band"):
            if not getattr(self, name) > 0:
                raise InvalidParameter(f"{name} must be > 0, got {getattr(self, name)}")
        if self.grid_points < 100:
            raise InvalidParameter(f"grid_points must be >= 100, got {self.grid_points}")
        if self.max_iterations < 1 or self.mc_samples < 1:
            raise InvalidParameter("max_iterations and mc_samples must be positive")
        if not 0.5 < self.truncation_quantile < 1:
            raise InvalidParameter("truncation_quantile must lie in (0.5, 1)")

    def with_overrides(self, **overrides) -> NumericConfig:
        """Return a copy with the non-None overrides applied."""
        kept = {k: v for k, v in overrides.items() if v is not None}
        return replace(self, **kept)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_file(cls, path: str | os.PathLike) -> NumericConfig:
        """Load a JSON object of field overrides; unknown keys are rejected."""
        data = json.loads(Path(path).read_text())
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InvalidParameter(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_env(cls) -> NumericConfig:
        path = os.environ.get(CONFIG_ENV_VAR)
        return cls.from_file(path) if path else cls()
