"""
Centralized configuration for quantum_leakage.

Runtime knobs (worker count, logging, debug tracing) come from the environment
through dataclass sections. Algorithm parameters are pydantic models so their
invariants are checked at construction and they double as CLI config schemas.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field

try:
    from icecream import ic
except ImportError:  # pragma: no cover
    ic = None


def _env_flag(name: str, default: str = "") -> bool:
    return os.environ.get(name, default).lower() in ("true", "1", "yes")


@dataclass
class RuntimeConfig:
    """Process-level settings shared by the library and the CLI."""

    workers: int = 1
    log_level: str = "WARNING"
    debug: bool = False

    @classmethod
    def from_environment(cls) -> "RuntimeConfig":
        """Create configuration from environment variables."""
        return cls(
            workers=max(1, int(os.environ.get("QLEAK_WORKERS", "1"))),
            log_level=os.environ.get("QLEAK_LOG_LEVEL", "WARNING").upper(),
            debug=_env_flag("QLEAK_DEBUG"),
        )


@dataclass
class QleakConfig:
    """Main configuration container."""

    runtime: RuntimeConfig

    @classmethod
    def from_environment(cls) -> "QleakConfig":
        return cls(runtime=RuntimeConfig.from_environment())

    @classmethod
    def default(cls) -> "QleakConfig":
        return cls(runtime=RuntimeConfig())


_config: Optional[QleakConfig] = None


def get_config() -> QleakConfig:
    """Get the global configuration instance."""
    global _config
    if _config is None:
        _config = QleakConfig.from_environment()
        _apply_debug(_config.runtime.debug)
    return _config


def set_config(config: QleakConfig) -> None:
    """Set the global configuration instance (useful for testing)."""
    global _config
    _config = config
    _apply_debug(config.runtime.debug)


def reset_config() -> None:
    """Reset configuration to load from environment again."""
    global _config
    _config = None


def get_runtime_config() -> RuntimeConfig:
    return get_config().runtime


def _apply_debug(enabled: bool) -> None:
    if ic is None:
        return
    if enabled:
        ic.enable()
        ic.configureOutput(prefix="qleak| ")
    else:
        ic.disable()


# ---- Algorithm parameters ----

class SolverConfig(BaseModel):
    """Parameters of the maximal-leakage solver.

    ``outcome_count`` defaults to dim**2 when left as None. ``restarts`` counts the
    randomly perturbed uniform starts; the pretty-good-measurement start is extra.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    tol: float = Field(default=1e-10, gt=0)
    max_iter: int = Field(default=5000, ge=1)
    outcome_count: Optional[int] = Field(default=None, ge=1)
    restarts: int = Field(default=5, ge=1)
    seed: int = 0
    pretty_good_start: bool = True
    perturbation: float = Field(default=1e-3, ge=0)

    def outcomes_for(self, dim: int) -> int:
        return self.outcome_count if self.outcome_count is not None else dim * dim


def default_ascent_solver() -> SolverConfig:
    # Inner solver used between ascent steps; warm starts make long runs unnecessary.
    return SolverConfig(tol=1e-9, max_iter=400, restarts=2)


class EncodingProblem(BaseModel):
    """Alphabet size |X| and Hilbert-space dimension d of an encoder search."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    alphabet_size: int = Field(ge=1)
    dim: int = Field(ge=1)


class OptimizerConfig(BaseModel):
    """Projected subgradient ascent parameters."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    step_size: float = Field(default=0.1, gt=0)
    iterations: int = Field(default=100, ge=0)
    restarts: int = Field(default=100, ge=1)
    seed: int = 0
    solver: SolverConfig = Field(default_factory=default_ascent_solver)
