"""
Configuration classes for the ecodyn game-environment model.
"""
import math
import os
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple

from dotenv import dotenv_values
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .errors import ConfigError


class LearningRule(str, Enum):
    """Revision protocol driving the cooperator fraction."""
    LOGIT = "logit"
    IMITATIVE = "imitative"


@dataclass(frozen=True)
class PayoffDeltas:
    """The four payoff parameters (differences of payoff-matrix entries)."""
    delta_tr1: float
    delta_ps1: float
    delta_rt0: float
    delta_sp0: float

    @classmethod
    def from_env(cls) -> 'PayoffDeltas':
        """Create PayoffDeltas from ECODYN_DELTA_* environment variables."""
        preset = BASELINE_DELTAS
        return cls(
            delta_tr1=float(os.getenv('ECODYN_DELTA_TR1', preset.delta_tr1)),
            delta_ps1=float(os.getenv('ECODYN_DELTA_PS1', preset.delta_ps1)),
            delta_rt0=float(os.getenv('ECODYN_DELTA_RT0', preset.delta_rt0)),
            delta_sp0=float(os.getenv('ECODYN_DELTA_SP0', preset.delta_sp0))
        )


@dataclass(frozen=True)
class EnvParams:
    """Environment parameters: replenishment rate and time-scale separation."""
    theta: float
    epsilon: float

    def __post_init__(self):
        if not (math.isfinite(self.theta) and self.theta > 0):
            raise ConfigError(f"theta must be finite and positive, got {self.theta}")
        if not (math.isfinite(self.epsilon) and self.epsilon > 0):
            raise ConfigError(f"epsilon must be finite and positive, got {self.epsilon}")

    @classmethod
    def from_env(cls) -> 'EnvParams':
        """Create EnvParams from ECODYN_THETA / ECODYN_EPSILON."""
        return cls(
            theta=float(os.getenv('ECODYN_THETA', BASELINE_ENV.theta)),
            epsilon=float(os.getenv('ECODYN_EPSILON', BASELINE_ENV.epsilon))
        )


BASELINE_DELTAS = PayoffDeltas(delta_tr1=0.5, delta_ps1=0.25, delta_rt0=1.5, delta_sp0=-0.5)
BASELINE_ENV = EnvParams(theta=0.8, epsilon=0.5)
# names accepted for the reference parameter set
PRESET_NAMES = ('fig3', 'baseline')


@dataclass(frozen=True)
class ModelConfig:
    """Complete model configuration: payoffs, environment, rationality and learning rule."""
    deltas: PayoffDeltas
    env: EnvParams
    beta: float = 0.0
    rule: LearningRule = LearningRule.LOGIT

    def __post_init__(self):
        if not (math.isfinite(self.beta) and self.beta >= 0):
            raise ConfigError(f"beta must be finite and non-negative, got {self.beta}")
        if not isinstance(self.rule, LearningRule):
            object.__setattr__(self, 'rule', LearningRule(self.rule))

    def with_beta(self, beta: float) -> 'ModelConfig':
        """Copy of this config at a different rationality level."""
        return replace(self, beta=float(beta))

    def with_rule(self, rule: LearningRule) -> 'ModelConfig':
        """Copy of this config using a different learning rule."""
        return replace(self, rule=LearningRule(rule))

    @classmethod
    def baseline(cls, beta: float = 6.0, rule: LearningRule = LearningRule.LOGIT) -> 'ModelConfig':
        """The reference parameter set used for the bifurcation diagram and phase portraits."""
        return cls(deltas=BASELINE_DELTAS, env=BASELINE_ENV, beta=beta, rule=rule)

    @classmethod
    def from_env(cls) -> 'ModelConfig':
        """Create ModelConfig from environment variables (defaults to the baseline preset at beta=6)."""
        return cls(
            deltas=PayoffDeltas.from_env(),
            env=EnvParams.from_env(),
            beta=float(os.getenv('ECODYN_BETA', '6.0')),
            rule=LearningRule(os.getenv('ECODYN_RULE', 'logit').lower())
        )


@dataclass(frozen=True)
class IntegratorControl:
    """Step parameters for the Runge-Kutta integrators."""
    method: str = 'rk4'  # 'rk4' (fixed step) or 'rkf45' (adaptive)
    step: float = 0.01
    atol: float = 1e-9
    rtol: float = 1e-7
    h_min: float = 1e-12
    h_max: float = 0.5
    record_every: int = 1

    def __post_init__(self):
        if self.method not in ('rk4', 'rkf45'):
            raise ConfigError(f"Unknown integration method: {self.method}")
        if self.step <= 0 or self.h_min <= 0 or self.h_max <= 0:
            raise ConfigError("Integrator step sizes must be positive")
        if self.record_every < 1:
            raise ConfigError("record_every must be at least 1")


@dataclass(frozen=True)
class DetectionSettings:
    """Thresholds used when classifying long-run behaviour of a trajectory."""
    transient: float = 200.0
    budget: float = 3000.0
    fixed_point_tol: float = 1e-6
    dwell: float = 10.0
    section_tol: float = 1e-6
    section_returns: int = 5
    min_amplitude: float = 1e-4
    reference_state: Tuple[float, float] = (0.6, 0.6)
    beta_u_width: float = 0.02


@dataclass
class WorkerConfig:
    """Parallelism settings."""
    threads: int = field(default_factory=lambda: os.cpu_count() or 1)

    @classmethod
    def from_env(cls) -> 'WorkerConfig':
        """Create WorkerConfig from ECODYN_THREADS (capped at the cpu count)."""
        cpus = os.cpu_count() or 1
        raw = os.getenv('ECODYN_THREADS')
        if raw is None or raw.strip() == '':
            return cls(threads=cpus)
        try:
            threads = int(raw)
        except ValueError:
            raise ConfigError(f"ECODYN_THREADS must be an integer, got {raw!r}")
        return cls(threads=max(1, min(threads, cpus)))


CONFIG_FILE_KEYS = (
    'delta_tr1', 'delta_ps1', 'delta_rt0', 'delta_sp0',
    'theta', 'epsilon', 'beta', 'rule', 'seed'
)


class RunConfig(BaseModel):
    """Validated CLI configuration (model parameters plus run options)."""
    model_config = ConfigDict(extra='forbid', frozen=True)

    delta_tr1: float = BASELINE_DELTAS.delta_tr1
    delta_ps1: float = BASELINE_DELTAS.delta_ps1
    delta_rt0: float = BASELINE_DELTAS.delta_rt0
    delta_sp0: float = BASELINE_DELTAS.delta_sp0
    theta: float = Field(default=BASELINE_ENV.theta, gt=0)
    epsilon: float = Field(default=BASELINE_ENV.epsilon, gt=0)
    beta: float = Field(default=6.0, ge=0)
    rule: LearningRule = LearningRule.LOGIT
    seed: int = Field(default=0, ge=0)

    @field_validator('delta_tr1', 'delta_ps1', 'delta_rt0', 'delta_sp0', 'theta', 'epsilon', 'beta')
    @classmethod
    def _finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError('must be finite')
        return value

    def to_model_config(self) -> ModelConfig:
        """Build the dataclass configuration consumed by the services."""
        return ModelConfig(
            deltas=PayoffDeltas(self.delta_tr1, self.delta_ps1, self.delta_rt0, self.delta_sp0),
            env=EnvParams(self.theta, self.epsilon),
            beta=self.beta,
            rule=self.rule
        )

    def header_items(self) -> List[Tuple[str, str]]:
        """Effective configuration as ordered (key, value) pairs for CSV preambles."""
        items = []
        for key in CONFIG_FILE_KEYS:
            value = getattr(self, key)
            if isinstance(value, LearningRule):
                value = value.value
            elif isinstance(value, float):
                value = f"{value:.12g}"
            items.append((key, str(value)))
        return items

    @classmethod
    def from_sources(
        cls,
        preset: Optional[str] = None,
        config_file: Optional[str] = None,
        overrides: Optional[Mapping[str, Any]] = None
    ) -> 'RunConfig':
        """
        Merge configuration sources: defaults < preset < config file < overrides.

        Raises:
            ConfigError: on unknown keys, unreadable files or invalid values
        """
        values: Dict[str, Any] = {}
        if preset is not None:
            values.update(_preset_values(preset))
        if config_file is not None:
            values.update(read_config_file(config_file))
        for key, value in (overrides or {}).items():
            if value is not None:
                values[key] = value
        try:
            return cls(**values)
        except ValidationError as e:
            raise ConfigError(f"Invalid configuration: {e}") from e


def _preset_values(name: str) -> Dict[str, Any]:
    if name.lower() not in PRESET_NAMES:
        raise ConfigError(f"Unknown preset: {name}")
    return {
        'delta_tr1': BASELINE_DELTAS.delta_tr1,
        'delta_ps1': BASELINE_DELTAS.delta_ps1,
        'delta_rt0': BASELINE_DELTAS.delta_rt0,
        'delta_sp0': BASELINE_DELTAS.delta_sp0,
        'theta': BASELINE_ENV.theta,
        'epsilon': BASELINE_ENV.epsilon
    }


def read_config_file(path: str) -> Dict[str, str]:
    """Read a flat key=value config file (dotenv syntax)."""
    if not Path(path).exists():
        raise ConfigError(f"Config file not found: {path}")
    raw = dotenv_values(path)
    values = {}
    for key, value in raw.items():
        normalized = key.strip().lower()
        if normalized not in CONFIG_FILE_KEYS:
            raise ConfigError(f"Unknown config key '{key}' in {path}")
        if value is None:
            raise ConfigError(f"Config key '{key}' has no value in {path}")
        values[normalized] = value.strip()
    return values
