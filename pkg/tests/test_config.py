"""
Tests for configuration loading and validation.
"""
import os

import pytest

from ecodyn.models.config import (
    BASELINE_DELTAS, BASELINE_ENV, EnvParams, LearningRule, ModelConfig, RunConfig, WorkerConfig, read_config_file
)
from ecodyn.models.errors import ConfigError


class TestModelConfig:
    """Dataclass configuration and environment loading."""

    def test_baseline_preset(self):
        config = ModelConfig.baseline()
        assert config.deltas == BASELINE_DELTAS
        assert config.env == BASELINE_ENV
        assert config.beta == 6.0
        assert config.rule == LearningRule.LOGIT

    def test_copies(self):
        config = ModelConfig.baseline()
        assert config.with_beta(2).beta == 2.0
        assert config.with_rule('imitative').rule == LearningRule.IMITATIVE
        assert config.beta == 6.0

    def test_invalid_values(self):
        with pytest.raises(ConfigError):
            ModelConfig.baseline(beta=-1.0)
        with pytest.raises(ConfigError):
            ModelConfig.baseline(beta=float('inf'))
        with pytest.raises(ConfigError):
            EnvParams(theta=0.0, epsilon=0.5)
        with pytest.raises(ConfigError):
            EnvParams(theta=0.8, epsilon=float('nan'))

    def test_from_env(self, monkeypatch):
        monkeypatch.setenv("ECODYN_DELTA_TR1", "1.0")
        monkeypatch.setenv("ECODYN_THETA", "0.9")
        monkeypatch.setenv("ECODYN_BETA", "3")
        monkeypatch.setenv("ECODYN_RULE", "IMITATIVE")
        config = ModelConfig.from_env()
        assert config.deltas.delta_tr1 == 1.0
        assert config.deltas.delta_ps1 == BASELINE_DELTAS.delta_ps1
        assert config.env.theta == 0.9
        assert config.env.epsilon == BASELINE_ENV.epsilon
        assert config.beta == 3.0
        assert config.rule == LearningRule.IMITATIVE

    def test_from_env_defaults(self, monkeypatch):
        for name in ("ECODYN_DELTA_TR1", "ECODYN_DELTA_PS1", "ECODYN_DELTA_RT0", "ECODYN_DELTA_SP0",
                     "ECODYN_THETA", "ECODYN_EPSILON", "ECODYN_BETA", "ECODYN_RULE"):
            monkeypatch.delenv(name, raising=False)
        assert ModelConfig.from_env() == ModelConfig.baseline()


class TestWorkerConfig:
    """Worker count from ECODYN_THREADS."""

    def test_capped_at_cpu_count(self, monkeypatch):
        monkeypatch.setenv("ECODYN_THREADS", "100000")
        assert WorkerConfig.from_env().threads == (os.cpu_count() or 1)

    def test_at_least_one(self, monkeypatch):
        monkeypatch.setenv("ECODYN_THREADS", "0")
        assert WorkerConfig.from_env().threads == 1

    def test_unset_uses_all_cores(self, monkeypatch):
        monkeypatch.delenv("ECODYN_THREADS", raising=False)
        assert WorkerConfig.from_env().threads == (os.cpu_count() or 1)

    def test_not_an_integer(self, monkeypatch):
        monkeypatch.setenv("ECODYN_THREADS", "many")
        with pytest.raises(ConfigError):
            WorkerConfig.from_env()


class TestRunConfig:
    """Source merging and validation for the command-line tools."""

    def test_precedence(self, temp_dir):
        path = os.path.join(temp_dir, 'run.env')
        with open(path, 'w', encoding='utf-8') as handle:
            handle.write("theta=0.9\nbeta=4\n")
        run = RunConfig.from_sources('baseline', path, {'beta': 7.5, 'seed': None})
        assert run.theta == 0.9
        assert run.beta == 7.5
        assert run.seed == 0
        assert run.delta_rt0 == BASELINE_DELTAS.delta_rt0

    def test_to_model_config(self):
        model = RunConfig(beta=2.0, rule='imitative').to_model_config()
        assert model == ModelConfig.baseline(beta=2.0, rule=LearningRule.IMITATIVE)

    def test_header_items(self):
        items = RunConfig(beta=1 / 3).header_items()
        assert [key for key, _ in items] == [
            'delta_tr1', 'delta_ps1', 'delta_rt0', 'delta_sp0', 'theta', 'epsilon', 'beta', 'rule', 'seed'
        ]
        assert dict(items)['beta'] == '0.333333333333'
        assert dict(items)['rule'] == 'logit'

    @pytest.mark.parametrize("overrides", [
        {'theta': 0.0},
        {'epsilon': -1.0},
        {'beta': -0.5},
        {'beta': float('nan')},
        {'rule': 'replicator'},
        {'seed': -3},
    ])
    def test_invalid_values(self, overrides):
        with pytest.raises(ConfigError):
            RunConfig.from_sources(overrides=overrides)

    def test_preset_names_agree(self):
        assert RunConfig.from_sources('fig3') == RunConfig.from_sources('baseline')
        assert RunConfig.from_sources('FIG3').to_model_config() == ModelConfig.baseline()

    def test_unknown_preset(self):
        with pytest.raises(ConfigError):
            RunConfig.from_sources('unknown')

    def test_config_file_errors(self, temp_dir):
        with pytest.raises(ConfigError):
            read_config_file(os.path.join(temp_dir, 'absent.env'))
        path = os.path.join(temp_dir, 'bad.env')
        with open(path, 'w', encoding='utf-8') as handle:
            handle.write("beta=2\nalpha=1\n")
        with pytest.raises(ConfigError):
            read_config_file(path)

    def test_reference_config_file(self):
        path = os.path.join(os.path.dirname(__file__), '..', 'configs', 'baseline.env')
        run = RunConfig.from_sources(config_file=path)
        assert run.to_model_config() == ModelConfig.baseline()
