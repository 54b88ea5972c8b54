"""
Pytest configuration and fixtures for the ecodyn tests.
"""
import os
import shutil
import tempfile

import numpy as np
import pytest

from ecodyn.models.config import EnvParams, ModelConfig, PayoffDeltas


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-horizon numerical checks (deselect with -m 'not slow')")


@pytest.fixture(scope="session", autouse=True)
def setup_test_environment():
    """Keep test output quiet and runs single-process unless a test asks otherwise."""
    test_env = {
        'ECODYN_LOG_LEVEL': 'WARNING',
        'ECODYN_THREADS': '1',
    }
    saved = {key: os.environ.get(key) for key in test_env}
    os.environ.update(test_env)

    yield

    for key, value in saved.items():
        if value is None:
            os.environ.pop(key, None)
        else:
            os.environ[key] = value


@pytest.fixture
def baseline():
    """Reference configuration at beta = 6 (limit-cycle regime)."""
    return ModelConfig.baseline(beta=6.0)


@pytest.fixture
def random_configs():
    """Five seeded configurations satisfying the standing assumptions."""
    rng = np.random.default_rng(20240601)
    configs = []
    for _ in range(5):
        delta_sp0 = rng.uniform(-1.5, -0.1)
        deltas = PayoffDeltas(
            delta_tr1=rng.uniform(0.1, 2.0),
            delta_ps1=rng.uniform(0.1, 2.0),
            delta_rt0=abs(delta_sp0) + rng.uniform(0.1, 2.0),
            delta_sp0=delta_sp0
        )
        env = EnvParams(theta=rng.uniform(0.2, 0.95), epsilon=rng.uniform(0.1, 1.0))
        configs.append(ModelConfig(deltas=deltas, env=env, beta=rng.uniform(0.5, 10.0)))
    return configs


@pytest.fixture
def temp_dir():
    """Temporary output directory removed after the test."""
    path = tempfile.mkdtemp()
    yield path
    shutil.rmtree(path, ignore_errors=True)
