"""
ecodyn - Logit learning in a feedback-evolving game with a tipping-point environment.
"""
__version__ = "1.0.0"

from .models.config import ModelConfig, PayoffDeltas, EnvParams, LearningRule  # noqa: E402
from .models.data_models import State, FixedPoint, Trajectory  # noqa: E402
from .services.dynamics import DynamicsAnalyzer  # noqa: E402
from .services.bifurcation_sweep import BifurcationSweep  # noqa: E402

__all__ = [
    "ModelConfig",
    "PayoffDeltas",
    "EnvParams",
    "LearningRule",
    "State",
    "FixedPoint",
    "Trajectory",
    "DynamicsAnalyzer",
    "BifurcationSweep"
]
