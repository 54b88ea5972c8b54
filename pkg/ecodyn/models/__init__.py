"""
Models package for the ecodyn analyses.
"""
from .config import (
    LearningRule, PayoffDeltas, EnvParams, ModelConfig,
    IntegratorControl, DetectionSettings, WorkerConfig, RunConfig
)
from .data_models import (
    State, LinearCoeffs, AssumptionReport, FixedPoint, FixedPointFamily, Stability,
    Thresholds, Trajectory, CycleInfo, AttractorKind, AttractorReport, BasinMap,
    Regime, SweepRecord, SweepResult, AbmConfig, AbmTrajectory, DeviationStats, CsvTable
)

__all__ = [
    'LearningRule', 'PayoffDeltas', 'EnvParams', 'ModelConfig',
    'IntegratorControl', 'DetectionSettings', 'WorkerConfig', 'RunConfig',
    'State', 'LinearCoeffs', 'AssumptionReport', 'FixedPoint', 'FixedPointFamily', 'Stability',
    'Thresholds', 'Trajectory', 'CycleInfo', 'AttractorKind', 'AttractorReport', 'BasinMap',
    'Regime', 'SweepRecord', 'SweepResult', 'AbmConfig', 'AbmTrajectory', 'DeviationStats', 'CsvTable'
]
