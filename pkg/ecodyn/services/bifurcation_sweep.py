"""
Rationality sweep: fixed points, cycles and regimes over a grid of beta values.
"""
from typing import List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from ..models.config import DetectionSettings, IntegratorControl, LearningRule, ModelConfig, WorkerConfig
from ..models.data_models import (
    AttractorKind, FixedPointFamily, Regime, State, SweepRecord, SweepResult
)
from ..models.errors import ConfigError, NumericalError
from ..utils.workers import parallel_map
from .dynamics import DynamicsAnalyzer, estimate_beta_u
from .fixed_points import TOC_FAMILIES, all_fixed_points, thresholds

CYCLE_MARGIN = 0.2
DENSE_WINDOW = 0.5
DENSE_FACTOR = 4

_TRAGEDY = set(TOC_FAMILIES) | {FixedPointFamily.BETA0_TOC}


class BifurcationSweep:
    """
    Recomputes the equilibrium picture independently at every grid value.

    Records are computed in worker processes and returned in grid order.
    """

    def __init__(self, params: ModelConfig,
                 control: IntegratorControl = IntegratorControl(),
                 settings: DetectionSettings = DetectionSettings(),
                 workers: Optional[WorkerConfig] = None):
        if params.rule != LearningRule.LOGIT:
            raise ConfigError("The rationality sweep is defined for the logit rule only")
        self.params = params
        self.control = control
        self.settings = settings
        self.workers = workers

    def sweep(self, beta_grid: Sequence[float], with_beta_u: bool = True) -> SweepResult:
        """
        Build one SweepRecord per grid value.

        Per-record failures are stored on the record and the sweep carries on.
        """
        grid = [float(b) for b in beta_grid]
        _validate_grid(grid)
        limits = thresholds(self.params)

        logger.info(f"Sweeping {len(grid)} beta values on [{grid[0]:.6g}, {grid[-1]:.6g}]")
        tasks = [(self.params, self.control, self.settings, beta, limits.beta_h) for beta in grid]
        records = parallel_map(_record_task, tasks, self.workers)

        for record in records:
            if record.error:
                logger.error(f"beta={record.beta:.6g}: {record.error}")
            for anomaly in record.anomalies:
                logger.warning(f"beta={record.beta:.6g}: {anomaly}")

        beta_u = None
        if with_beta_u:
            beta_u = self._estimate_collapse(records, limits.beta_h)

        result = SweepResult(params=self.params, records=records, thresholds=limits, beta_u=beta_u)
        logger.info(f"Sweep finished: {sum(r.ambiguous for r in records)} ambiguous, "
                    f"{sum(r.error is not None for r in records)} failed records")
        return result

    def _estimate_collapse(self, records: List[SweepRecord], beta_h: Optional[float]) -> Optional[float]:
        for left, right in zip(records, records[1:]):
            if left.cycle is None or right.cycle is not None or right.error:
                continue
            if beta_h is not None and left.beta <= beta_h:
                continue
            try:
                return estimate_beta_u(self.params, (left.beta, right.beta), self.control, self.settings)
            except NumericalError as e:
                logger.error(f"beta_u estimation on ({left.beta:.6g}, {right.beta:.6g}) failed: {e}")
                return None
        logger.info("No cycle-to-no-cycle transition on the grid; beta_u not estimated")
        return None


def compute_record(params: ModelConfig, beta: float,
                   control: IntegratorControl = IntegratorControl(),
                   settings: DetectionSettings = DetectionSettings(),
                   beta_h: Optional[float] = None) -> SweepRecord:
    """Fixed points, optional cycle search and regime at a single beta."""
    config = params.with_beta(beta)
    try:
        record = SweepRecord(beta=beta, fixed_points=all_fixed_points(config))
    except NumericalError as e:
        return SweepRecord(beta=beta, ambiguous=True, error=str(e))

    interior = record.find(FixedPointFamily.INTERIOR)
    near_hopf = beta_h is not None and abs(beta - beta_h) <= CYCLE_MARGIN
    unstable_interior = interior is not None and not (interior.stability and interior.stability.is_stable)
    if unstable_interior or near_hopf:
        try:
            report = DynamicsAnalyzer(config, control, settings).detect_attractor(
                State(*settings.reference_state))
            if report.kind == AttractorKind.LIMIT_CYCLE:
                record.cycle = report.cycle
            elif report.kind == AttractorKind.UNDECIDED:
                record.anomalies.append("attractor from the reference state is undecided")
        except NumericalError as e:
            record.error = f"cycle search failed: {e}"

    return regime_classify(record)


def regime_classify(record: SweepRecord) -> SweepRecord:
    """
    Fill in the regime of a record from its stable fixed points and cycle.

    The tragedy-only regime is split by whether the interior point exists yet:
    ``toc_only`` below beta_int and ``toc_high_beta`` once it has appeared and
    lost stability. Records that fit no row are flagged ambiguous.
    """
    stable = record.stable_points()
    stable_interior = any(fp.family == FixedPointFamily.INTERIOR for fp in stable)
    stable_tragedy = any(fp.family in _TRAGEDY for fp in stable)
    has_cycle = record.cycle is not None and record.cycle.converged

    if len(stable) > 1:
        record.anomalies.append(
            f"{len(stable)} stable fixed points: {', '.join(fp.family.value for fp in stable)}")
    if has_cycle and len(stable) > 1:
        record.anomalies.append("cycle coexists with more than one stable fixed point")

    record.ambiguous = False
    if stable_interior and not has_cycle:
        record.regime = Regime.INTERIOR_STABLE
    elif has_cycle and stable_tragedy:
        record.regime = Regime.BISTABLE_CYCLE_TOC
    elif has_cycle and not stable:
        record.regime = Regime.CYCLE
    elif stable_tragedy and not has_cycle:
        interior_exists = record.find(FixedPointFamily.INTERIOR) is not None
        record.regime = Regime.TOC_HIGH_BETA if interior_exists else Regime.TOC_ONLY
    else:
        record.regime = None
        record.ambiguous = True
    return record


def default_beta_grid(params: ModelConfig, beta_min: float = 0.0, beta_max: float = 10.0,
                      points: int = 200) -> List[float]:
    """Uniform grid refined by a factor of four within 0.5 of every computed threshold."""
    if points < 2:
        raise ConfigError(f"A sweep needs at least 2 points, got {points}")
    if beta_min < 0 or not beta_max > beta_min:
        raise ConfigError(f"Invalid beta range [{beta_min}, {beta_max}]")

    step = (beta_max - beta_min) / (points - 1)
    parts = [np.linspace(beta_min, beta_max, points)]
    limits = thresholds(params)
    for value in (limits.beta_int, limits.beta_h, limits.beta_hat):
        if value is None or not beta_min <= value <= beta_max:
            continue
        lo = max(beta_min, value - DENSE_WINDOW)
        hi = min(beta_max, value + DENSE_WINDOW)
        parts.append(np.arange(lo, hi, step / DENSE_FACTOR))

    grid = np.unique(np.round(np.concatenate(parts), 12))
    return [float(b) for b in grid]


def regime_transitions(result: SweepResult) -> List[Tuple[float, Optional[Regime], Optional[Regime]]]:
    """(beta, previous regime, new regime) wherever the regime changes along the grid."""
    changes = []
    decided = [r for r in result.records if not r.ambiguous]
    for left, right in zip(decided, decided[1:]):
        if left.regime != right.regime:
            changes.append((right.beta, left.regime, right.regime))
    return changes


def _validate_grid(grid: List[float]) -> None:
    if not grid:
        raise ConfigError("Empty beta grid")
    if grid[0] < 0 or any(not np.isfinite(b) for b in grid):
        raise ConfigError("Beta grid values must be finite and non-negative")
    if any(b >= c for b, c in zip(grid, grid[1:])):
        raise ConfigError("Beta grid must be strictly increasing")


def _record_task(args: Sequence) -> SweepRecord:
    params, control, settings, beta, beta_h = args
    return compute_record(params, beta, control, settings, beta_h)
