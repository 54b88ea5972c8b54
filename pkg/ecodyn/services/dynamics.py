"""
Long-run behaviour of trajectories: fixed points, limit cycles and basins.

Limit cycles are detected on the Poincare section ``x = x_int`` crossed with
x increasing. Every cycle of the logit system encircles the interior fixed
point, so this section is transversal to all of them. Crossings are located on
the cubic Hermite interpolant of each integration step.
"""
import math
from typing import List, Optional, Sequence, Tuple

from loguru import logger
from scipy.optimize import brentq

from ..models.config import DetectionSettings, IntegratorControl, LearningRule, ModelConfig
from ..models.data_models import (
    AttractorKind, AttractorReport, BasinMap, CycleInfo, FixedPoint, State, Trajectory
)
from ..models.errors import ConfigError, InvalidBracketError, NumericalError
from ..utils.workers import parallel_map
from .core_model import interior_x, make_rhs
from .fixed_points import all_fixed_points, hopf_threshold, imitative_fixed_points
from .integrator import RungeKuttaIntegrator, StepSample


class SectionTracker:
    """Records upward crossings of x = x_section and the extrema between them."""

    def __init__(self, x_section: float):
        self.x_section = x_section
        self.returns: List[Tuple[float, float]] = []
        # (x_min, x_max, n_min, n_max) between consecutive crossings
        self.intervals: List[Tuple[float, float, float, float]] = []
        self._prev: Optional[StepSample] = None
        self._extrema = [math.inf, -math.inf, math.inf, -math.inf]

    def update(self, sample: StepSample) -> None:
        prev = self._prev
        x1, n1 = sample[1], sample[2]
        if prev is not None and prev[1] < self.x_section <= x1:
            t_c, n_c = self._locate(prev, sample)
            self._absorb(self.x_section, n_c)
            if self.returns:
                self.intervals.append(tuple(self._extrema))
            self.returns.append((t_c, n_c))
            self._extrema = [self.x_section, self.x_section, n_c, n_c]
        self._absorb(x1, n1)
        self._prev = sample

    def cycle(self, settings: DetectionSettings, since: float = 0.0) -> Optional[CycleInfo]:
        """Converged cycle from the last section returns after ``since``, if any."""
        count = settings.section_returns
        recent = [r for r in self.returns if r[0] >= since][-count:]
        if len(recent) < count or len(self.intervals) < 1:
            return None
        levels = [n for _, n in recent]
        if max(levels) - min(levels) >= settings.section_tol:
            return None
        x_min, x_max, n_min, n_max = self.intervals[-1]
        if n_max - n_min <= settings.min_amplitude:
            return None
        times = [t for t, _ in recent]
        period = (times[-1] - times[0]) / (count - 1)
        return CycleInfo(
            period=period,
            n_min=n_min,
            n_max=n_max,
            x_min=x_min,
            x_max=x_max,
            section_points=tuple(State(self.x_section, n) for n in levels),
            converged=True
        )

    def _absorb(self, x: float, n: float) -> None:
        e = self._extrema
        if x < e[0]:
            e[0] = x
        if x > e[1]:
            e[1] = x
        if n < e[2]:
            e[2] = n
        if n > e[3]:
            e[3] = n

    def _locate(self, a: StepSample, b: StepSample) -> Tuple[float, float]:
        h = b[0] - a[0]

        def hermite(s: float, y0: float, f0: float, y1: float, f1: float) -> float:
            s2, s3 = s * s, s * s * s
            return ((2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * h * f0
                    + (-2 * s3 + 3 * s2) * y1 + (s3 - s2) * h * f1)

        def offset(s: float) -> float:
            return hermite(s, a[1], a[3], b[1], b[3]) - self.x_section

        if offset(1.0) == 0.0:
            s = 1.0
        else:
            s = brentq(offset, 0.0, 1.0, xtol=1e-14)
        return a[0] + s * h, hermite(s, a[2], a[4], b[2], b[4])


def poincare_returns(config: ModelConfig, trajectory: Trajectory,
                     x_section: Optional[float] = None) -> List[Tuple[float, float]]:
    """Upward crossings (t, n) of x = x_section along a recorded trajectory."""
    rhs = make_rhs(config)
    tracker = SectionTracker(interior_x(config.env) if x_section is None else x_section)
    for t, s in zip(trajectory.times, trajectory.states):
        fx, fn = rhs(s.x, s.n)
        tracker.update((t, s.x, s.n, fx, fn))
    return list(tracker.returns)


class DynamicsAnalyzer:
    """Integrates one configuration and classifies where its trajectories end up."""

    def __init__(self, config: ModelConfig,
                 control: IntegratorControl = IntegratorControl(),
                 settings: DetectionSettings = DetectionSettings()):
        self.config = config
        self.control = control
        self.settings = settings
        self._fixed_points: Optional[List[FixedPoint]] = None

    @property
    def fixed_points(self) -> List[FixedPoint]:
        """Candidate equilibria for attractor matching (computed once)."""
        if self._fixed_points is None:
            try:
                if self.config.rule == LearningRule.LOGIT:
                    self._fixed_points = all_fixed_points(self.config)
                else:
                    self._fixed_points = imitative_fixed_points(self.config)
            except NumericalError as e:
                logger.warning(f"Fixed points unavailable at beta={self.config.beta:.6g}: {e}")
                self._fixed_points = []
        return self._fixed_points

    def integrate(self, s0: State, t_end: float) -> Trajectory:
        """Integrate from s0 over [0, t_end] with this analyzer's step control."""
        return RungeKuttaIntegrator(self.config, self.control).integrate(s0, t_end)

    def detect_attractor(self, s0: State, budget: Optional[float] = None) -> AttractorReport:
        """
        Classify the attractor reached from s0.

        After the transient, the trajectory is checked every ``dwell`` time units:
        it is at a fixed point when it stayed within ``fixed_point_tol`` of one for
        the whole window, and on a limit cycle when the last section returns agree
        to ``section_tol``. Neither within the budget gives ``undecided``.
        """
        settings = self.settings
        budget = settings.budget if budget is None else budget
        transient = min(settings.transient, 0.5 * budget)
        fixed_points = self.fixed_points
        targets = [(fp.location.x, fp.location.n) for fp in fixed_points]
        # largest distance to each candidate over the current dwell window
        window = [0.0] * len(targets)

        tracker = SectionTracker(interior_x(self.config.env))
        integrator = RungeKuttaIntegrator(self.config, self.control)
        next_check = transient + settings.dwell

        for sample in integrator.steps(s0, budget):
            tracker.update(sample)
            t, x, n = sample[0], sample[1], sample[2]
            if t < transient:
                continue
            for i, (fx, fn) in enumerate(targets):
                distance = max(abs(x - fx), abs(n - fn))
                if distance > window[i]:
                    window[i] = distance
            if t < next_check:
                continue

            for i, fp in enumerate(fixed_points):
                if window[i] < settings.fixed_point_tol:
                    logger.debug(f"beta={self.config.beta:.6g} s0={s0}: fixed point {fp.family.value} at t={t:.1f}")
                    return AttractorReport(kind=AttractorKind.FIXED_POINT, fixed_point=fp,
                                           transient_time=t - settings.dwell)
            cycle = tracker.cycle(settings, since=transient)
            if cycle is not None:
                logger.debug(f"beta={self.config.beta:.6g} s0={s0}: limit cycle, period {cycle.period:.4f}")
                return AttractorReport(kind=AttractorKind.LIMIT_CYCLE, cycle=cycle,
                                       transient_time=t - settings.section_returns * cycle.period)
            window = [0.0] * len(targets)
            next_check += settings.dwell

        logger.debug(f"beta={self.config.beta:.6g} s0={s0}: undecided after {budget}")
        return AttractorReport(kind=AttractorKind.UNDECIDED, transient_time=budget)

    def limit_cycle(self, s0: State) -> Optional[CycleInfo]:
        """Converged limit cycle reached from s0, or None."""
        report = self.detect_attractor(s0)
        return report.cycle if report.kind == AttractorKind.LIMIT_CYCLE else None

    def basin_sample(self, resolution: Tuple[int, int]) -> BasinMap:
        """Attractor label for every point of a uniform interior lattice."""
        nx, nn = resolution
        if nx < 4 or nn < 4:
            raise ConfigError(f"Basin resolution must be at least 4x4, got {nx}x{nn}")
        points = lattice(nx, nn)
        tasks = [(self.config, self.control, self.settings, p) for p in points]
        reports = parallel_map(_detect_task, tasks)
        basin = BasinMap(grid=[(p, r.label) for p, r in zip(points, reports)], resolution=(nx, nn))
        logger.info(f"Basin map at beta={self.config.beta:.6g}: {basin.counts()}")
        return basin

    def portrait(self, grid: int, t_end: float,
                 with_imitative: bool = False) -> List[Tuple[int, Trajectory]]:
        """Trajectories from a grid x grid lattice of initial conditions."""
        if grid < 1:
            raise ConfigError(f"Portrait grid must be at least 1, got {grid}")
        points = lattice(grid, grid)
        configs = [self.config]
        if with_imitative:
            configs.append(self.config.with_rule(LearningRule.IMITATIVE))
        tasks = [(cfg, self.control, p, t_end) for cfg in configs for p in points]
        trajectories = parallel_map(_integrate_task, tasks)
        ids = [i for _ in configs for i in range(len(points))]
        return list(zip(ids, trajectories))


def estimate_beta_u(params: ModelConfig, bracket: Tuple[float, float],
                    control: IntegratorControl = IntegratorControl(),
                    settings: DetectionSettings = DetectionSettings()) -> float:
    """
    Locate the rationality at which the limit cycle seen from the reference state disappears.

    Oscillation is taken to persist while the reference trajectory does not
    settle on a fixed point within the detection budget.

    Raises:
        ConfigError: the bracket is empty or does not lie above beta_h
        InvalidBracketError: both ends show the same outcome
    """
    lo, hi = bracket
    if not lo < hi:
        raise ConfigError(f"beta_u bracket must satisfy lo < hi, got ({lo}, {hi})")
    beta_h = hopf_threshold(params)
    if beta_h is not None and lo <= beta_h:
        raise ConfigError(f"beta_u bracket must lie above beta_h = {beta_h:.6g}, got lo = {lo}")
    reference = State(*settings.reference_state)

    def oscillates(beta: float) -> bool:
        report = DynamicsAnalyzer(params.with_beta(beta), control, settings).detect_attractor(reference)
        if report.kind == AttractorKind.UNDECIDED:
            logger.debug(f"Undecided outcome at beta={beta:.6g}; counted as oscillating")
        return report.kind != AttractorKind.FIXED_POINT

    at_lo, at_hi = oscillates(lo), oscillates(hi)
    if at_lo == at_hi:
        raise InvalidBracketError(
            f"Bracket ({lo}, {hi}) has the same outcome at both ends (oscillating={at_lo})")
    while hi - lo > settings.beta_u_width:
        mid = 0.5 * (lo + hi)
        if oscillates(mid) == at_lo:
            lo = mid
        else:
            hi = mid
    beta_u = 0.5 * (lo + hi)
    logger.info(f"Cycle collapse estimated at beta_u={beta_u:.4f}")
    return beta_u


def lattice(nx: int, nn: int) -> List[State]:
    """Cell-centred uniform lattice of the open unit square."""
    return [State((i + 0.5) / nx, (j + 0.5) / nn) for j in range(nn) for i in range(nx)]


def _detect_task(args: Sequence) -> AttractorReport:
    config, control, settings, s0 = args
    return DynamicsAnalyzer(config, control, settings).detect_attractor(s0)


def _integrate_task(args: Sequence) -> Trajectory:
    config, control, s0, t_end = args
    return RungeKuttaIntegrator(config, control).integrate(s0, t_end)
