"""
Tests for attractor detection, limit cycles, basins and the cycle-collapse estimate.
"""
import math

import numpy as np
import pytest

from ecodyn.models.config import DetectionSettings, IntegratorControl, LearningRule, ModelConfig
from ecodyn.models.data_models import AttractorKind, FixedPointFamily, State
from ecodyn.models.errors import ConfigError, InvalidBracketError
from ecodyn.services.dynamics import (
    DynamicsAnalyzer, SectionTracker, estimate_beta_u, lattice, poincare_returns
)
from ecodyn.services.fixed_points import interior_fixed_point

REFERENCE = State(0.6, 0.6)


def _circle_sample(t):
    """Exact samples of a circle of radius 0.1 around (0.5, 0.5), traversed counter-clockwise in x."""
    return (t, 0.5 + 0.1 * math.sin(t), 0.5 + 0.1 * math.cos(t), 0.1 * math.cos(t), -0.1 * math.sin(t))


class TestSectionTracker:
    """Crossing location on the Hermite interpolant."""

    def test_upward_crossings_of_circle(self):
        tracker = SectionTracker(0.5)
        for t in np.arange(0.05, 30.0, 0.1):
            tracker.update(_circle_sample(t))
        times = [t for t, _ in tracker.returns]
        assert len(times) == 4
        for k, t in enumerate(times, start=1):
            assert t == pytest.approx(2 * math.pi * k, abs=1e-5)
        for _, n in tracker.returns:
            assert n == pytest.approx(0.6, abs=1e-5)

    def test_interval_extrema(self):
        tracker = SectionTracker(0.5)
        for t in np.arange(0.05, 30.0, 0.01):
            tracker.update(_circle_sample(t))
        x_min, x_max, n_min, n_max = tracker.intervals[-1]
        assert x_min == pytest.approx(0.4, abs=1e-4)
        assert x_max == pytest.approx(0.6, abs=1e-4)
        assert n_min == pytest.approx(0.4, abs=1e-4)
        assert n_max == pytest.approx(0.6, abs=1e-4)

    def test_converged_cycle_from_returns(self):
        tracker = SectionTracker(0.5)
        for t in np.arange(0.05, 40.0, 0.01):
            tracker.update(_circle_sample(t))
        cycle = tracker.cycle(DetectionSettings())
        assert cycle is not None
        assert cycle.period == pytest.approx(2 * math.pi, abs=1e-6)
        assert cycle.amplitude == pytest.approx(0.2, abs=1e-4)
        assert len(cycle.section_points) == 5

    def test_too_few_returns(self):
        tracker = SectionTracker(0.5)
        for t in np.arange(0.05, 20.0, 0.01):
            tracker.update(_circle_sample(t))
        assert tracker.cycle(DetectionSettings()) is None


class TestDetectAttractor:
    """Long-run classification from single initial conditions."""

    def test_limit_cycle_regime(self):
        analyzer = DynamicsAnalyzer(ModelConfig.baseline(beta=6.0))
        report = analyzer.detect_attractor(REFERENCE)
        assert report.kind == AttractorKind.LIMIT_CYCLE
        assert report.label == "cycle"
        cycle = report.cycle
        assert cycle.converged
        assert cycle.period > 0
        assert cycle.encircles(interior_fixed_point(analyzer.config).location)

    def test_tragedy_regime(self):
        report = DynamicsAnalyzer(ModelConfig.baseline(beta=8.0)).detect_attractor(REFERENCE)
        assert report.kind == AttractorKind.FIXED_POINT
        assert report.fixed_point.family == FixedPointFamily.TOC1
        assert report.label == "fp:toc1"
        assert report.fixed_point.location.x == pytest.approx(0.027768, abs=1e-5)

    def test_interior_regime(self):
        report = DynamicsAnalyzer(ModelConfig.baseline(beta=2.0)).detect_attractor(REFERENCE)
        assert report.kind == AttractorKind.FIXED_POINT
        assert report.fixed_point.family == FixedPointFamily.INTERIOR

    def test_perturbed_stable_point_returns(self):
        config = ModelConfig.baseline(beta=3.0)
        fp = interior_fixed_point(config)
        start = State(fp.location.x + 1e-4, fp.location.n - 1e-4)
        report = DynamicsAnalyzer(config).detect_attractor(start)
        assert report.kind == AttractorKind.FIXED_POINT
        assert report.fixed_point.family == FixedPointFamily.INTERIOR

    def test_short_budget_is_undecided(self):
        report = DynamicsAnalyzer(ModelConfig.baseline(beta=6.0)).detect_attractor(REFERENCE, budget=20.0)
        assert report.kind == AttractorKind.UNDECIDED
        assert report.label == "undecided"

    def test_imitative_rule_reaches_tragedy_corner(self):
        analyzer = DynamicsAnalyzer(ModelConfig.baseline(rule=LearningRule.IMITATIVE))
        report = analyzer.detect_attractor(REFERENCE)
        assert report.kind == AttractorKind.FIXED_POINT
        assert report.fixed_point.location.as_tuple() == (0.0, 0.0)


class TestLimitCycle:
    """Cycle measurements past the Hopf threshold."""

    def test_absent_below_hopf(self):
        assert DynamicsAnalyzer(ModelConfig.baseline(beta=5.0)).limit_cycle(REFERENCE) is None

    def test_amplitude_grows_with_rationality(self):
        amplitudes = []
        for beta in (6.0, 6.5, 7.0):
            cycle = DynamicsAnalyzer(ModelConfig.baseline(beta=beta)).limit_cycle(REFERENCE)
            assert cycle is not None
            amplitudes.append(cycle.amplitude)
        assert amplitudes[0] < amplitudes[1] < amplitudes[2]

    def test_envelope_insensitive_to_tolerances(self):
        config = ModelConfig.baseline(beta=6.0)
        default = DynamicsAnalyzer(config).limit_cycle(REFERENCE)
        looser = DynamicsAnalyzer(
            config, IntegratorControl(method='rkf45'), DetectionSettings(section_tol=1e-5)
        ).limit_cycle(REFERENCE)
        assert abs(default.n_min - looser.n_min) < 1e-3
        assert abs(default.n_max - looser.n_max) < 1e-3
        assert default.period == pytest.approx(looser.period, rel=1e-3)

    def test_poincare_returns_along_trajectory(self):
        config = ModelConfig.baseline(beta=6.0)
        trajectory = DynamicsAnalyzer(config).integrate(REFERENCE, 300.0)
        returns = poincare_returns(config, trajectory)
        assert len(returns) >= 10
        times = [t for t, _ in returns]
        assert all(b > a for a, b in zip(times, times[1:]))
        last = [n for _, n in returns[-3:]]
        assert max(last) - min(last) < 1e-3


class TestBasins:
    """Basin sampling on a uniform lattice."""

    def test_lattice(self):
        points = lattice(4, 4)
        assert len(points) == 16
        assert points[0] == State(0.125, 0.125)
        assert points[1] == State(0.375, 0.125)
        assert points[-1] == State(0.875, 0.875)

    def test_resolution_too_small(self):
        with pytest.raises(ConfigError):
            DynamicsAnalyzer(ModelConfig.baseline(beta=2.0)).basin_sample((3, 10))

    def test_single_interior_basin(self):
        basin = DynamicsAnalyzer(ModelConfig.baseline(beta=2.0)).basin_sample((4, 4))
        assert basin.resolution == (4, 4)
        assert basin.counts() == {"fp:interior": 16}

    def test_single_tragedy_basin(self):
        basin = DynamicsAnalyzer(ModelConfig.baseline(beta=8.0)).basin_sample((4, 4))
        assert set(basin.labels()) == {"fp:toc1"}

    @pytest.mark.slow
    def test_tragedy_basin_fine_lattice(self):
        basin = DynamicsAnalyzer(ModelConfig.baseline(beta=8.0)).basin_sample((20, 20))
        assert basin.counts() == {"fp:toc1": 400}

    @pytest.mark.slow
    def test_bistable_basins(self):
        basin = DynamicsAnalyzer(ModelConfig.baseline(beta=7.75)).basin_sample((20, 20))
        labels = set(basin.labels())
        assert "cycle" in labels
        assert "fp:toc1" in labels


class TestPortrait:
    """Trajectory bundles for phase portraits."""

    def test_paired_rules(self):
        trajectories = DynamicsAnalyzer(ModelConfig.baseline(beta=6.0)).portrait(2, 5.0, with_imitative=True)
        assert [ic for ic, _ in trajectories] == [0, 1, 2, 3, 0, 1, 2, 3]
        rules = [traj.rule for _, traj in trajectories]
        assert rules == [LearningRule.LOGIT] * 4 + [LearningRule.IMITATIVE] * 4
        assert trajectories[0][1].states[0] == State(0.25, 0.25)
        assert all(traj.times[-1] == 5.0 for _, traj in trajectories)

    def test_invalid_grid(self):
        with pytest.raises(ConfigError):
            DynamicsAnalyzer(ModelConfig.baseline()).portrait(0, 5.0)


class TestCycleCollapse:
    """Bisection for the rationality at which the cycle disappears."""

    def test_same_outcome_bracket(self):
        with pytest.raises(InvalidBracketError):
            estimate_beta_u(ModelConfig.baseline(), (8.5, 9.5))

    @pytest.mark.parametrize("bracket", [(8.0, 7.0), (7.5, 7.5), (2.0, 8.0), (5.0, 7.0)])
    def test_bracket_validated(self, bracket):
        with pytest.raises(ConfigError):
            estimate_beta_u(ModelConfig.baseline(), bracket)

    @pytest.mark.slow
    def test_reference_collapse(self):
        beta_u = estimate_beta_u(ModelConfig.baseline(), (7.0, 8.0))
        assert beta_u == pytest.approx(7.84, abs=0.1)
