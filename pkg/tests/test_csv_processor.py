"""
Tests for CSV emission and parsing.
"""
import os
import shutil
import tempfile

import pytest

from ecodyn import __version__
from ecodyn.models.config import LearningRule, ModelConfig
from ecodyn.models.data_models import (
    AbmTrajectory, CsvTable, CycleInfo, DeviationStats, FixedPoint, FixedPointFamily, Regime,
    Stability, State, SweepRecord, SweepResult, Thresholds
)
from ecodyn.models.errors import RootFindingError
from ecodyn.services.core_model import check_assumptions, derive_coeffs
from ecodyn.services.csv_processor import CSVProcessor, format_value
from ecodyn.services.fixed_points import all_fixed_points, thresholds
from ecodyn.services.integrator import integrate


class TestFormatValue:
    """Cell rendering."""

    def test_reals(self):
        assert format_value(1 / 3) == '0.333333333333'
        assert format_value(-0.0) == '0'
        assert format_value(2.0) == '2'
        assert format_value(1.5e-11) == '1.5e-11'

    def test_missing_values(self):
        assert format_value(None) == ''
        assert format_value(float('nan')) == ''

    def test_flags_and_labels(self):
        assert format_value(True) == 'true'
        assert format_value(False) == 'false'
        assert format_value(Stability.SADDLE) == 'saddle'
        assert format_value(7) == '7'


class TestCSVProcessor:
    """Table builders, writing and parsing."""

    def setup_method(self):
        """Set up test fixtures."""
        self.temp_dir = tempfile.mkdtemp()
        self.processor = CSVProcessor('test', [('beta', '6'), ('rule', 'logit')])
        self.config = ModelConfig.baseline(beta=8.0)

    def teardown_method(self):
        """Clean up test fixtures."""
        shutil.rmtree(self.temp_dir, ignore_errors=True)

    def _roundtrip(self, table, name):
        path = os.path.join(self.temp_dir, name)
        self.processor.write_table(table, path)
        return path, self.processor.read_table(path)

    def test_render_layout(self):
        table = CsvTable(columns=['a', 'b'], rows=[[1.0, None]], preamble=self.processor.preamble([('k', 0.5)]),
                         footer=['done=1'])
        lines = self.processor.render(table).split('\n')
        assert lines[0] == f"# ecodyn {__version__}"
        assert lines[1] == "# command=test"
        assert lines[2] == "# beta=6"
        assert lines[3] == "# rule=logit"
        assert lines[4] == "# k=0.5"
        assert lines[5] == "a,b"
        assert lines[6] == "1,"
        assert lines[7] == "# done=1"

    def test_write_creates_parent_directory(self):
        path = os.path.join(self.temp_dir, 'nested', 'deeper', 'out.csv')
        self.processor.write_table(CsvTable(columns=['a'], rows=[[1]]), path)
        assert os.path.exists(path)

    def test_write_to_stdout(self, capsys):
        self.processor.write_table(CsvTable(columns=['a'], rows=[[2.5]]))
        out = capsys.readouterr().out
        assert out.endswith("a\n2.5\n")

    def test_missing_file(self):
        with pytest.raises(FileNotFoundError):
            self.processor.read_table(os.path.join(self.temp_dir, 'absent.csv'))
        with pytest.raises(FileNotFoundError):
            self.processor.read_comments(os.path.join(self.temp_dir, 'absent.csv'))

    def test_coeffs_roundtrip(self):
        coeffs = derive_coeffs(self.config.deltas, self.config.env)
        table = self.processor.coeffs_table(coeffs, check_assumptions(self.config))
        _, df = self._roundtrip(table, 'coeffs.csv')
        parsed, flags = self.processor.parse_coeffs(df)
        assert parsed.a == pytest.approx(coeffs.a, rel=1e-11)
        assert parsed.n_bar == pytest.approx(coeffs.n_bar, rel=1e-11)
        assert parsed.x0 == pytest.approx(0.25)
        assert flags == (True, True, True)

    def test_fixed_points_roundtrip(self):
        points = all_fixed_points(self.config)
        table = self.processor.fixed_points_table(8.0, points)
        path, df = self._roundtrip(table, 'fp.csv')
        assert len(df) == 5
        parsed = self.processor.parse_fixed_points(df)
        for (beta, fp), original in zip(parsed, points):
            assert beta == 8.0
            assert fp.family == original.family
            assert fp.stability == original.stability
            assert fp.location.x == pytest.approx(original.location.x, rel=1e-11)
            assert fp.location.n == pytest.approx(original.location.n, abs=1e-12)
            assert fp.eigenvalues[0].real == pytest.approx(original.eigenvalues[0].real, rel=1e-11)
        assert self.processor.read_comments(path)['beta'] == '8'

    def test_fixed_points_error_rows(self):
        failure = RootFindingError("No sign change in bracket", {'beta': 8.0})
        table = self.processor.fixed_points_table(8.0, all_fixed_points(self.config)[:2], [str(failure)])
        path, df = self._roundtrip(table, 'fp_error.csv')
        assert list(df['family']) == ['toc1', 'toc2', 'error']
        assert len(self.processor.parse_fixed_points(df)) == 2
        with open(path, encoding='utf-8') as handle:
            assert handle.read().rstrip('\n').endswith("# error: No sign change in bracket (beta=8.0)")

    def test_thresholds_roundtrip(self):
        limits = thresholds(self.config)
        _, df = self._roundtrip(self.processor.thresholds_table(limits), 'thresholds.csv')
        parsed, beta_u = self.processor.parse_thresholds(df)
        assert parsed.beta_int == pytest.approx(limits.beta_int, rel=1e-11)
        assert parsed.beta_hat == pytest.approx(limits.beta_hat, rel=1e-11)
        assert parsed.beta_h == pytest.approx(limits.beta_h, rel=1e-11)
        assert beta_u is None

    def test_trajectories_roundtrip(self):
        logit = integrate(self.config, State(0.6, 0.6), 1.0)
        imitative = integrate(self.config.with_rule(LearningRule.IMITATIVE), State(0.6, 0.6), 1.0)
        table = self.processor.trajectory_table([(logit, 'logit'), (imitative, 'imitative')])
        _, df = self._roundtrip(table, 'traj.csv')
        parsed = self.processor.parse_trajectories(df)
        assert list(parsed) == ['logit', 'imitative']
        assert parsed['imitative'].rule == LearningRule.IMITATIVE
        assert len(parsed['logit'].times) == len(logit.times)
        assert parsed['logit'].final_state.x == pytest.approx(logit.final_state.x, rel=1e-11)

    def test_sweep_roundtrip(self):
        cycle = CycleInfo(period=11.25, n_min=0.31, n_max=0.82, x_min=0.2, x_max=0.9,
                          section_points=(), converged=True)
        interior = FixedPoint(State(5 / 9, 0.57), FixedPointFamily.INTERIOR, stability=Stability.UNSTABLE_FOCUS)
        toc = FixedPoint(State(0.52, 0.0), FixedPointFamily.TOC3, stability=Stability.STABLE_NODE)
        records = [
            SweepRecord(beta=0.2, fixed_points=[toc], regime=Regime.TOC_ONLY),
            SweepRecord(beta=6.0, fixed_points=[interior], cycle=cycle, regime=Regime.CYCLE),
            SweepRecord(beta=5.7, ambiguous=True, fixed_points=[interior]),
            SweepRecord(beta=9.0, ambiguous=True, error="No sign change in bracket"),
        ]
        result = SweepResult(params=self.config, records=records,
                             thresholds=Thresholds(beta_int=0.365, beta_hat=7.18, beta_h=5.68), beta_u=7.84)
        path, df = self._roundtrip(self.processor.sweep_table(result), 'sweep.csv')
        parsed = self.processor.parse_sweep(df)
        assert [r.beta for r in parsed] == [0.2, 6.0, 5.7, 9.0]
        assert parsed[0].regime == Regime.TOC_ONLY
        assert parsed[0].fixed_points[0].stability == Stability.STABLE_NODE
        assert parsed[1].cycle.period == pytest.approx(11.25)
        assert parsed[1].cycle.n_max == pytest.approx(0.82)
        assert parsed[2].ambiguous
        assert parsed[3].error is not None
        comments = self.processor.read_comments(path)
        assert comments['beta_u'] == '7.84'
        assert comments['beta_h'] == '5.68'

    def test_abm_table_shares_grid(self):
        ode = integrate(ModelConfig.baseline(beta=2.0), State(0.6, 0.6), 1.0)
        abm = AbmTrajectory(times=[0.0, 0.4, 1.0], x_fraction=[0.6, 0.61, 0.61], n_env=[0.6, 0.6, 0.6],
                            revision_count=1, agents=100)
        stats = DeviationStats(sup_x=0.01, sup_n=0.0, mean_x=0.005, mean_n=0.0, samples=101)
        grid = ode.times[::10]
        table = self.processor.abm_table(abm, ode, stats, grid)
        sources = [row[3] for row in table.rows]
        assert sources == ['abm'] * len(grid) + ['logit'] * len(grid)
        assert [row[0] for row in table.rows[:len(grid)]] == [row[0] for row in table.rows[len(grid):]]
        assert "revision_count=1" in table.footer

    def test_summary(self):
        table = self.processor.fixed_points_table(8.0, all_fixed_points(self.config))
        path, _ = self._roundtrip(table, 'fp.csv')
        summary = self.processor.get_csv_summary(path)
        assert summary['total_rows'] == 5
        assert summary['family_counts']['toc1'] == 1
