"""
CSV emission and ingestion for the ecodyn command-line tools.

Every table starts with '#'-prefixed comment lines carrying the artifact
version and the effective configuration, followed by a fixed header row.
Reals are rendered with 12 significant digits so repeated runs produce
byte-identical files.
"""
import csv
import io
import math
import sys
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .. import __version__
from ..models.data_models import (
    AbmTrajectory, AssumptionReport, CsvTable, CycleInfo, DeviationStats, FixedPoint,
    FixedPointFamily, LinearCoeffs, Regime, Stability, State, SweepRecord, SweepResult,
    Thresholds, Trajectory
)
from ..models.config import LearningRule
from .abm_oracle import sample_on_grid

COEFFS_COLUMNS = ['a', 'b', 'c', 'd', 'D', 'n_bar', 'x0', 'a1', 'a2', 'a3']
FIXED_POINT_COLUMNS = ['beta', 'family', 'x', 'n', 'eig1_re', 'eig1_im', 'eig2_re', 'eig2_im', 'stability']
THRESHOLD_COLUMNS = ['beta_int', 'beta_hat', 'beta_h', 'beta_u']
TRAJECTORY_COLUMNS = ['t', 'x', 'n', 'source']
SWEEP_COLUMNS = ['beta', 'family', 'x', 'n', 'n_min', 'n_max', 'period', 'stability', 'regime']
PORTRAIT_COLUMNS = ['ic', 't', 'x', 'n', 'source']

CYCLE_MARKER = 'cycle'
ERROR_MARKER = 'error'
AMBIGUOUS_MARKER = 'ambiguous'
_RULES = {rule.value for rule in LearningRule}


def format_value(value: Any) -> str:
    """Render one CSV cell."""
    if value is None:
        return ''
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return ''
        # -0.0 and 0.0 render identically
        return f"{value + 0.0:.12g}"
    return str(value)


class CSVProcessor:
    """Builds, writes and reads the tables emitted by the CLI."""

    def __init__(self, command: str = '', header_items: Sequence[Tuple[str, str]] = ()):
        self.command = command
        self.header_items = list(header_items)

    def preamble(self, extra: Sequence[Tuple[str, Any]] = ()) -> List[str]:
        """Comment lines: artifact version, command, effective config and command options."""
        lines = [f"ecodyn {__version__}"]
        if self.command:
            lines.append(f"command={self.command}")
        lines.extend(f"{key}={value}" for key, value in self.header_items)
        lines.extend(f"{key}={format_value(value)}" for key, value in extra)
        return lines

    def render(self, table: CsvTable) -> str:
        """Render a table to text with '\\n' line endings."""
        buffer = io.StringIO()
        for line in table.preamble:
            buffer.write(f"# {line}\n")
        writer = csv.writer(buffer, lineterminator='\n')
        writer.writerow(table.columns)
        for row in table.rows:
            writer.writerow([format_value(v) for v in row])
        for line in table.footer:
            buffer.write(f"# {line}\n")
        return buffer.getvalue()

    def write_table(self, table: CsvTable, csv_path: Optional[str] = None) -> None:
        """Write a table to csv_path, or to stdout when no path is given."""
        text = self.render(table)
        if csv_path is None or csv_path == '-':
            sys.stdout.write(text)
            sys.stdout.flush()
            return
        # Ensure CSV directory exists
        Path(csv_path).parent.mkdir(parents=True, exist_ok=True)
        with open(csv_path, 'w', newline='', encoding='utf-8') as csvfile:
            csvfile.write(text)

    def read_table(self, csv_path: str) -> pd.DataFrame:
        """Read the data rows of an emitted table, skipping comment lines."""
        if not Path(csv_path).exists():
            raise FileNotFoundError(f"CSV file not found: {csv_path}")
        return pd.read_csv(csv_path, comment='#')

    def read_comments(self, csv_path: str) -> Dict[str, str]:
        """key=value pairs from the preamble and footer comment lines."""
        if not Path(csv_path).exists():
            raise FileNotFoundError(f"CSV file not found: {csv_path}")
        items = {}
        with open(csv_path, 'r', encoding='utf-8') as csvfile:
            for line in csvfile:
                if not line.startswith('#'):
                    continue
                body = line[1:].strip()
                if '=' in body:
                    key, value = body.split('=', 1)
                    items[key.strip()] = value.strip()
        return items

    def get_csv_summary(self, csv_path: str) -> Dict[str, Any]:
        """Summary information about an emitted table."""
        df = self.read_table(csv_path)
        summary = {'total_rows': len(df), 'columns': list(df.columns)}
        for column in ('family', 'source', 'regime'):
            if column in df.columns:
                summary[f"{column}_counts"] = df[column].value_counts().to_dict()
        return summary

    # Table builders

    def coeffs_table(self, coeffs: LinearCoeffs, report: AssumptionReport) -> CsvTable:
        row = [coeffs.a, coeffs.b, coeffs.c, coeffs.d, coeffs.D, coeffs.n_bar, coeffs.x0,
               report.a1_holds, report.a2_holds, report.a3_holds]
        return CsvTable(columns=list(COEFFS_COLUMNS), rows=[row], preamble=self.preamble(),
                        footer=[f"assumptions: {report.detail}"])

    def fixed_points_table(self, beta: float, points: Iterable[FixedPoint],
                           errors: Sequence[str] = ()) -> CsvTable:
        rows = [[point.to_dict(beta)[c] for c in FIXED_POINT_COLUMNS] for point in points]
        for _ in errors:
            rows.append([beta, ERROR_MARKER] + [None] * (len(FIXED_POINT_COLUMNS) - 2))
        return CsvTable(columns=list(FIXED_POINT_COLUMNS), rows=rows,
                        preamble=self.preamble([('beta', beta)]),
                        footer=[f"error: {message}" for message in errors])

    def thresholds_table(self, limits: Thresholds, beta_u: Optional[float] = None,
                         errors: Sequence[str] = ()) -> CsvTable:
        row = [limits.beta_int, limits.beta_hat, limits.beta_h, beta_u]
        return CsvTable(columns=list(THRESHOLD_COLUMNS), rows=[row], preamble=self.preamble(),
                        footer=[f"error: {message}" for message in errors])

    def trajectory_table(self, trajectories: Sequence[Tuple[Trajectory, str]],
                         extra: Sequence[Tuple[str, Any]] = ()) -> CsvTable:
        rows = []
        footer = []
        for trajectory, source in trajectories:
            rows.extend([t, s.x, s.n, source] for t, s in zip(trajectory.times, trajectory.states))
            footer.append(f"{source}: steps_accepted={trajectory.steps_accepted} "
                          f"steps_rejected={trajectory.steps_rejected}")
        return CsvTable(columns=list(TRAJECTORY_COLUMNS), rows=rows,
                        preamble=self.preamble(extra), footer=footer)

    def sweep_table(self, result: SweepResult, extra: Sequence[Tuple[str, Any]] = ()) -> CsvTable:
        rows = []
        for record in result.records:
            regime = AMBIGUOUS_MARKER if record.ambiguous else record.regime
            if record.error and not record.fixed_points:
                rows.append([record.beta, ERROR_MARKER, None, None, None, None, None, None, regime])
                continue
            for point in record.fixed_points:
                rows.append([record.beta, point.family, point.location.x, point.location.n,
                             None, None, None, point.stability, regime])
            if record.cycle is not None:
                cycle = record.cycle
                rows.append([record.beta, CYCLE_MARKER, None, None, cycle.n_min, cycle.n_max,
                             cycle.period, None, regime])

        limits = result.thresholds
        footer = [
            f"beta_int={format_value(limits.beta_int)}",
            f"beta_hat={format_value(limits.beta_hat)}",
            f"beta_h={format_value(limits.beta_h)}",
            f"beta_u={format_value(result.beta_u)}"
        ]
        for record in result.records:
            if record.error:
                footer.append(f"error at beta={format_value(record.beta)}: {record.error}")
            for anomaly in record.anomalies:
                footer.append(f"anomaly at beta={format_value(record.beta)}: {anomaly}")
        return CsvTable(columns=list(SWEEP_COLUMNS), rows=rows,
                        preamble=self.preamble(extra), footer=footer)

    def portrait_table(self, trajectories: Sequence[Tuple[int, Trajectory]],
                       extra: Sequence[Tuple[str, Any]] = ()) -> CsvTable:
        rows = []
        for ic, trajectory in trajectories:
            source = trajectory.rule.value
            rows.extend([ic, t, s.x, s.n, source] for t, s in zip(trajectory.times, trajectory.states))
        return CsvTable(columns=list(PORTRAIT_COLUMNS), rows=rows, preamble=self.preamble(extra))

    def abm_table(self, abm: AbmTrajectory, ode: Trajectory, stats: DeviationStats,
                  times: Sequence[float], extra: Sequence[Tuple[str, Any]] = ()) -> CsvTable:
        """ABM path sampled on the given grid, then the ODE path on the same grid."""
        x_abm, n_abm = sample_on_grid(abm, times)
        rows = [[t, x, n, 'abm'] for t, x, n in zip(times, x_abm, n_abm)]
        ode_times = set(times)
        rows.extend([t, s.x, s.n, ode.rule.value]
                    for t, s in zip(ode.times, ode.states) if t in ode_times)
        footer = [f"{key}={format_value(value)}" for key, value in stats.to_dict().items()]
        footer.append(f"revision_count={abm.revision_count}")
        footer.append(f"clamp_events={abm.clamp_events}")
        return CsvTable(columns=list(TRAJECTORY_COLUMNS), rows=rows,
                        preamble=self.preamble(extra), footer=footer)

    # Parsers back to records

    def parse_coeffs(self, df: pd.DataFrame) -> Tuple[LinearCoeffs, Tuple[bool, bool, bool]]:
        row = df.iloc[0]
        coeffs = LinearCoeffs(
            a=float(row['a']), b=float(row['b']), c=float(row['c']), d=float(row['d']),
            D=float(row['D']), n_bar=_optional_float(row['n_bar']), x0=_optional_float(row['x0'])
        )
        flags = tuple(_parse_bool(row[c]) for c in ('a1', 'a2', 'a3'))
        return coeffs, flags

    def parse_fixed_points(self, df: pd.DataFrame) -> List[Tuple[float, FixedPoint]]:
        points = []
        for _, row in df.iterrows():
            if row['family'] == ERROR_MARKER:
                continue
            points.append((float(row['beta']), FixedPoint.from_dict(row.to_dict())))
        return points

    def parse_thresholds(self, df: pd.DataFrame) -> Tuple[Thresholds, Optional[float]]:
        row = df.iloc[0]
        limits = Thresholds(
            beta_int=_optional_float(row['beta_int']),
            beta_hat=_optional_float(row['beta_hat']),
            beta_h=_optional_float(row['beta_h'])
        )
        return limits, _optional_float(row['beta_u'])

    def parse_trajectories(self, df: pd.DataFrame) -> Dict[str, Trajectory]:
        """One Trajectory per source value, in file order."""
        trajectories = {}
        for source, group in df.groupby('source', sort=False):
            rule = LearningRule(source) if source in _RULES else LearningRule.LOGIT
            trajectories[source] = Trajectory(
                times=[float(t) for t in group['t']],
                states=[State(float(x), float(n)) for x, n in zip(group['x'], group['n'])],
                steps_accepted=max(len(group) - 1, 0),
                steps_rejected=0,
                rule=rule
            )
        return trajectories

    def parse_sweep(self, df: pd.DataFrame) -> List[SweepRecord]:
        records = []
        for beta, group in df.groupby('beta', sort=False):
            record = SweepRecord(beta=float(beta))
            for _, row in group.iterrows():
                family = row['family']
                if family == ERROR_MARKER:
                    record.error = ERROR_MARKER
                elif family == CYCLE_MARKER:
                    record.cycle = CycleInfo(
                        period=float(row['period']), n_min=float(row['n_min']), n_max=float(row['n_max']),
                        x_min=math.nan, x_max=math.nan, section_points=(), converged=True
                    )
                else:
                    stability = row['stability']
                    record.fixed_points.append(FixedPoint(
                        location=State(float(row['x']), float(row['n'])),
                        family=FixedPointFamily(family),
                        stability=Stability(stability) if isinstance(stability, str) and stability else None
                    ))
            regime = group['regime'].iloc[0]
            if regime == AMBIGUOUS_MARKER:
                record.ambiguous = True
            elif isinstance(regime, str) and regime:
                record.regime = Regime(regime)
            records.append(record)
        return records


def _optional_float(value: Any) -> Optional[float]:
    if value is None or (isinstance(value, float) and math.isnan(value)) or value == '':
        return None
    return float(value)


def _parse_bool(value: Any) -> bool:
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    return str(value).strip().lower() == 'true'
