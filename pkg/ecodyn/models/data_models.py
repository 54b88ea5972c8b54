"""
Core data models for the ecodyn analyses.
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from .config import LearningRule, ModelConfig


class FixedPointFamily(str, Enum):
    """Which branch of the equilibrium set a fixed point belongs to."""
    TOC1 = "toc1"
    TOC2 = "toc2"
    TOC3 = "toc3"
    INTERIOR = "interior"
    PROSPERITY = "prosperity"
    DEGENERATE_LINE = "degenerate_line"
    BETA0_TOC = "beta0_toc"
    BETA0_PROSPERITY = "beta0_prosperity"
    IMITATIVE_CORNER = "imitative_corner"
    IMITATIVE_EDGE = "imitative_edge"
    IMITATIVE_INTERIOR = "imitative_interior"


class Stability(str, Enum):
    """Local stability label derived from the Jacobian eigenvalues."""
    STABLE_NODE = "stable_node"
    STABLE_FOCUS = "stable_focus"
    UNSTABLE_NODE = "unstable_node"
    UNSTABLE_FOCUS = "unstable_focus"
    SADDLE = "saddle"
    CENTER_CANDIDATE = "center_candidate"
    NONHYPERBOLIC = "nonhyperbolic"

    @property
    def is_stable(self) -> bool:
        return self in (Stability.STABLE_NODE, Stability.STABLE_FOCUS)


class Regime(str, Enum):
    """Dynamical regime of a sweep record."""
    TOC_ONLY = "toc_only"
    INTERIOR_STABLE = "interior_stable"
    CYCLE = "cycle"
    BISTABLE_CYCLE_TOC = "bistable_cycle_toc"
    TOC_HIGH_BETA = "toc_high_beta"


class AttractorKind(str, Enum):
    FIXED_POINT = "fixed_point"
    LIMIT_CYCLE = "limit_cycle"
    UNDECIDED = "undecided"


@dataclass(frozen=True)
class State:
    """A point (x, n) of the unit square."""
    x: float
    n: float

    def as_tuple(self) -> Tuple[float, float]:
        return (self.x, self.n)

    def distance(self, other: 'State') -> float:
        """Max-norm distance to another state."""
        return max(abs(self.x - other.x), abs(self.n - other.n))

    def in_unit_square(self, tol: float = 0.0) -> bool:
        return -tol <= self.x <= 1 + tol and -tol <= self.n <= 1 + tol


@dataclass(frozen=True)
class LinearCoeffs:
    """Coefficients of the payoff difference g(x, n) = a*x*n + b*x + c*n + d."""
    a: float
    b: float
    c: float
    d: float
    D: float
    n_bar: Optional[float]
    x0: Optional[float]


@dataclass(frozen=True)
class AssumptionReport:
    """Which of the three standing assumptions hold for a configuration."""
    a1_holds: bool
    a2_holds: bool
    a3_holds: bool
    detail: str

    @property
    def all_hold(self) -> bool:
        return self.a1_holds and self.a2_holds and self.a3_holds


@dataclass(frozen=True)
class FixedPoint:
    """An equilibrium with its family, eigenvalues and stability label."""
    location: State
    family: FixedPointFamily
    eigenvalues: Tuple[complex, complex] = (complex('nan'), complex('nan'))
    stability: Optional[Stability] = None
    residual: float = 0.0
    tangent: bool = False

    def to_dict(self, beta: float) -> Dict[str, Any]:
        """Convert to dictionary for CSV export."""
        eig1, eig2 = self.eigenvalues
        return {
            'beta': beta,
            'family': self.family.value,
            'x': self.location.x,
            'n': self.location.n,
            'eig1_re': eig1.real,
            'eig1_im': eig1.imag,
            'eig2_re': eig2.real,
            'eig2_im': eig2.imag,
            'stability': self.stability.value if self.stability else ''
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'FixedPoint':
        """Create from dictionary for CSV import."""
        stability = data.get('stability')
        return cls(
            location=State(float(data['x']), float(data['n'])),
            family=FixedPointFamily(data['family']),
            eigenvalues=(
                complex(float(data['eig1_re']), float(data['eig1_im'])),
                complex(float(data['eig2_re']), float(data['eig2_im']))
            ),
            stability=Stability(stability) if isinstance(stability, str) and stability else None
        )


@dataclass(frozen=True)
class Thresholds:
    """Rationality thresholds of the logit system."""
    beta_int: Optional[float]
    beta_hat: Optional[float]
    beta_h: Optional[float]


@dataclass
class Trajectory:
    """Numerical solution of the mean dynamics."""
    times: List[float]
    states: List[State]
    steps_accepted: int
    steps_rejected: int
    rule: LearningRule

    @property
    def final_state(self) -> State:
        return self.states[-1]

    def as_arrays(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Return (t, x, n) as numpy arrays."""
        t = np.asarray(self.times, dtype=float)
        xs = np.fromiter((s.x for s in self.states), dtype=float, count=len(self.states))
        ns = np.fromiter((s.n for s in self.states), dtype=float, count=len(self.states))
        return t, xs, ns


@dataclass(frozen=True)
class CycleInfo:
    """Envelope and period of a detected limit cycle."""
    period: float
    n_min: float
    n_max: float
    x_min: float
    x_max: float
    section_points: Tuple[State, ...]
    converged: bool

    @property
    def amplitude(self) -> float:
        return self.n_max - self.n_min

    def encircles(self, point: State) -> bool:
        return self.x_min < point.x < self.x_max and self.n_min < point.n < self.n_max


@dataclass(frozen=True)
class AttractorReport:
    """Outcome of a long-run attractor classification."""
    kind: AttractorKind
    fixed_point: Optional[FixedPoint] = None
    cycle: Optional[CycleInfo] = None
    transient_time: float = 0.0

    @property
    def label(self) -> str:
        """Short text label used in basin maps and CSV output."""
        if self.kind == AttractorKind.FIXED_POINT and self.fixed_point is not None:
            return f"fp:{self.fixed_point.family.value}"
        if self.kind == AttractorKind.LIMIT_CYCLE:
            return "cycle"
        return "undecided"


@dataclass
class BasinMap:
    """Attractor labels for a lattice of initial conditions."""
    grid: List[Tuple[State, str]]
    resolution: Tuple[int, int]

    def labels(self) -> List[str]:
        return [label for _, label in self.grid]

    def counts(self) -> Dict[str, int]:
        counts: Dict[str, int] = {}
        for label in self.labels():
            counts[label] = counts.get(label, 0) + 1
        return counts


@dataclass
class SweepRecord:
    """Fixed points, cycle and regime at one rationality value."""
    beta: float
    fixed_points: List[FixedPoint] = field(default_factory=list)
    cycle: Optional[CycleInfo] = None
    regime: Optional[Regime] = None
    ambiguous: bool = False
    anomalies: List[str] = field(default_factory=list)
    error: Optional[str] = None

    def stable_points(self) -> List[FixedPoint]:
        return [fp for fp in self.fixed_points if fp.stability is not None and fp.stability.is_stable]

    def find(self, family: FixedPointFamily) -> Optional[FixedPoint]:
        for fp in self.fixed_points:
            if fp.family == family:
                return fp
        return None


@dataclass
class SweepResult:
    """All records of a rationality sweep plus the thresholds."""
    params: ModelConfig
    records: List[SweepRecord]
    thresholds: Thresholds
    beta_u: Optional[float] = None

    def regimes(self) -> List[Optional[Regime]]:
        return [record.regime for record in self.records]


@dataclass(frozen=True)
class AbmConfig:
    """Finite-population simulation settings."""
    model: ModelConfig
    agents: int
    seed: int = 0
    t_end: float = 50.0
    env_step: float = 0.01
    initial: State = State(0.6, 0.6)


@dataclass
class AbmTrajectory:
    """Event-by-event path of the finite-population simulation."""
    times: List[float]
    x_fraction: List[float]
    n_env: List[float]
    revision_count: int
    agents: int
    clamp_events: int = 0


@dataclass(frozen=True)
class DeviationStats:
    """Deviation between a stochastic path and the mean-dynamics path."""
    sup_x: float
    sup_n: float
    mean_x: float
    mean_n: float
    samples: int

    @property
    def sup(self) -> float:
        return max(self.sup_x, self.sup_n)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'sup_x': self.sup_x,
            'sup_n': self.sup_n,
            'mean_x': self.mean_x,
            'mean_n': self.mean_n,
            'samples': self.samples
        }


@dataclass
class CsvTable:
    """A CSV table with a '#'-prefixed comment preamble and optional footer."""
    columns: List[str]
    rows: List[List[Any]] = field(default_factory=list)
    preamble: List[str] = field(default_factory=list)
    footer: List[str] = field(default_factory=list)
