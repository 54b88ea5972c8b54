"""
Fixed points of the logit system, their thresholds and local stability.

Boundary equilibria solve ``T_beta(x) = g(x, n)`` with n in {0, 1}, where
``T_beta(x) = log(x / (1 - x)) / beta``. When the standing assumptions hold the
roots are bracketed from the known shape of ``T_beta``; otherwise a uniform
sign-change scan is used so that no root is silently missed.
"""
import cmath
import math
from typing import Callable, List, Optional, Tuple

import numpy as np
from loguru import logger
from scipy.optimize import bisect

from ..models.config import EnvParams, LearningRule, ModelConfig
from ..models.data_models import (
    FixedPoint, FixedPointFamily, LinearCoeffs, Stability, State, Thresholds
)
from ..models.errors import ConfigError, DomainError, NumericalError, RootFindingError, ThresholdError
from .core_model import (
    check_assumptions, derive_coeffs, interior_reference_point, interior_x,
    jacobian, vector_field
)

CLIP = 1e-12
ROOT_XTOL = 1e-13
MERGE_TOL = 1e-6
TANGENT_GAP = 1e-12
SCAN_POINTS = 10_000
BETA_HAT_MAX = 1e3
EIG_TOL = 1e-9
RESIDUAL_TOL = 1e-10

TOC_FAMILIES = (FixedPointFamily.TOC1, FixedPointFamily.TOC2, FixedPointFamily.TOC3)
_FAMILY_ORDER = {family: i for i, family in enumerate(FixedPointFamily)}


def t_beta(beta: float, x: float) -> float:
    """T_beta(x) = log(x / (1 - x)) / beta on (0, 1)."""
    if not beta > 0:
        raise DomainError(f"t_beta requires beta > 0, got {beta}")
    if not 0 < x < 1:
        raise DomainError(f"t_beta requires 0 < x < 1, got {x}")
    return (math.log(x) - math.log1p(-x)) / beta


def beta_int(coeffs: LinearCoeffs, env: EnvParams) -> float:
    """Rationality above which the interior fixed point exists."""
    # b + (1 + theta) d == delta_rt0 + theta * delta_sp0
    denom = coeffs.b + (1 + env.theta) * coeffs.d
    if denom <= 0:
        raise ThresholdError(f"beta_int denominator delta_rt0 + theta*delta_sp0 = {denom} is not positive")
    return (1 + env.theta) * math.log(1 / env.theta) / denom


def beta_hopf(coeffs: LinearCoeffs, env: EnvParams) -> float:
    """Rationality at which the interior fixed point undergoes a Hopf bifurcation."""
    if coeffs.n_bar is None or coeffs.D <= 0:
        raise ThresholdError(f"beta_h requires D > 0, got D = {coeffs.D}")
    slope = coeffs.a * coeffs.n_bar + coeffs.b
    if slope <= 0:
        raise ThresholdError(f"beta_h requires a*n_bar + b > 0, got {slope}")
    theta = env.theta
    return (_interior_gain(theta) + coeffs.a * (1 + theta) / coeffs.D * math.log(1 / theta)) / slope


def beta_hat(coeffs: LinearCoeffs, beta_max: float = BETA_HAT_MAX) -> Optional[float]:
    """
    Rationality at which the two lower tragedy fixed points are born (tangency).

    Bisects the sign of ``T_beta(x_b) - (b x_b + d)`` over (4/b, beta_max), where
    x_b < 1/2 is the point at which ``T_beta`` has slope b.

    Returns:
        beta_hat, or None when no sign change is found below beta_max
    """
    if coeffs.b <= 0:
        logger.warning(f"beta_hat undefined for b = {coeffs.b} <= 0")
        return None

    def tangency_gap(beta: float) -> float:
        xb = _tangent_point(beta, coeffs.b)
        return t_beta(beta, xb) - (coeffs.b * xb + coeffs.d)

    lo = 4 / coeffs.b * (1 + 1e-9)
    gap_lo, gap_hi = tangency_gap(lo), tangency_gap(beta_max)
    if (gap_lo < 0) == (gap_hi < 0):
        logger.warning(f"No tangency sign change on ({lo:.6g}, {beta_max:.6g}); beta_hat absent")
        return None
    return float(bisect(tangency_gap, lo, beta_max, xtol=1e-12, maxiter=200))


def thresholds(config: ModelConfig) -> Thresholds:
    """Compute beta_int, beta_hat and beta_h together; failures are logged and left absent."""
    coeffs = derive_coeffs(config.deltas, config.env)
    try:
        b_int = beta_int(coeffs, config.env)
    except ThresholdError as e:
        logger.warning(str(e))
        b_int = None
    try:
        b_h = beta_hopf(coeffs, config.env)
    except ThresholdError as e:
        logger.warning(str(e))
        b_h = None
    return Thresholds(beta_int=b_int, beta_hat=beta_hat(coeffs), beta_h=b_h)


def hopf_threshold(config: ModelConfig) -> Optional[float]:
    """beta_h for the configured payoffs, or None when it is undefined."""
    try:
        return beta_hopf(derive_coeffs(config.deltas, config.env), config.env)
    except ThresholdError:
        return None


def interior_environment(config: ModelConfig) -> Optional[float]:
    """n_int(beta) from the interior equilibrium condition; may lie outside (0, 1)."""
    coeffs = derive_coeffs(config.deltas, config.env)
    if config.beta <= 0 or coeffs.D == 0:
        return None
    theta = config.env.theta
    numerator = coeffs.b + (1 + theta) * coeffs.d - (1 + theta) * math.log(1 / theta) / config.beta
    return numerator / coeffs.D


def interior_fixed_point(config: ModelConfig) -> Optional[FixedPoint]:
    """
    Interior equilibrium (x_int, n_int) of the logit system.

    Absent for beta <= beta_int; at beta == beta_int the point sits on n = 0 and
    is reported through the tragedy family instead.
    """
    _require_logit(config)
    n_int = interior_environment(config)
    if n_int is None or not 0 < n_int < 1:
        return None
    try:
        if config.beta <= beta_int(derive_coeffs(config.deltas, config.env), config.env):
            return None
    except ThresholdError:
        pass
    return _build(config, State(interior_x(config.env), n_int), FixedPointFamily.INTERIOR)


def toc_fixed_points(config: ModelConfig) -> List[FixedPoint]:
    """All tragedy-of-the-commons equilibria (x_t, 0)."""
    _require_logit(config)
    _require_positive_beta(config)
    coeffs = derive_coeffs(config.deltas, config.env)
    report = check_assumptions(config)

    if report.all_hold:
        roots = _theorem_toc_roots(config, coeffs)
    else:
        logger.warning(f"Assumptions fail ({report.detail}); scanning for tragedy roots")
        roots = _label_scanned_roots(_scan_roots(config, coeffs, 0.0))

    return [_build(config, State(x, 0.0), family, tangent) for x, family, tangent in roots]


def prosperity_fixed_point(config: ModelConfig) -> FixedPoint:
    """The unique prosperity equilibrium (x*, 1) with x* < 1/2."""
    _require_logit(config)
    _require_positive_beta(config)
    coeffs = derive_coeffs(config.deltas, config.env)

    if check_assumptions(config).a1_holds:
        x_star = _solve_boundary(config, coeffs, 1.0, CLIP, 0.5)
        return _build(config, State(x_star, 1.0), FixedPointFamily.PROSPERITY)

    logger.warning("Assumption A1 fails; scanning for prosperity roots")
    roots = _scan_roots(config, coeffs, 1.0)
    if not roots:
        raise RootFindingError("No prosperity fixed point found", {'beta': config.beta})
    x_star, tangent = roots[0]
    return _build(config, State(x_star, 1.0), FixedPointFamily.PROSPERITY, tangent)


def all_fixed_points(config: ModelConfig) -> List[FixedPoint]:
    """Every equilibrium of the logit system, stability-classified."""
    points, failures = _gather(config)
    if failures:
        raise failures[0]
    return points


def collect_fixed_points(config: ModelConfig) -> Tuple[List[FixedPoint], List[str]]:
    """
    Every equilibrium that could be computed, plus one message per failed family.

    Used where partial output is preferable to aborting.
    """
    points, failures = _gather(config)
    for failure in failures:
        logger.error(f"beta={config.beta:.6g}: {failure}")
    return points, [str(failure) for failure in failures]


def _gather(config: ModelConfig) -> Tuple[List[FixedPoint], List[NumericalError]]:
    _require_logit(config)
    if config.beta == 0:
        if config.env.theta == 1:
            return [_build(config, State(0.5, 0.5), FixedPointFamily.DEGENERATE_LINE)], []
        return [
            _build(config, State(0.5, 0.0), FixedPointFamily.BETA0_TOC),
            _build(config, State(0.5, 1.0), FixedPointFamily.BETA0_PROSPERITY)
        ], []

    points: List[FixedPoint] = []
    failures: List[NumericalError] = []
    for finder in (interior_fixed_point, toc_fixed_points, prosperity_fixed_point):
        try:
            found = finder(config)
        except NumericalError as e:
            failures.append(e)
            continue
        if isinstance(found, list):
            points.extend(found)
        elif found is not None:
            points.append(found)
    points.sort(key=lambda fp: (_FAMILY_ORDER[fp.family], fp.location.x))
    return points, failures


def imitative_fixed_points(config: ModelConfig) -> List[FixedPoint]:
    """
    Equilibria of the imitative system: the four corners, the points on the
    edges n = 0 and n = 1 where g vanishes, and the interior point when it exists.
    """
    imitative = config.with_rule(LearningRule.IMITATIVE)
    coeffs = derive_coeffs(config.deltas, config.env)
    points = [
        _build(imitative, State(x, n), FixedPointFamily.IMITATIVE_CORNER)
        for x, n in ((0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0))
    ]
    for n_level in (0.0, 1.0):
        slope, intercept = _boundary_line(coeffs, n_level)
        if slope != 0 and 0 < -intercept / slope < 1:
            points.append(_build(imitative, State(-intercept / slope, n_level), FixedPointFamily.IMITATIVE_EDGE))
    reference = interior_reference_point(coeffs, config.env)
    if reference is not None:
        points.append(_build(imitative, reference, FixedPointFamily.IMITATIVE_INTERIOR))
    return points


def interior_trace(config: ModelConfig) -> float:
    """Closed-form trace of the Jacobian at the interior point."""
    coeffs = derive_coeffs(config.deltas, config.env)
    n_int = _interior_n_or_raise(config)
    return config.beta * (coeffs.a * n_int + coeffs.b) / _interior_gain(config.env.theta) - 1.0


def interior_determinant(config: ModelConfig) -> float:
    """Closed-form determinant of the Jacobian at the interior point."""
    coeffs = derive_coeffs(config.deltas, config.env)
    n_int = _interior_n_or_raise(config)
    theta = config.env.theta
    dg_dn = coeffs.a * interior_x(config.env) + coeffs.c
    return (-config.env.epsilon * config.beta * dg_dn * n_int * (1 - n_int) * (1 + theta)
            / _interior_gain(theta))


def hopf_crossing_speed(coeffs: LinearCoeffs, env: EnvParams) -> float:
    """d Re(lambda) / d beta of the interior eigenvalues (constant in beta)."""
    if coeffs.n_bar is None:
        raise ThresholdError("Crossing speed requires D != 0")
    return (coeffs.a * coeffs.n_bar + coeffs.b) / (2 * _interior_gain(env.theta))


def hopf_frequency(config: ModelConfig) -> float:
    """Angular frequency sqrt(det J_int) of the eigenvalue pair at beta_h."""
    coeffs = derive_coeffs(config.deltas, config.env)
    det = interior_determinant(config.with_beta(beta_hopf(coeffs, config.env)))
    if det <= 0:
        raise ThresholdError(f"det J_int = {det} is not positive at beta_h")
    return math.sqrt(det)


def toc_closed_form_stable(config: ModelConfig, x_t: float) -> bool:
    """Stability test for a tragedy point: x_t < x_int and beta*b*x_t*(1-x_t) < 1."""
    coeffs = derive_coeffs(config.deltas, config.env)
    return x_t < interior_x(config.env) and config.beta * coeffs.b * x_t * (1 - x_t) < 1


def toc_lower_branch_stable(config: ModelConfig, x_t: float) -> bool:
    """Equivalent test for x_t < 1/2 rewritten with the equilibrium condition."""
    coeffs = derive_coeffs(config.deltas, config.env)
    beta = config.beta
    return coeffs.b * beta * (1 - x_t) ** 2 * math.exp(beta * (coeffs.b * x_t + coeffs.d)) < 1


def classify_stability(config: ModelConfig, fp: FixedPoint) -> FixedPoint:
    """Fill in eigenvalues and the stability label of a fixed point."""
    if fp.residual > RESIDUAL_TOL:
        logger.warning(f"Classifying {fp.family.value} at {fp.location} with residual {fp.residual:.3e}")

    eigenvalues = _eigenvalues(config, fp)
    stability = _stability_label(eigenvalues, fp.tangent)
    return FixedPoint(
        location=fp.location,
        family=fp.family,
        eigenvalues=eigenvalues,
        stability=stability,
        residual=fp.residual,
        tangent=fp.tangent
    )


def residual(config: ModelConfig, s: State) -> float:
    """Max-norm of the vector field at s."""
    dx, dn = vector_field(config, s)
    return max(abs(dx), abs(dn))


def _eigenvalues(config: ModelConfig, fp: FixedPoint) -> Tuple[complex, complex]:
    logit = config.rule == LearningRule.LOGIT and config.beta > 0
    x, n = fp.location.x, fp.location.n
    theta, eps = config.env.theta, config.env.epsilon
    coeffs = derive_coeffs(config.deltas, config.env)

    if logit and fp.family in TOC_FAMILIES:
        # upper triangular: the diagonal carries the eigenvalues
        return (complex(config.beta * coeffs.b * x * (1 - x) - 1),
                complex(eps * ((1 + theta) * x - 1)))
    if logit and fp.family == FixedPointFamily.PROSPERITY:
        return (complex(config.beta * (coeffs.a + coeffs.b) * x * (1 - x) - 1),
                complex(eps * (1 - (1 + theta) * x)))
    if logit and fp.family == FixedPointFamily.INTERIOR:
        half_trace = interior_trace(config) / 2
        root = cmath.sqrt(half_trace ** 2 - interior_determinant(config))
        return (half_trace + root, half_trace - root)

    eig = np.linalg.eigvals(jacobian(config, fp.location))
    ordered = sorted((complex(v) for v in eig), key=lambda v: (-v.real, -v.imag))
    return ordered[0], ordered[1]


def _stability_label(eigenvalues: Tuple[complex, complex], tangent: bool) -> Stability:
    if tangent:
        return Stability.NONHYPERBOLIC
    trace = (eigenvalues[0] + eigenvalues[1]).real
    det = (eigenvalues[0] * eigenvalues[1]).real
    if any(abs(ev.real) < EIG_TOL for ev in eigenvalues):
        if abs(trace) < EIG_TOL and det > 0:
            return Stability.CENTER_CANDIDATE
        return Stability.NONHYPERBOLIC
    if det < 0:
        return Stability.SADDLE
    if abs(eigenvalues[0].imag) > 1e-12:
        return Stability.STABLE_FOCUS if trace < 0 else Stability.UNSTABLE_FOCUS
    return Stability.STABLE_NODE if trace < 0 else Stability.UNSTABLE_NODE


def _build(config: ModelConfig, location: State, family: FixedPointFamily,
           tangent: bool = False) -> FixedPoint:
    fp = FixedPoint(location=location, family=family, residual=residual(config, location), tangent=tangent)
    return classify_stability(config, fp)


def _theorem_toc_roots(config: ModelConfig, coeffs: LinearCoeffs) -> List[Tuple[float, FixedPointFamily, bool]]:
    beta = config.beta
    roots: List[Tuple[float, FixedPointFamily, bool]] = []

    if beta * coeffs.b > 4:
        xb = _tangent_point(beta, coeffs.b)
        peak = _gap_function(beta, coeffs.b, coeffs.d)(xb)
        if peak > TANGENT_GAP:
            x1 = _solve_boundary(config, coeffs, 0.0, CLIP, xb)
            x2 = _solve_boundary(config, coeffs, 0.0, xb, 0.5)
            if x2 - x1 < MERGE_TOL:
                roots.append((0.5 * (x1 + x2), FixedPointFamily.TOC1, True))
            else:
                roots.append((x1, FixedPointFamily.TOC1, False))
                roots.append((x2, FixedPointFamily.TOC2, False))
        elif peak > -TANGENT_GAP:
            logger.debug(f"Tangent tragedy root at beta={beta:.12g}, x_b={xb:.12g}")
            roots.append((xb, FixedPointFamily.TOC1, True))

    roots.append((_solve_boundary(config, coeffs, 0.0, 0.5, 1 - CLIP), FixedPointFamily.TOC3, False))
    return roots


def _solve_boundary(config: ModelConfig, coeffs: LinearCoeffs, n_level: float,
                    lo: float, hi: float) -> float:
    """Bisect T_beta(x) = g(x, n_level) on [lo, hi]."""
    slope, intercept = _boundary_line(coeffs, n_level)
    gap = _gap_function(config.beta, slope, intercept)
    gap_lo, gap_hi = gap(lo), gap(hi)
    if gap_lo == 0.0:
        return lo
    if gap_hi == 0.0:
        return hi
    if (gap_lo < 0) == (gap_hi < 0):
        # the root may sit closer to 0 or 1 than the clipping distance
        for edge in (lo, hi):
            if edge in (CLIP, 1 - CLIP) and residual(config, State(edge, n_level)) < RESIDUAL_TOL:
                logger.debug(f"Root beyond clip at x={edge}, n={n_level}, beta={config.beta:.6g}")
                return edge
        raise RootFindingError("No sign change in bracket", {
            'beta': config.beta, 'n': n_level, 'lo': lo, 'hi': hi, 'gap_lo': gap_lo, 'gap_hi': gap_hi
        })
    try:
        return float(bisect(gap, lo, hi, xtol=ROOT_XTOL, maxiter=200))
    except (RuntimeError, ValueError) as e:
        raise RootFindingError(f"Bisection failed: {e}", {'beta': config.beta, 'lo': lo, 'hi': hi}) from e


def _scan_roots(config: ModelConfig, coeffs: LinearCoeffs, n_level: float) -> List[Tuple[float, bool]]:
    """Uniform sign-change scan of T_beta(x) - g(x, n_level); close roots merged and flagged."""
    slope, intercept = _boundary_line(coeffs, n_level)
    xs = np.linspace(CLIP, 1 - CLIP, SCAN_POINTS)
    values = (np.log(xs) - np.log1p(-xs)) / config.beta - (slope * xs + intercept)
    signs = np.sign(values)

    found: List[float] = []
    for i in np.nonzero(signs[:-1] * signs[1:] < 0)[0]:
        found.append(_solve_boundary(config, coeffs, n_level, float(xs[i]), float(xs[i + 1])))
    found.extend(float(xs[i]) for i in np.nonzero(signs == 0)[0])
    found.sort()

    merged: List[Tuple[float, bool]] = []
    for x in found:
        if merged and x - merged[-1][0] < MERGE_TOL:
            merged[-1] = (0.5 * (merged[-1][0] + x), True)
        else:
            merged.append((x, False))
    logger.debug(f"Scan at n={n_level}, beta={config.beta:.6g} found {len(merged)} root(s)")
    return merged


def _label_scanned_roots(roots: List[Tuple[float, bool]]) -> List[Tuple[float, FixedPointFamily, bool]]:
    labelled = []
    lower = [r for r in roots if r[0] < 0.5]
    for i, (x, tangent) in enumerate(lower):
        labelled.append((x, FixedPointFamily.TOC1 if i == 0 else FixedPointFamily.TOC2, tangent))
    labelled.extend((x, FixedPointFamily.TOC3, tangent) for x, tangent in roots if x >= 0.5)
    return labelled


def _boundary_line(coeffs: LinearCoeffs, n_level: float) -> Tuple[float, float]:
    """g(x, n_level) written as slope * x + intercept."""
    return coeffs.a * n_level + coeffs.b, coeffs.c * n_level + coeffs.d


def _gap_function(beta: float, slope: float, intercept: float) -> Callable[[float], float]:
    def gap(x: float) -> float:
        return t_beta(beta, x) - (slope * x + intercept)
    return gap


def _tangent_point(beta: float, b: float) -> float:
    """x_b < 1/2 where T_beta has slope b (requires beta*b > 4)."""
    return 0.5 - 0.5 * math.sqrt(1 - 4 / (beta * b))


def _interior_gain(theta: float) -> float:
    """theta (1 + 1/theta)^2, the reciprocal of x_int (1 - x_int)."""
    return theta * (1 + 1 / theta) ** 2


def _interior_n_or_raise(config: ModelConfig) -> float:
    n_int = interior_environment(config)
    if n_int is None:
        raise DomainError("Interior environment level undefined (beta = 0 or D = 0)")
    return n_int


def _require_logit(config: ModelConfig) -> None:
    if config.rule != LearningRule.LOGIT:
        raise ConfigError("Fixed-point theory applies to the logit rule only")


def _require_positive_beta(config: ModelConfig) -> None:
    if not config.beta > 0:
        raise DomainError(f"Boundary fixed points for beta > 0 only, got {config.beta}")
