"""
Payoff algebra, vector fields and Jacobians of the game-environment system.

Two learning rules share the tipping-point environment
``n' = eps * n (1 - n) (theta x - (1 - x))``:

- logit:      ``x' = rho_C(x, n) - x`` with ``rho_C = 1 / (1 + exp(-beta g))``
- imitative:  ``x' = x (1 - x) g(x, n)``

where ``g(x, n) = a x n + b x + c n + d`` is the payoff advantage of cooperation.
"""
import math
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.special import expit

from ..models.config import EnvParams, LearningRule, ModelConfig, PayoffDeltas
from ..models.data_models import AssumptionReport, LinearCoeffs, State

Velocity = Tuple[float, float]


def derive_coeffs(deltas: PayoffDeltas, env: EnvParams) -> LinearCoeffs:
    """
    Derive the coefficients of g and the imitative interior point.

    ``x0 = -d/b`` is None when b == 0 and ``n_bar`` is None when D == 0.
    """
    a = deltas.delta_sp0 - deltas.delta_rt0 + deltas.delta_ps1 - deltas.delta_tr1
    b = deltas.delta_rt0 - deltas.delta_sp0
    c = -(deltas.delta_ps1 + deltas.delta_sp0)
    d = deltas.delta_sp0
    D = deltas.delta_rt0 + deltas.delta_tr1 + env.theta * (deltas.delta_sp0 + deltas.delta_ps1)
    n_bar = (deltas.delta_rt0 + env.theta * deltas.delta_sp0) / D if D != 0 else None
    x0 = -d / b if b != 0 else None
    return LinearCoeffs(a=a, b=b, c=c, d=d, D=D, n_bar=n_bar, x0=x0)


def payoff_diff(coeffs: LinearCoeffs, s: State) -> float:
    """g(x, n) = a*x*n + b*x + c*n + d."""
    return coeffs.a * s.x * s.n + coeffs.b * s.x + coeffs.c * s.n + coeffs.d


def logit_prob(beta: float, g_value: float) -> float:
    """Probability of choosing to cooperate under the logit rule (overflow-safe)."""
    return float(expit(beta * g_value))


def interior_x(env: EnvParams) -> float:
    """Cooperator fraction at which the environment is stationary: 1 / (1 + theta)."""
    return 1.0 / (1.0 + env.theta)


def interior_reference_point(coeffs: LinearCoeffs, env: EnvParams) -> Optional[State]:
    """Interior equilibrium (x_int, n_bar) of the imitative system, if it lies in the open square."""
    if coeffs.n_bar is None or not 0 < coeffs.n_bar < 1:
        return None
    return State(interior_x(env), coeffs.n_bar)


def make_rhs(config: ModelConfig) -> Callable[[float, float], Velocity]:
    """Build a fast closure evaluating the vector field on plain floats."""
    k = derive_coeffs(config.deltas, config.env)
    a, b, c, d = k.a, k.b, k.c, k.d
    beta = config.beta
    theta = config.env.theta
    eps = config.env.epsilon

    if config.rule == LearningRule.LOGIT:
        def rhs(x: float, n: float) -> Velocity:
            z = beta * (a * x * n + b * x + c * n + d)
            # plain-float logistic for the integrator hot loop
            if z >= 0:
                rho = 1.0 / (1.0 + math.exp(-z))
            else:
                e = math.exp(z)
                rho = e / (1.0 + e)
            return rho - x, eps * n * (1.0 - n) * (theta * x - (1.0 - x))
    else:
        def rhs(x: float, n: float) -> Velocity:
            g = a * x * n + b * x + c * n + d
            return x * (1.0 - x) * g, eps * n * (1.0 - n) * (theta * x - (1.0 - x))

    return rhs


def vector_field(config: ModelConfig, s: State) -> Velocity:
    """Velocity (x', n') of the configured learning rule at state s."""
    return make_rhs(config)(s.x, s.n)


def jacobian(config: ModelConfig, s: State) -> np.ndarray:
    """
    Jacobian of the vector field at s.

    Analytic for the logit rule; central finite differences for the imitative rule.
    """
    if config.rule != LearningRule.LOGIT:
        return finite_difference_jacobian(config, s)

    k = derive_coeffs(config.deltas, config.env)
    theta = config.env.theta
    eps = config.env.epsilon
    x, n = s.x, s.n
    rho = logit_prob(config.beta, payoff_diff(k, s))
    slope = config.beta * rho * (1.0 - rho)
    return np.array([
        [slope * (k.a * n + k.b) - 1.0, slope * (k.a * x + k.c)],
        [eps * n * (1.0 - n) * (1.0 + theta), eps * (1.0 - 2.0 * n) * (theta * x - (1.0 - x))]
    ])


def finite_difference_jacobian(config: ModelConfig, s: State, step: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian of the vector field."""
    rhs = make_rhs(config)
    jac = np.empty((2, 2))
    fx_plus = rhs(s.x + step, s.n)
    fx_minus = rhs(s.x - step, s.n)
    fn_plus = rhs(s.x, s.n + step)
    fn_minus = rhs(s.x, s.n - step)
    for row in range(2):
        jac[row, 0] = (fx_plus[row] - fx_minus[row]) / (2 * step)
        jac[row, 1] = (fn_plus[row] - fn_minus[row]) / (2 * step)
    return jac


def check_assumptions(config: ModelConfig) -> AssumptionReport:
    """Evaluate the three standing assumptions as strict inequalities."""
    deltas = config.deltas
    a1 = deltas.delta_tr1 > 0 and deltas.delta_ps1 > 0
    a2 = config.env.theta < 1
    a3 = deltas.delta_sp0 < 0 and deltas.delta_rt0 > -deltas.delta_sp0

    failed = []
    if not a1:
        failed.append("A1: defection is not dominant at n=1 (need delta_tr1 > 0, delta_ps1 > 0)")
    if not a2:
        failed.append(f"A2: replenishment rate theta={config.env.theta} is not < 1")
    if not a3:
        failed.append("A3: need delta_sp0 < 0 and delta_rt0 > -delta_sp0")
    detail = "; ".join(failed) if failed else "all assumptions hold"
    return AssumptionReport(a1_holds=a1, a2_holds=a2, a3_holds=a3, detail=detail)
