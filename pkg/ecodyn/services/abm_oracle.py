"""
Finite-population simulation of the logit revision protocol.

N agents each play C or D. Revision opportunities arrive as a Poisson process
of total rate N; the revising agent, drawn uniformly, switches to C with
probability rho_C(x, n) where x = k/N is the current cooperator share. The
environment is not an agent aggregate: between events it follows its own ODE,
advanced by explicit Euler steps of at most ``env_step``.
"""
import dataclasses
import math
from typing import List, Sequence, Tuple

import numpy as np
from loguru import logger

from ..models.config import IntegratorControl, LearningRule
from ..models.data_models import AbmConfig, AbmTrajectory, DeviationStats, State, Trajectory
from ..models.errors import ComparisonError, ConfigError
from ..utils.workers import parallel_map
from .core_model import make_rhs
from .integrator import integrate

# random draws are taken in fixed-size blocks; changing this changes the stream
DRAW_BLOCK = 4096


def run_abm(cfg: AbmConfig) -> AbmTrajectory:
    """
    Simulate one population path. The same config and seed give an identical path.

    Raises:
        ConfigError: invalid simulation settings
    """
    _validate(cfg)
    rhs = make_rhs(cfg.model)
    rng = np.random.default_rng(cfg.seed)
    agents = cfg.agents
    rate = float(agents)

    k = int(round(cfg.initial.x * agents))
    n = cfg.initial.n
    t = 0.0
    times = [t]
    x_fraction = [k / agents]
    n_env = [n]
    revisions = 0
    clamps = 0

    waits = rng.exponential(1.0 / rate, DRAW_BLOCK)
    coins = rng.random((DRAW_BLOCK, 2))
    cursor = 0

    while True:
        if cursor == DRAW_BLOCK:
            waits = rng.exponential(1.0 / rate, DRAW_BLOCK)
            coins = rng.random((DRAW_BLOCK, 2))
            cursor = 0
        wait = waits[cursor]
        pick, accept = coins[cursor]
        cursor += 1

        t_event = min(t + wait, cfg.t_end)
        x = k / agents
        n, clamped = _advance_environment(rhs, x, n, t_event - t, cfg.env_step)
        clamps += clamped
        t = t_event
        if t >= cfg.t_end:
            times.append(t)
            x_fraction.append(x)
            n_env.append(n)
            break

        # the logit right-hand side is rho_C - x
        rho = rhs(x, n)[0] + x
        if pick < x:
            if accept >= rho:
                k -= 1
        elif accept < rho:
            k += 1
        revisions += 1
        times.append(t)
        x_fraction.append(k / agents)
        n_env.append(n)

    if clamps:
        logger.warning(f"Environment clamped {clamps} times (env_step={cfg.env_step})")
    logger.debug(f"ABM seed={cfg.seed} N={agents}: {revisions} revisions up to t={cfg.t_end}")
    return AbmTrajectory(
        times=times,
        x_fraction=x_fraction,
        n_env=n_env,
        revision_count=revisions,
        agents=agents,
        clamp_events=clamps
    )


def run_replicas(cfg: AbmConfig, seeds: Sequence[int]) -> List[AbmTrajectory]:
    """Independent runs of cfg, one per seed, in seed order."""
    return parallel_map(run_abm, [dataclasses.replace(cfg, seed=int(s)) for s in seeds])


def initial_state(cfg: AbmConfig) -> State:
    """The state the population actually starts from, x rounded to a multiple of 1/N."""
    return State(round(cfg.initial.x * cfg.agents) / cfg.agents, cfg.initial.n)


def ode_reference(cfg: AbmConfig, step: float = 0.01) -> Trajectory:
    """Mean-dynamics path from the same initial state and horizon."""
    _validate(cfg)
    return integrate(cfg.model, initial_state(cfg), cfg.t_end, IntegratorControl(step=step))


def sample_on_grid(abm: AbmTrajectory, times: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    """Values of the ABM path at the given times, taken from the latest event at or before each."""
    event_times = np.asarray(abm.times, dtype=float)
    index = np.searchsorted(event_times, np.asarray(times, dtype=float), side='right') - 1
    index = np.clip(index, 0, len(event_times) - 1)
    return np.asarray(abm.x_fraction)[index], np.asarray(abm.n_env)[index]


def compare_abm_ode(abm: AbmTrajectory, ode: Trajectory) -> DeviationStats:
    """
    Sup and mean absolute deviations over the ODE time points both paths cover.

    Raises:
        ComparisonError: the time ranges do not overlap
    """
    if not abm.times or not ode.times:
        raise ComparisonError("Cannot compare empty paths")
    lo = max(abm.times[0], ode.times[0])
    hi = min(abm.times[-1], ode.times[-1])
    t_ode, x_ode, n_ode = ode.as_arrays()
    mask = (t_ode >= lo) & (t_ode <= hi)
    if hi < lo or not mask.any():
        raise ComparisonError(
            f"ABM range [{abm.times[0]}, {abm.times[-1]}] and ODE range "
            f"[{ode.times[0]}, {ode.times[-1]}] do not overlap")

    x_abm, n_abm = sample_on_grid(abm, t_ode[mask])
    dev_x = np.abs(x_abm - x_ode[mask])
    dev_n = np.abs(n_abm - n_ode[mask])
    return DeviationStats(
        sup_x=float(dev_x.max()),
        sup_n=float(dev_n.max()),
        mean_x=float(dev_x.mean()),
        mean_n=float(dev_n.mean()),
        samples=int(mask.sum())
    )


def _advance_environment(rhs, x: float, n: float, span: float, env_step: float) -> Tuple[float, int]:
    if span <= 0:
        return n, 0
    substeps = max(1, math.ceil(span / env_step))
    h = span / substeps
    clamps = 0
    for _ in range(substeps):
        n += h * rhs(x, n)[1]
        if n < 0.0:
            n = 0.0
            clamps += 1
        elif n > 1.0:
            n = 1.0
            clamps += 1
    return n, clamps


def _validate(cfg: AbmConfig) -> None:
    if cfg.agents < 2:
        raise ConfigError(f"ABM needs at least 2 agents, got {cfg.agents}")
    if not cfg.env_step > 0:
        raise ConfigError(f"env_step must be positive, got {cfg.env_step}")
    if not cfg.t_end > 0:
        raise ConfigError(f"t_end must be positive, got {cfg.t_end}")
    if cfg.seed < 0:
        raise ConfigError(f"seed must be non-negative, got {cfg.seed}")
    if cfg.model.rule != LearningRule.LOGIT:
        raise ConfigError("The ABM realizes the logit protocol only")
    if not cfg.initial.in_unit_square():
        raise ConfigError(f"Initial state {cfg.initial} lies outside the unit square")
