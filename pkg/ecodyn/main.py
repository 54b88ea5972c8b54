"""
Main entry point for the ecodyn command-line tools.

Every command writes one CSV table to stdout (or --output); logs go to stderr.
Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""
import argparse
import math
import os
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from dotenv import load_dotenv
from loguru import logger

from . import __version__
from .models.config import PRESET_NAMES, IntegratorControl, LearningRule, RunConfig
from .models.data_models import AbmConfig, State
from .models.errors import ComparisonError, ConfigError, NumericalError
from .services.abm_oracle import compare_abm_ode, ode_reference, run_abm
from .services.bifurcation_sweep import BifurcationSweep, default_beta_grid, regime_transitions
from .services.core_model import check_assumptions, derive_coeffs
from .services.csv_processor import CSVProcessor
from .services.dynamics import DynamicsAnalyzer, estimate_beta_u
from .services.fixed_points import collect_fixed_points, imitative_fixed_points, thresholds
from .services.integrator import integrate

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_INTERRUPTED = 130

OVERRIDE_KEYS = ('delta_tr1', 'delta_ps1', 'delta_rt0', 'delta_sp0', 'theta', 'epsilon', 'beta', 'rule', 'seed')


def setup_logging(level: Optional[str] = None):
    """Configure logging for the command-line tools."""
    # Remove default logger
    logger.remove()

    level = (level or os.getenv('ECODYN_LOG_LEVEL', 'INFO')).upper()
    logger.add(
        sys.stderr,
        format="<green>{time:YYYY-MM-DD HH:mm:ss}</green> | <level>{level: <8}</level> | <cyan>{name}</cyan>:<cyan>{function}</cyan>:<cyan>{line}</cyan> - <level>{message}</level>",
        level=level
    )

    log_file = os.getenv('ECODYN_LOG_FILE')
    if log_file:
        Path(log_file).parent.mkdir(parents=True, exist_ok=True)
        logger.add(
            log_file,
            rotation="10 MB",
            retention="7 days",
            format="{time:YYYY-MM-DD HH:mm:ss} | {level: <8} | {name}:{function}:{line} - {message}",
            level="DEBUG"
        )


def cmd_coeffs(args: argparse.Namespace, run: RunConfig, processor: CSVProcessor) -> int:
    model = run.to_model_config()
    coeffs = derive_coeffs(model.deltas, model.env)
    report = check_assumptions(model)
    logger.info(f"Coefficients: a={coeffs.a:.6g} b={coeffs.b:.6g} c={coeffs.c:.6g} d={coeffs.d:.6g}")
    processor.write_table(processor.coeffs_table(coeffs, report), args.output)
    return EXIT_OK


def cmd_fixed_points(args: argparse.Namespace, run: RunConfig, processor: CSVProcessor) -> int:
    model = run.to_model_config()
    if model.rule == LearningRule.IMITATIVE:
        points, errors = imitative_fixed_points(model), []
    else:
        points, errors = collect_fixed_points(model)
    logger.info(f"{len(points)} fixed points at beta={model.beta:.6g}")
    processor.write_table(processor.fixed_points_table(model.beta, points, errors), args.output)
    return EXIT_NUMERICAL if errors else EXIT_OK


def cmd_thresholds(args: argparse.Namespace, run: RunConfig, processor: CSVProcessor) -> int:
    model = run.to_model_config().with_rule(LearningRule.LOGIT)
    limits = thresholds(model)
    errors = []
    if limits.beta_int is None:
        errors.append("beta_int undefined: non-positive denominator")
    if limits.beta_h is None:
        errors.append("beta_h undefined: non-positive denominator")

    beta_u = None
    if args.estimate_beta_u:
        bracket = tuple(args.bracket) if args.bracket else _default_bracket(limits.beta_h)
        if bracket is None:
            errors.append("beta_u needs a bracket when beta_h is undefined")
        else:
            try:
                beta_u = estimate_beta_u(model, bracket)
            except NumericalError as e:
                logger.error(f"beta_u estimation failed: {e}")
                errors.append(f"beta_u: {e}")

    processor.write_table(processor.thresholds_table(limits, beta_u, errors), args.output)
    return EXIT_NUMERICAL if errors else EXIT_OK


def cmd_simulate(args: argparse.Namespace, run: RunConfig, processor: CSVProcessor) -> int:
    model = run.to_model_config()
    s0 = _initial_state(args)
    control = IntegratorControl(method=args.method, step=args.step, record_every=args.record_every)
    trajectory = integrate(model, s0, args.t_end, control)
    logger.info(f"Simulated {model.rule.value} dynamics to t={args.t_end}: final state {trajectory.final_state}")
    extra = [('x0', s0.x), ('n0', s0.n), ('t_end', args.t_end), ('method', args.method),
             ('step', args.step), ('record_every', args.record_every)]
    table = processor.trajectory_table([(trajectory, model.rule.value)], extra)
    processor.write_table(table, args.output)
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace, run: RunConfig, processor: CSVProcessor) -> int:
    params = run.to_model_config()
    if args.uniform:
        step = (args.beta_max - args.beta_min) / max(args.points - 1, 1)
        grid = [round(args.beta_min + i * step, 12) for i in range(args.points)]
    else:
        grid = default_beta_grid(params, args.beta_min, args.beta_max, args.points)
    result = BifurcationSweep(params).sweep(grid, with_beta_u=not args.no_beta_u)
    for beta, before, after in regime_transitions(result):
        logger.info(f"Regime change at beta={beta:.4f}: {_regime_name(before)} -> {_regime_name(after)}")
    extra = [('beta_min', args.beta_min), ('beta_max', args.beta_max), ('points', args.points),
             ('grid', 'uniform' if args.uniform else 'refined')]
    processor.write_table(processor.sweep_table(result, extra), args.output)
    return EXIT_OK


def cmd_portrait(args: argparse.Namespace, run: RunConfig, processor: CSVProcessor) -> int:
    model = run.to_model_config()
    control = IntegratorControl(record_every=args.record_every)
    analyzer = DynamicsAnalyzer(model, control)
    trajectories = analyzer.portrait(args.grid, args.t_end, with_imitative=args.with_imitative)
    logger.info(f"Integrated {len(trajectories)} portrait trajectories at beta={model.beta:.6g}")
    extra = [('grid', args.grid), ('t_end', args.t_end), ('record_every', args.record_every),
             ('with_imitative', args.with_imitative)]
    processor.write_table(processor.portrait_table(trajectories, extra), args.output)
    return EXIT_OK


def cmd_abm(args: argparse.Namespace, run: RunConfig, processor: CSVProcessor) -> int:
    model = run.to_model_config()
    cfg = AbmConfig(model=model, agents=args.agents, seed=run.seed, t_end=args.t_end,
                    env_step=args.env_step, initial=_initial_state(args))
    abm = run_abm(cfg)
    ode = ode_reference(cfg)
    stats = compare_abm_ode(abm, ode)
    logger.info(f"ABM N={cfg.agents} seed={cfg.seed}: sup deviation {stats.sup:.4g} "
                f"over {stats.samples} samples")

    stride = max(1, int(round(args.output_step / 0.01)))
    times = ode.times[::stride]
    if times[-1] != ode.times[-1]:
        times.append(ode.times[-1])
    extra = [('agents', cfg.agents), ('t_end', cfg.t_end), ('env_step', cfg.env_step),
             ('output_step', args.output_step), ('x0', cfg.initial.x), ('n0', cfg.initial.n)]
    processor.write_table(processor.abm_table(abm, ode, stats, times, extra), args.output)
    return EXIT_OK


COMMANDS = {
    'coeffs': cmd_coeffs,
    'fixed-points': cmd_fixed_points,
    'thresholds': cmd_thresholds,
    'simulate': cmd_simulate,
    'sweep': cmd_sweep,
    'portrait': cmd_portrait,
    'abm': cmd_abm
}


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with one subcommand per analysis."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--preset', choices=PRESET_NAMES, help='built-in reference parameter set')
    common.add_argument('--config', help='key=value config file')
    common.add_argument('--delta-tr1', type=float)
    common.add_argument('--delta-ps1', type=float)
    common.add_argument('--delta-rt0', type=float)
    common.add_argument('--delta-sp0', type=float)
    common.add_argument('--theta', type=float, help='environment replenishment rate')
    common.add_argument('--epsilon', type=float, help='environment time-scale ratio')
    common.add_argument('--beta', type=float, help='rationality')
    common.add_argument('--rule', choices=[r.value for r in LearningRule])
    common.add_argument('--seed', type=int)
    common.add_argument('--output', '-o', help='output CSV path (default: stdout)')
    common.add_argument('--log-level', help='DEBUG, INFO, WARNING or ERROR')

    parser = argparse.ArgumentParser(
        prog='ecodyn',
        description='Logit learning in a game coupled to a tipping-point environment'
    )
    parser.add_argument('--version', action='version', version=f"ecodyn {__version__}")
    sub = parser.add_subparsers(dest='command', required=True)

    sub.add_parser('coeffs', parents=[common], help='payoff coefficients and assumption report')
    sub.add_parser('fixed-points', parents=[common], help='all fixed points with stability')

    p = sub.add_parser('thresholds', parents=[common], help='rationality thresholds')
    p.add_argument('--estimate-beta-u', action='store_true', help='also estimate the cycle collapse')
    p.add_argument('--bracket', type=float, nargs=2, metavar=('LO', 'HI'))

    p = sub.add_parser('simulate', parents=[common], help='integrate one trajectory')
    p.add_argument('--x0', type=float, default=0.6)
    p.add_argument('--n0', type=float, default=0.6)
    p.add_argument('--t-end', type=float, default=100.0)
    p.add_argument('--method', choices=['rk4', 'rkf45'], default='rk4')
    p.add_argument('--step', type=float, default=0.01)
    p.add_argument('--record-every', type=int, default=1)

    p = sub.add_parser('sweep', parents=[common], help='bifurcation data over a beta grid')
    p.add_argument('--beta-min', type=float, default=0.0)
    p.add_argument('--beta-max', type=float, default=10.0)
    p.add_argument('--points', type=int, default=200)
    p.add_argument('--uniform', action='store_true', help='plain uniform grid without refinement')
    p.add_argument('--no-beta-u', action='store_true', help='skip the cycle collapse estimate')

    p = sub.add_parser('portrait', parents=[common], help='trajectories from a lattice of initial conditions')
    p.add_argument('--grid', type=int, default=5)
    p.add_argument('--t-end', type=float, default=100.0)
    p.add_argument('--record-every', type=int, default=10)
    p.add_argument('--with-imitative', action='store_true')

    p = sub.add_parser('abm', parents=[common], help='finite-population simulation against the ODE')
    p.add_argument('--agents', type=int, default=1000)
    p.add_argument('--t-end', type=float, default=50.0)
    p.add_argument('--env-step', type=float, default=0.01)
    p.add_argument('--output-step', type=float, default=0.1)
    p.add_argument('--x0', type=float, default=0.6)
    p.add_argument('--n0', type=float, default=0.6)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, run one command and return its exit code."""
    load_dotenv()
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.log_level)

    try:
        run = RunConfig.from_sources(args.preset, args.config, _overrides(args))
        logger.debug(f"Effective configuration: {dict(run.header_items())}")
        processor = CSVProcessor(args.command, run.header_items())
        return COMMANDS[args.command](args, run, processor)
    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG
    except (NumericalError, ComparisonError) as e:
        logger.error(f"Numerical failure: {e}")
        return EXIT_NUMERICAL
    except KeyboardInterrupt:
        logger.info("Received interrupt signal, shutting down")
        return EXIT_INTERRUPTED


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    return {key: getattr(args, key) for key in OVERRIDE_KEYS if getattr(args, key) is not None}


def _initial_state(args: argparse.Namespace) -> State:
    for name in ('x0', 'n0'):
        value = getattr(args, name)
        if not (math.isfinite(value) and 0.0 <= value <= 1.0):
            raise ConfigError(f"--{name} must lie in [0, 1], got {value}")
    if hasattr(args, 't_end') and not args.t_end > 0:
        raise ConfigError(f"--t-end must be positive, got {args.t_end}")
    return State(args.x0, args.n0)


def _default_bracket(beta_h: Optional[float]):
    if beta_h is None:
        return None
    return (beta_h + 0.5, beta_h + 4.5)


def _regime_name(regime) -> str:
    return regime.value if regime is not None else 'none'


if __name__ == "__main__":
    sys.exit(main())
