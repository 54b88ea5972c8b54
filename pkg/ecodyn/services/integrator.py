"""
Explicit Runge-Kutta integrators for the planar game-environment system.

Two schemes are provided:

- ``rk4``    classic fixed-step fourth-order Runge-Kutta
- ``rkf45``  Runge-Kutta-Fehlberg 4(5) pair; fourth-order propagation with a
             fifth-order local error estimate driving the step size

After every accepted step the state is clamped back into the unit square when
it has left it by at most ``INVARIANCE_TOL``; larger excursions abort.
"""
import math
from typing import Iterator, Tuple

from loguru import logger

from ..models.config import IntegratorControl, ModelConfig
from ..models.data_models import State, Trajectory
from ..models.errors import ConfigError, IntegrationError
from .core_model import make_rhs

INVARIANCE_TOL = 1e-9

# (t, x, n, x', n') after an accepted step
StepSample = Tuple[float, float, float, float, float]

# Fehlberg tableau
_A = (
    (),
    (1 / 4,),
    (3 / 32, 9 / 32),
    (1932 / 2197, -7200 / 2197, 7296 / 2197),
    (439 / 216, -8.0, 3680 / 513, -845 / 4104),
    (-8 / 27, 2.0, -3544 / 2565, 1859 / 4104, -11 / 40),
)
_B4 = (25 / 216, 0.0, 1408 / 2565, 2197 / 4104, -1 / 5, 0.0)
# fifth-order minus fourth-order weights
_TR = (1 / 360, 0.0, -128 / 4275, -2197 / 75240, 1 / 50, 2 / 55)


class RungeKuttaIntegrator:
    """
    Steps the vector field of a ModelConfig from an initial state.

    The integrator is stateful only in its step counters, which are reset by
    every call to ``integrate``.
    """

    def __init__(self, config: ModelConfig, control: IntegratorControl = IntegratorControl()):
        self.config = config
        self.control = control
        self.rhs = make_rhs(config)
        self.steps_accepted = 0
        self.steps_rejected = 0

    def integrate(self, s0: State, t_end: float, t0: float = 0.0) -> Trajectory:
        """
        Integrate from s0 at t0 up to t_end and record every ``record_every``-th step.

        Raises:
            IntegrationError: step-size underflow or invariance violation
        """
        times = [t0]
        states = [s0]
        stride = self.control.record_every
        last = None
        for i, sample in enumerate(self.steps(s0, t_end, t0), start=1):
            last = sample
            if i % stride == 0:
                times.append(sample[0])
                states.append(State(sample[1], sample[2]))
        if last is not None and times[-1] != last[0]:
            times.append(last[0])
            states.append(State(last[1], last[2]))

        return Trajectory(
            times=times,
            states=states,
            steps_accepted=self.steps_accepted,
            steps_rejected=self.steps_rejected,
            rule=self.config.rule
        )

    def steps(self, s0: State, t_end: float, t0: float = 0.0) -> Iterator[StepSample]:
        """Yield (t, x, n, x', n') after each accepted step."""
        if not t_end > t0:
            raise ConfigError(f"t_end ({t_end}) must exceed t0 ({t0})")
        if not s0.in_unit_square(INVARIANCE_TOL):
            raise IntegrationError(f"Initial state {s0} lies outside the unit square")

        self.steps_accepted = 0
        self.steps_rejected = 0
        x = _clamp(s0.x, 'x', t0)
        n = _clamp(s0.n, 'n', t0)
        if self.control.method == 'rk4':
            return self._fixed_steps(x, n, t0, t_end)
        return self._adaptive_steps(x, n, t0, t_end)

    def _fixed_steps(self, x: float, n: float, t0: float, t_end: float) -> Iterator[StepSample]:
        rhs = self.rhs
        h0 = self.control.step
        count = max(1, math.ceil((t_end - t0) / h0 - 1e-9))
        fx, fn = rhs(x, n)
        t = t0
        for i in range(1, count + 1):
            t_next = t_end if i == count else t0 + i * h0
            h = t_next - t
            k2x, k2n = rhs(x + 0.5 * h * fx, n + 0.5 * h * fn)
            k3x, k3n = rhs(x + 0.5 * h * k2x, n + 0.5 * h * k2n)
            k4x, k4n = rhs(x + h * k3x, n + h * k3n)
            x = _clamp(x + h / 6 * (fx + 2 * k2x + 2 * k3x + k4x), 'x', t_next)
            n = _clamp(n + h / 6 * (fn + 2 * k2n + 2 * k3n + k4n), 'n', t_next)
            t = t_next
            fx, fn = rhs(x, n)
            self.steps_accepted += 1
            yield t, x, n, fx, fn

    def _adaptive_steps(self, x: float, n: float, t0: float, t_end: float) -> Iterator[StepSample]:
        rhs = self.rhs
        control = self.control
        h = min(control.step, control.h_max)
        fx, fn = rhs(x, n)
        t = t0
        while t < t_end:
            h = min(h, t_end - t)
            kx = [fx]
            kn = [fn]
            for stage in range(1, 6):
                coeffs = _A[stage]
                sx = x + h * sum(c * k for c, k in zip(coeffs, kx))
                sn = n + h * sum(c * k for c, k in zip(coeffs, kn))
                gx, gn = rhs(sx, sn)
                kx.append(gx)
                kn.append(gn)

            x_new = x + h * sum(w * k for w, k in zip(_B4, kx))
            n_new = n + h * sum(w * k for w, k in zip(_B4, kn))
            err_x = h * sum(w * k for w, k in zip(_TR, kx))
            err_n = h * sum(w * k for w, k in zip(_TR, kn))
            err = max(
                abs(err_x) / (control.atol + control.rtol * max(abs(x), abs(x_new))),
                abs(err_n) / (control.atol + control.rtol * max(abs(n), abs(n_new)))
            )

            if err <= 1.0:
                t_next = t_end if t_end - (t + h) < 1e-14 * max(1.0, abs(t_end)) else t + h
                x = _clamp(x_new, 'x', t_next)
                n = _clamp(n_new, 'n', t_next)
                t = t_next
                fx, fn = rhs(x, n)
                self.steps_accepted += 1
                factor = 5.0 if err == 0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
                h = min(h * factor, control.h_max)
                yield t, x, n, fx, fn
            else:
                self.steps_rejected += 1
                h *= max(0.2, 0.9 * err ** -0.25)
                if h < control.h_min:
                    raise IntegrationError(f"Step size underflow (h={h:.3e}) at t={t:.6g}")

        logger.debug(f"rkf45 finished: {self.steps_accepted} accepted, {self.steps_rejected} rejected")


def integrate(config: ModelConfig, s0: State, t_end: float,
              control: IntegratorControl = IntegratorControl()) -> Trajectory:
    """Integrate the configured system from s0 over [0, t_end]."""
    return RungeKuttaIntegrator(config, control).integrate(s0, t_end)


def _clamp(value: float, name: str, t: float) -> float:
    if 0.0 <= value <= 1.0:
        return value
    if -INVARIANCE_TOL <= value < 0.0:
        return 0.0
    if 1.0 < value <= 1.0 + INVARIANCE_TOL:
        return 1.0
    raise IntegrationError(f"{name}={value!r} left the unit square at t={t:.6g}")
