"""Adaptive explicit Runge-Kutta integration (Dormand-Prince 8(5,3)).

An eighth-order propagating solution with the combined fifth/third order
error estimate of Hairer's DOP853.  Works on real or complex state vectors and
in either direction along the independent variable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.integrate._ivp import dop853_coefficients as _dop

# Butcher tableau of the 12-stage step; the 13th row of K holds f(x + h, y_new).
_N_STAGES = _dop.N_STAGES
_A = _dop.A[:_N_STAGES, :_N_STAGES]
_B = _dop.B
_C = _dop.C[:_N_STAGES]
_E3 = _dop.E3
_E5 = _dop.E5

_ERROR_EXPONENT = -1.0 / 8.0
_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0


class IntegrationError(RuntimeError):
    """The integrator gave up before reaching the end of the span."""

    def __init__(self, message, x, report):
        super().__init__(f"{message} at x={x!r} ({report})")
        self.x = x
        self.report = report


class StepSizeUnderflow(IntegrationError):
    pass


class TooManyEvaluations(IntegrationError):
    pass


@dataclass(frozen=True)
class IntegratorConfig:
    rtol: float = 1e-8
    atol: float = 1e-10
    max_step: float = 0.3
    initial_step: Optional[float] = None
    max_evals: int = 10_000_000

    def __post_init__(self):
        if not (self.rtol > 0 and self.atol > 0):
            raise ValueError("rtol and atol must be positive")
        if not self.max_step > 0:
            raise ValueError("max_step must be positive")
        if self.initial_step is not None and not self.initial_step > 0:
            raise ValueError("initial_step must be positive")
        if self.max_evals < 1:
            raise ValueError("max_evals must be at least 1")


@dataclass
class IntegrationReport:
    accepted: int = 0
    rejected: int = 0
    evaluations: int = 0
    final_step: float = 0.0

    def __str__(self):
        return (f"accepted={self.accepted} rejected={self.rejected} "
                f"evaluations={self.evaluations} final_step={self.final_step:.3g}")


def _rms(v):
    return math.sqrt(np.vdot(v, v).real / v.size)


def _initial_step(fun, x0, y0, f0, direction, config, report):
    # Hairer, Norsett & Wanner, Solving ODEs I, II.4
    scale = config.atol + np.abs(y0) * config.rtol
    d0, d1 = _rms(y0 / scale), _rms(f0 / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, config.max_step)
    f1 = fun(x0 + direction * h0, y0 + direction * h0 * f0)
    report.evaluations += 1
    d2 = _rms((f1 - f0) / scale) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / 8.0)
    return min(100 * h0, h1, config.max_step)


def integrate(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    span: tuple[float, float],
    initial,
    config: IntegratorConfig = IntegratorConfig(),
) -> tuple[np.ndarray, IntegrationReport]:
    """Integrate ``y' = rhs(x, y)`` from ``span[0]`` to ``span[1]``.

    Returns the state at ``span[1]`` and an :class:`IntegrationReport`.
    Raises :class:`StepSizeUnderflow` or :class:`TooManyEvaluations`.
    """
    x, x_end = float(span[0]), float(span[1])
    if x == x_end:
        raise ValueError("integration span has zero length")
    direction = 1.0 if x_end > x else -1.0
    y = np.array(initial, dtype=complex if np.iscomplexobj(initial) else float)
    report = IntegrationReport()
    f = np.asarray(rhs(x, y))
    report.evaluations += 1

    if config.initial_step is not None:
        h_abs = min(config.initial_step, config.max_step)
    else:
        h_abs = _initial_step(rhs, x, y, f, direction, config, report)

    K = np.empty((_N_STAGES + 1, y.size), dtype=y.dtype)
    rtol, atol = config.rtol, config.atol

    while direction * (x_end - x) > 0:
        min_step = 10 * np.spacing(abs(x))
        step_rejected = False
        while True:
            if h_abs < min_step:
                raise StepSizeUnderflow("step size underflow", x, report)
            if report.evaluations + _N_STAGES > config.max_evals:
                raise TooManyEvaluations("evaluation budget exhausted", x, report)
            h = direction * h_abs
            x_new = x + h
            if direction * (x_new - x_end) > 0:
                x_new = x_end
            h = x_new - x
            h_abs = abs(h)

            K[0] = f
            for s in range(1, _N_STAGES):
                dy = (_A[s, :s] @ K[:s]) * h
                K[s] = rhs(x + _C[s] * h, y + dy)
            y_new = y + h * (_B @ K[:_N_STAGES])
            f_new = np.asarray(rhs(x_new, y_new))
            K[-1] = f_new
            report.evaluations += _N_STAGES

            scale = atol + np.maximum(np.abs(y), np.abs(y_new)) * rtol
            e5 = np.abs((_E5 @ K) / scale)
            e3 = np.abs((_E3 @ K) / scale)
            e5n2 = float(e5 @ e5)
            e3n2 = float(e3 @ e3)
            if e5n2 == 0.0 and e3n2 == 0.0:
                err = 0.0
            else:
                err = h_abs * e5n2 / math.sqrt((e5n2 + 0.01 * e3n2) * y.size)

            if err < 1.0:
                factor = _MAX_FACTOR if err == 0.0 else min(
                    _MAX_FACTOR, _SAFETY * err**_ERROR_EXPONENT)
                if step_rejected:
                    factor = min(1.0, factor)
                report.final_step = h_abs
                h_abs = min(h_abs * factor, config.max_step)
                break
            h_abs *= max(_MIN_FACTOR, _SAFETY * err**_ERROR_EXPONENT)
            step_rejected = True
            report.rejected += 1

        report.accepted += 1
        x, y, f = x_new, y_new, f_new

    return y, report
