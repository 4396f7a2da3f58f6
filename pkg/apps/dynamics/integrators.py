"""
Time integrators for autonomous fields.

Both integrators advance the augmented state (x, D) where D' is the field's
sink rate, so S + E + Is + Ia + Ih + R + D stays constant for the COVID model
up to rounding.
"""
import logging
import math
from typing import Callable

import numpy as np
import numpy.typing as npt
from django.conf import settings
from scipy.interpolate import CubicHermiteSpline

from apps.epidemic.vector_field import VectorFieldSpec
from apps.numerics.exceptions import GeometryError, IntegrationError, StepSizeUnderflowError

from .trajectory import Trajectory

logger = logging.getLogger(__name__)

# Fehlberg 4(5) pair; the fifth-order solution is propagated
RKF45_NODES = (
    (),
    (1 / 4,),
    (3 / 32, 9 / 32),
    (1932 / 2197, -7200 / 2197, 7296 / 2197),
    (439 / 216, -8.0, 3680 / 513, -845 / 4104),
    (-8 / 27, 2.0, -3544 / 2565, 1859 / 4104, -11 / 40),
)
RKF45_HIGH = np.array([16 / 135, 0.0, 6656 / 12825, 28561 / 56430, -9 / 50, 2 / 55])
RKF45_ERROR = np.array([1 / 360, 0.0, -128 / 4275, -2197 / 75240, 1 / 50, 2 / 55])

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 5.0
UNDERFLOW_FRACTION = 1e-12

AugmentedRhs = Callable[[np.ndarray, float], np.ndarray]


def _augmented(field: VectorFieldSpec) -> AugmentedRhs:
    n = field.dimension

    def rhs(z: np.ndarray, t: float) -> np.ndarray:
        x = z[:n]
        try:
            return np.append(field(x), field.sink_at(x))
        except GeometryError as exc:
            raise IntegrationError(f'{exc} at t={t:.17g}', time=t) from exc

    return rhs


def _initial(field: VectorFieldSpec, x0: npt.ArrayLike, d0: float) -> np.ndarray:
    if not math.isfinite(d0):
        raise ValueError(f'initial deceased count must be finite, got {d0}')
    return np.append(field.point(x0), float(d0))


def _check_span(t_span: tuple[float, float]) -> tuple[float, float]:
    t0, t1 = (float(t) for t in t_span)
    if not (math.isfinite(t0) and math.isfinite(t1)) or not t1 > t0:
        raise ValueError(f'time span must satisfy t0 < t1, got ({t0}, {t1})')
    return t0, t1


def _check_finite(z: np.ndarray, t: float) -> None:
    if not np.all(np.isfinite(z)):
        raise IntegrationError(f'state became non-finite at t={t:.17g}', time=t)


def _report_negatives(field: VectorFieldSpec, trajectory: Trajectory) -> None:
    tolerance = getattr(settings, 'NEGATIVITY_TOLERANCE', 1e-9) * float(trajectory.total_population[0])
    lowest = trajectory.states.min(axis=1)
    bad = np.flatnonzero(lowest < -tolerance)
    if bad.size:
        m = int(bad[0])
        coordinate = int(np.argmin(trajectory.states[m]))
        logger.warning(
            '%s: coordinate %d went negative (%.3g) at t=%.17g; %d samples affected',
            field.name, coordinate + 1, trajectory.states[m, coordinate], trajectory.times[m], bad.size,
        )


def sample_times(t0: float, t1: float, dt: float) -> np.ndarray:
    """t0 + m dt for m = 0.. with the last sample moved onto t1."""
    if not (math.isfinite(dt) and dt > 0):
        raise ValueError(f'dt must be positive, got {dt}')
    steps = max(1, math.ceil((t1 - t0) / dt - 1e-9))
    times = t0 + dt * np.arange(steps + 1, dtype=np.float64)
    times[-1] = t1
    return times


def _rk4_step(rhs: AugmentedRhs, z: np.ndarray, t: float, h: float) -> np.ndarray:
    k1 = rhs(z, t)
    k2 = rhs(z + 0.5 * h * k1, t + 0.5 * h)
    k3 = rhs(z + 0.5 * h * k2, t + 0.5 * h)
    k4 = rhs(z + h * k3, t + h)
    return z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate_rk4(
    field: VectorFieldSpec,
    x0: npt.ArrayLike,
    t_span: tuple[float, float],
    dt: float,
    *,
    d0: float = 0.0,
) -> Trajectory:
    """
    Classical fourth-order Runge-Kutta on a fixed grid t0 + m dt.
    The last step is shortened so the grid ends exactly at t1.
    """
    t0, t1 = _check_span(t_span)
    times = sample_times(t0, t1, dt)
    steps = times.size - 1

    rhs = _augmented(field)
    z = _initial(field, x0, d0)
    samples = np.empty((steps + 1, z.size))
    samples[0] = z
    for m in range(steps):
        z = _rk4_step(rhs, z, times[m], times[m + 1] - times[m])
        _check_finite(z, times[m + 1])
        samples[m + 1] = z

    trajectory = Trajectory(times=times, states=samples[:, :-1], deceased=samples[:, -1])
    _report_negatives(field, trajectory)
    logger.info('rk4: %d steps of %.3g on [%g, %g] for %s', steps, dt, t0, t1, field.name)
    return trajectory


def _error_norm(error: np.ndarray, z: np.ndarray, z_new: np.ndarray, rel_tol: float, abs_tol: float) -> float:
    scale = abs_tol + rel_tol * np.maximum(np.abs(z), np.abs(z_new))
    return float(np.sqrt(np.mean((error / scale) ** 2)))


def _first_step(rhs: AugmentedRhs, z: np.ndarray, t0: float, rel_tol: float, abs_tol: float) -> float:
    scale = abs_tol + rel_tol * np.abs(z)
    d0 = float(np.sqrt(np.mean((z / scale) ** 2)))
    d1 = float(np.sqrt(np.mean((rhs(z, t0) / scale) ** 2)))
    if d0 < 1e-5 or d1 < 1e-5:
        return 1e-6
    return 0.01 * d0 / d1


def _rkf45_stages(rhs: AugmentedRhs, z: np.ndarray, t: float, h: float) -> np.ndarray:
    stages = np.empty((len(RKF45_NODES), z.size))
    for s, row in enumerate(RKF45_NODES):
        stages[s] = rhs(z + h * sum(a * stages[j] for j, a in enumerate(row)) if row else z, t)
    return stages


def integrate_adaptive(
    field: VectorFieldSpec,
    x0: npt.ArrayLike,
    t_span: tuple[float, float],
    *,
    rel_tol: float = 1e-6,
    abs_tol: float = 1e-9,
    d0: float = 0.0,
    t_eval: npt.ArrayLike | None = None,
    first_step: float | None = None,
    max_step: float | None = None,
) -> Trajectory:
    """
    Embedded Runge-Kutta-Fehlberg 4(5) with local extrapolation.

    A step is accepted when the RMS of error / (abs_tol + rel_tol |z|) is at
    most one. Without ``t_eval`` the accepted step times are returned; with it,
    samples come from cubic Hermite dense output over the accepted steps.
    """
    t0, t1 = _check_span(t_span)
    if not (rel_tol > 0 and abs_tol > 0):
        raise ValueError(f'tolerances must be positive, got rel_tol={rel_tol}, abs_tol={abs_tol}')
    for name, value in (('first_step', first_step), ('max_step', max_step)):
        if value is not None and not value > 0:
            raise ValueError(f'{name} must be positive, got {value}')
    span = t1 - t0
    h_max = span if max_step is None else min(float(max_step), span)
    h_min = UNDERFLOW_FRACTION * span

    rhs = _augmented(field)
    z = _initial(field, x0, d0)
    t = t0
    h = min(h_max, first_step if first_step is not None else _first_step(rhs, z, t0, rel_tol, abs_tol))

    times, values, slopes = [t0], [z], [rhs(z, t0)]
    rejected = 0
    while t < t1:
        h = min(h, t1 - t)
        if h < h_min and t1 - t > h_min:
            raise StepSizeUnderflowError(f'step size {h:.3g} fell below {h_min:.3g} at t={t:.17g}', time=t)
        stages = _rkf45_stages(rhs, z, t, h)
        z_new = z + h * (RKF45_HIGH @ stages)
        err = _error_norm(h * (RKF45_ERROR @ stages), z, z_new, rel_tol, abs_tol)
        factor = MAX_FACTOR if err == 0 else min(MAX_FACTOR, max(MIN_FACTOR, SAFETY * err ** -0.2))
        if err <= 1.0:
            t = t1 if t1 - (t + h) <= h_min else t + h
            _check_finite(z_new, t)
            z = z_new
            times.append(t)
            values.append(z)
            slopes.append(rhs(z, t))
        else:
            rejected += 1
        h = min(h_max, h * factor)

    logger.info(
        'rkf45: %d accepted, %d rejected steps on [%g, %g] for %s', len(times) - 1, rejected, t0, t1, field.name
    )
    grid = np.array(times)
    samples = np.array(values)
    if t_eval is not None:
        requested = np.asarray(t_eval, dtype=np.float64)
        if requested.ndim != 1 or requested.size == 0:
            raise ValueError('t_eval must be a non-empty 1-d array')
        if requested.min() < t0 or requested.max() > t1:
            raise ValueError(f't_eval must lie within [{t0}, {t1}]')
        samples = CubicHermiteSpline(grid, samples, np.array(slopes), axis=0)(requested)
        grid = requested

    trajectory = Trajectory(times=grid, states=samples[:, :-1], deceased=samples[:, -1])
    _report_negatives(field, trajectory)
    return trajectory
