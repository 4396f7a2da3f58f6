"""
Central finite-difference oracles.

These never feed the production code paths; they exist to check the analytic
derivatives of the model and the geometry built on it.
"""
from typing import Callable, TypeAlias

import numpy as np
import numpy.typing as npt

from .exceptions import NonFiniteValueError
from .linalg import Mat, as_matrix

Vector: TypeAlias = npt.NDArray[np.float64]
VectorFieldFn: TypeAlias = Callable[[Vector], npt.ArrayLike]
ScalarFieldFn: TypeAlias = Callable[[Vector], float]
MatrixFieldFn: TypeAlias = Callable[[Vector], npt.ArrayLike]

STEP_FLOOR = 1e-5
STEP_RELATIVE = 1e-7


def default_step(x: npt.ArrayLike, floor: float = STEP_FLOOR, relative: float = STEP_RELATIVE) -> float:
    """Absolute floor plus scaling with the largest coordinate."""
    return max(floor, relative * float(np.max(np.abs(np.asarray(x, dtype=np.float64)), initial=0.0)))


def _as_point(x: npt.ArrayLike) -> Vector:
    point = np.array(x, dtype=np.float64)
    if point.ndim != 1:
        raise ValueError(f'expected a 1-d point, got shape {point.shape}')
    return point


def _checked(value: npt.ArrayLike, axis: int) -> np.ndarray:
    result = np.asarray(value, dtype=np.float64)
    if not np.all(np.isfinite(result)):
        raise NonFiniteValueError(f'non-finite value on the stencil along coordinate {axis + 1}', coordinate=axis)
    return result


def _resolve_step(x: Vector, h: float | None) -> float:
    step = default_step(x) if h is None else h
    if not step > 0:
        raise ValueError(f'finite-difference step must be positive, got {step}')
    return step


def fd_jacobian(f: VectorFieldFn, x: npt.ArrayLike, h: float | None = None) -> Mat:
    point = _as_point(x)
    step = _resolve_step(point, h)
    columns = []
    for j in range(point.size):
        offset = np.zeros_like(point)
        offset[j] = step
        forward = _checked(f(point + offset), j)
        backward = _checked(f(point - offset), j)
        columns.append((forward - backward) / (2.0 * step))
    return as_matrix(np.column_stack(columns), name='fd_jacobian')


def fd_hessian_raw(f_k: ScalarFieldFn, x: npt.ArrayLike, h: float | None = None) -> np.ndarray:
    """Unsymmetrized second differences; entry (i, j) differences along i first."""
    point = _as_point(x)
    step = _resolve_step(point, h)
    n = point.size
    basis = np.eye(n) * step
    center = float(_checked(f_k(point), 0))
    raw = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            if i == j:
                plus = float(_checked(f_k(point + basis[i]), i))
                minus = float(_checked(f_k(point - basis[i]), i))
                raw[i, i] = (plus - 2.0 * center + minus) / step**2
                continue
            pp = float(_checked(f_k(point + basis[i] + basis[j]), i))
            pm = float(_checked(f_k(point + basis[i] - basis[j]), j))
            mp = float(_checked(f_k(point - basis[i] + basis[j]), i))
            mm = float(_checked(f_k(point - basis[i] - basis[j]), j))
            raw[i, j] = ((pp - mp) - (pm - mm)) / (4.0 * step**2)
    return raw


def fd_hessian_component(f_k: ScalarFieldFn, x: npt.ArrayLike, h: float | None = None) -> Mat:
    raw = fd_hessian_raw(f_k, x, h)
    return as_matrix(0.5 * (raw + raw.T), name='fd_hessian')


def fd_partial_matrix(g: MatrixFieldFn, x: npt.ArrayLike, k: int, h: float | None = None) -> Mat:
    """Central difference of every entry of a matrix field along axis ``k`` (0-based)."""
    point = _as_point(x)
    if not 0 <= k < point.size:
        raise IndexError(f'axis {k} outside 0..{point.size - 1}')
    step = _resolve_step(point, h)
    offset = np.zeros_like(point)
    offset[k] = step
    forward = _checked(g(point + offset), k)
    backward = _checked(g(point - offset), k)
    return as_matrix((forward - backward) / (2.0 * step), name='fd_partial_matrix')
