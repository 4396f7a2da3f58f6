"""
Tangent-bundle geometry of the least-squares Lagrangian L(x, y) = |y - X(x)|^2.

Index convention for stacks: ``torsions[k]`` is R_k = dN/dx^k and
``torsions[k][i, j]`` its (i, j) entry, all 0-based.
"""
from dataclasses import dataclass
from typing import Protocol

import numpy as np
import numpy.typing as npt

from apps.epidemic.vector_field import VectorFieldSpec
from apps.numerics.calculus import Vector
from apps.numerics.exceptions import DimensionMismatchError, NonFiniteValueError
from apps.numerics.linalg import Mat, mat_scale, mat_sub, trace, transpose


def finite_vector(values: npt.ArrayLike, label: str) -> Vector:
    vector = np.array(values, dtype=np.float64)
    if vector.ndim != 1:
        raise DimensionMismatchError(f'{label} must be a vector, got shape {vector.shape}')
    bad = np.flatnonzero(~np.isfinite(vector))
    if bad.size:
        raise NonFiniteValueError(f'{label} coordinate {bad[0] + 1} is not finite', coordinate=int(bad[0]))
    vector.setflags(write=False)
    return vector


@dataclass(frozen=True)
class TangentPoint:
    x: Vector
    y: Vector

    def __post_init__(self) -> None:
        x = finite_vector(self.x, 'x')
        y = finite_vector(self.y, 'y')
        if x.shape != y.shape:
            raise DimensionMismatchError(f'x has dimension {x.size} but y has {y.size}')
        object.__setattr__(self, 'x', x)
        object.__setattr__(self, 'y', y)

    @classmethod
    def on_shell(cls, field: VectorFieldSpec, x: npt.ArrayLike) -> 'TangentPoint':
        """The tangent y = X(x) of the integral curve through x."""
        return cls(x=x, y=field(x))


@dataclass(frozen=True)
class LagrangeGeometry:
    lagrangian: float
    semispray: Vector
    connection: Mat
    torsions: np.ndarray
    energy: float


def lagrangian(field: VectorFieldSpec, tp: TangentPoint) -> float:
    residual = tp.y - field(tp.x)
    return float(residual @ residual)


def semispray(field: VectorFieldSpec, tp: TangentPoint) -> Vector:
    jac = field.jacobian_at(tp.x)
    value = field(tp.x)
    return -0.5 * ((jac - jac.T) @ tp.y + jac.T @ value)


def euler_lagrange_lhs(field: VectorFieldSpec, x: npt.ArrayLike, y: npt.ArrayLike, acceleration: npt.ArrayLike) -> Vector:
    """x'' + 2 G(x, x'); zero along solutions of the least-squares Euler-Lagrange system."""
    return np.asarray(acceleration, dtype=np.float64) + 2.0 * semispray(field, TangentPoint(x=x, y=y))


class SampledPath(Protocol):
    times: np.ndarray
    states: np.ndarray


def euler_lagrange_residual(field: VectorFieldSpec, trajectory: SampledPath) -> np.ndarray:
    """
    Residual of x'' + 2G(x, x') at interior samples, both derivatives by
    central differences on a uniform grid. Row m belongs to sample m + 1.
    """
    times = np.asarray(trajectory.times, dtype=np.float64)
    states = np.asarray(trajectory.states, dtype=np.float64)
    if times.size < 3:
        raise ValueError(f'need at least 3 samples for second differences, got {times.size}')
    steps = np.diff(times)
    dt = steps[0]
    if np.max(np.abs(steps - dt)) > 1e-6 * abs(dt):
        raise ValueError('euler_lagrange_residual needs uniformly spaced samples')

    acceleration = (states[2:] - 2.0 * states[1:-1] + states[:-2]) / dt**2
    velocity = (states[2:] - states[:-2]) / (2.0 * dt)
    return np.array([
        euler_lagrange_lhs(field, x, y, a) for x, y, a in zip(states[1:-1], velocity, acceleration)
    ])


def connection_lagrange(field: VectorFieldSpec, x: npt.ArrayLike) -> Mat:
    jac = field.jacobian_at(x)
    return mat_scale(-0.5, mat_sub(jac, transpose(jac)))


def torsions_from_hessians(hessians: np.ndarray) -> np.ndarray:
    # hessians[i][j, k] = d2 X^i / dx^j dx^k ; result[k][i, j] = dN^i_j / dx^k
    by_axis = np.transpose(hessians, (2, 0, 1))
    mirrored = np.transpose(hessians, (2, 1, 0))
    torsions = -0.5 * (by_axis - mirrored)
    torsions.setflags(write=False)
    return torsions


def torsions_lagrange(field: VectorFieldSpec, x: npt.ArrayLike) -> np.ndarray:
    return torsions_from_hessians(field.hessians_at(x))


def energy_from_connection(connection: Mat) -> float:
    strength = mat_scale(-1.0, connection)
    return 0.5 * trace(strength @ transpose(strength))


def yang_mills_energy(field: VectorFieldSpec, x: npt.ArrayLike) -> float:
    return energy_from_connection(connection_lagrange(field, x))


def upper_triangle_energy(connection: Mat) -> float:
    rows, cols = np.triu_indices(connection.shape[0], k=1)
    return float(np.sum(connection[rows, cols] ** 2))


# (i, j) pairs, 1-based, in the order the twelve-term energy is usually printed.
# (2, 3) is absent from that list although N^2_3 is generically nonzero.
LISTED_ENERGY_TERMS = (
    (1, 2), (1, 3), (1, 4), (1, 5), (1, 6),
    (2, 4), (2, 5), (2, 6),
    (3, 5), (3, 6),
    (4, 6),
    (5, 6),
)


def listed_terms_energy(connection: Mat, *, include_missing: bool = True) -> float:
    pairs = LISTED_ENERGY_TERMS + (((2, 3),) if include_missing else ())
    return float(sum(connection[i - 1, j - 1] ** 2 for i, j in pairs))


def lagrange_geometry(field: VectorFieldSpec, tp: TangentPoint) -> LagrangeGeometry:
    connection = connection_lagrange(field, tp.x)
    return LagrangeGeometry(
        lagrangian=lagrangian(field, tp),
        semispray=semispray(field, tp),
        connection=connection,
        torsions=torsions_lagrange(field, tp.x),
        energy=energy_from_connection(connection),
    )
