from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import numpy.typing as npt

from apps.numerics.calculus import Vector, fd_hessian_component, fd_jacobian
from apps.numerics.exceptions import DimensionMismatchError, NonFiniteValueError
from apps.numerics.linalg import Mat, as_matrix


@dataclass(frozen=True)
class VectorFieldSpec:
    """
    An autonomous vector field X on R^n with optional analytic derivatives.

    ``hessians`` returns the stack H with ``H[k][i, j] = d2 X^k / dx^i dx^j``.
    Missing derivatives fall back to the central-difference oracles.
    ``sink_rate`` is the outflow leaving the modelled population (deceased
    individuals for the COVID model); integrators carry it as an extra
    coordinate.
    """

    dimension: int
    evaluator: Callable[[Vector], npt.ArrayLike]
    jacobian: Callable[[Vector], npt.ArrayLike] | None = None
    hessians: Callable[[Vector], npt.ArrayLike] | None = None
    sink_rate: Callable[[Vector], float] | None = None
    name: str = field(default='field')

    def point(self, x: npt.ArrayLike) -> Vector:
        point = np.asarray(x, dtype=np.float64)
        if point.shape != (self.dimension,):
            raise DimensionMismatchError(f'{self.name}: expected a point of dimension {self.dimension}, got shape {point.shape}')
        bad = np.flatnonzero(~np.isfinite(point))
        if bad.size:
            raise NonFiniteValueError(f'{self.name}: coordinate {bad[0] + 1} is not finite', coordinate=int(bad[0]))
        return point

    def __call__(self, x: npt.ArrayLike) -> Vector:
        value = np.asarray(self.evaluator(self.point(x)), dtype=np.float64)
        bad = np.flatnonzero(~np.isfinite(value))
        if bad.size:
            raise NonFiniteValueError(f'{self.name}: component {bad[0] + 1} evaluated to {value[bad[0]]}', coordinate=int(bad[0]))
        return value

    def jacobian_at(self, x: npt.ArrayLike) -> Mat:
        point = self.point(x)
        if self.jacobian is None:
            return fd_jacobian(self, point)
        return as_matrix(self.jacobian(point), name=f'{self.name} jacobian')

    def hessians_at(self, x: npt.ArrayLike) -> np.ndarray:
        point = self.point(x)
        if self.hessians is None:
            stack = np.stack(
                [fd_hessian_component(lambda z, k=k: float(self(z)[k]), point) for k in range(self.dimension)]
            )
        else:
            stack = np.array(self.hessians(point), dtype=np.float64)
        if stack.shape != (self.dimension,) * 3:
            raise DimensionMismatchError(f'{self.name}: hessian stack has shape {stack.shape}')
        stack.setflags(write=False)
        return stack

    def sink_at(self, x: npt.ArrayLike) -> float:
        if self.sink_rate is None:
            return 0.0
        return float(self.sink_rate(self.point(x)))

    def reversed(self) -> 'VectorFieldSpec':
        """The field -X; integrating it forward runs the original flow backward."""

        def negate(fn):
            return None if fn is None else (lambda z: -np.asarray(fn(z), dtype=np.float64))

        sink = None if self.sink_rate is None else (lambda z: -float(self.sink_rate(z)))
        return VectorFieldSpec(
            dimension=self.dimension,
            evaluator=negate(self.evaluator),
            jacobian=negate(self.jacobian),
            hessians=negate(self.hessians),
            sink_rate=sink,
            name=f'reversed {self.name}',
        )


def linear_field(a: npt.ArrayLike, name: str = 'linear field') -> VectorFieldSpec:
    matrix = as_matrix(a, name=name)
    n = matrix.shape[0]
    return VectorFieldSpec(
        dimension=n,
        evaluator=lambda x: matrix @ x,
        jacobian=lambda _x: matrix,
        hessians=lambda _x: np.zeros((n, n, n)),
        name=name,
    )


def zero_field(n: int) -> VectorFieldSpec:
    return linear_field(np.zeros((n, n)), name='zero field')
