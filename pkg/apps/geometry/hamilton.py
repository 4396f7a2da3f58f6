"""
Cotangent-bundle geometry of the least-squares Hamiltonian
H(x, p) = |p|^2 / 4 + X(x) . p.
"""
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from apps.epidemic.vector_field import VectorFieldSpec
from apps.numerics.calculus import Vector
from apps.numerics.exceptions import DimensionMismatchError
from apps.numerics.linalg import Mat, mat_add, transpose

from .lagrange import TangentPoint, finite_vector


@dataclass(frozen=True)
class CotangentPoint:
    x: Vector
    p: Vector

    def __post_init__(self) -> None:
        x = finite_vector(self.x, 'x')
        p = finite_vector(self.p, 'p')
        if x.shape != p.shape:
            raise DimensionMismatchError(f'x has dimension {x.size} but p has {p.size}')
        object.__setattr__(self, 'x', x)
        object.__setattr__(self, 'p', p)

    @classmethod
    def legendre(cls, field: VectorFieldSpec, tp: TangentPoint) -> 'CotangentPoint':
        """p = dL/dy = 2 (y - X(x))."""
        return cls(x=tp.x, p=2.0 * (tp.y - field(tp.x)))


@dataclass(frozen=True)
class HamiltonGeometry:
    hamiltonian: float
    connection: Mat
    torsions: np.ndarray


def hamiltonian(field: VectorFieldSpec, cp: CotangentPoint) -> float:
    return float(0.25 * (cp.p @ cp.p) + field(cp.x) @ cp.p)


def connection_hamilton(field: VectorFieldSpec, x: npt.ArrayLike) -> Mat:
    jac = field.jacobian_at(x)
    return mat_add(jac, transpose(jac))


def torsions_hamilton(field: VectorFieldSpec, x: npt.ArrayLike) -> np.ndarray:
    """Stack of d(J - J^t)/dx^k; equals -2 times the Lagrangian torsions."""
    hess = field.hessians_at(x)
    torsions = np.transpose(hess, (2, 0, 1)) - np.transpose(hess, (2, 1, 0))
    torsions.setflags(write=False)
    return torsions


def hamilton_geometry(field: VectorFieldSpec, cp: CotangentPoint) -> HamiltonGeometry:
    return HamiltonGeometry(
        hamiltonian=hamiltonian(field, cp),
        connection=connection_hamilton(field, cp.x),
        torsions=torsions_hamilton(field, cp.x),
    )
