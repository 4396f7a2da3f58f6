"""
Finite-difference reconstructions of every analytic tensor.

Each oracle rebuilds a quantity from field values (or from a lower-order
analytic object) by central differences. They share no code with the
analytic formulas beyond the field evaluator itself.
"""
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from apps.epidemic.vector_field import VectorFieldSpec
from apps.numerics.calculus import fd_hessian_component, fd_jacobian, fd_partial_matrix
from apps.numerics.linalg import Mat, as_matrix

from .hamilton import CotangentPoint, connection_hamilton, hamiltonian, torsions_hamilton
from .kcc import curvature_matrix_E, deviation_curvature, first_invariant, first_invariant_from_semispray
from .lagrange import (
    TangentPoint,
    connection_lagrange,
    energy_from_connection,
    torsions_lagrange,
    upper_triangle_energy,
)


def fd_connection_lagrange(field: VectorFieldSpec, x: npt.ArrayLike, h: float | None = None) -> Mat:
    jac = fd_jacobian(field, x, h)
    return as_matrix(-0.5 * (jac - jac.T))


def fd_torsions_lagrange(field: VectorFieldSpec, x: npt.ArrayLike, h: float | None = None) -> np.ndarray:
    """dN/dx^k by differencing the analytic connection."""
    point = field.point(x)
    return np.stack([
        fd_partial_matrix(lambda z: connection_lagrange(field, z), point, k, h) for k in range(point.size)
    ])


def fd_hessians(field: VectorFieldSpec, x: npt.ArrayLike, h: float | None = None) -> np.ndarray:
    point = field.point(x)
    return np.stack([
        fd_hessian_component(lambda z, k=k: float(field(z)[k]), point, h) for k in range(point.size)
    ])


def fd_curvature_E(field: VectorFieldSpec, tp: TangentPoint, h: float | None = None) -> Mat:
    """
    delta E^i / delta x^j = dE^i/dx^j - N^r_j dE^i/dy^r, both partials of the
    first invariant taken numerically. E is affine in y, so a unit step is exact there.
    """
    d_dx = fd_jacobian(lambda z: first_invariant(field, TangentPoint(x=z, y=tp.y)), tp.x, h)
    d_dy = fd_jacobian(lambda w: first_invariant(field, TangentPoint(x=tp.x, y=w)), tp.y, 1.0)
    return as_matrix(d_dx - d_dy @ connection_lagrange(field, tp.x))


def fd_deviation_curvature(field: VectorFieldSpec, tp: TangentPoint, h: float | None = None) -> Mat:
    """P rebuilt from field values alone: every derivative is a nested central difference."""
    n = tp.x.size

    def connection(z):
        return fd_connection_lagrange(field, z, h)

    def invariant(z, w):
        jac = fd_jacobian(field, z, h)
        return -0.5 * (jac - jac.T) @ w - jac.T @ field(z)

    torsions = np.stack([fd_partial_matrix(connection, tp.x, k, h) for k in range(n)])
    d_dx = fd_jacobian(lambda z: invariant(z, tp.y), tp.x, h)
    d_dy = fd_jacobian(lambda w: invariant(tp.x, w), tp.y, 1.0)
    curvature = d_dx - d_dy @ connection(tp.x)
    return as_matrix(np.einsum('kij,k->ij', torsions, tp.y) + curvature)


def fd_connection_hamilton(field: VectorFieldSpec, x: npt.ArrayLike, h: float | None = None) -> Mat:
    """N_ij = d2H/dx^j dp_i + d2H/dx^i dp_j from differences of H itself."""
    point = field.point(x)
    basis = np.eye(point.size)
    momentum = np.zeros(point.size)

    def momentum_gradient(z):
        # H is quadratic in p, so a unit central step is exact
        return np.array([
            0.5 * (hamiltonian(field, CotangentPoint(x=z, p=momentum + e)) - hamiltonian(field, CotangentPoint(x=z, p=momentum - e)))
            for e in basis
        ])

    mixed = fd_jacobian(momentum_gradient, point, h)
    return as_matrix(mixed + mixed.T)


@dataclass(frozen=True)
class OracleDeviation:
    name: str
    deviation: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.deviation <= self.tolerance)


def _max_abs(a: npt.ArrayLike, b: npt.ArrayLike) -> float:
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b)), initial=0.0))


def pointwise_deviations(field: VectorFieldSpec, tp: TangentPoint, h: float | None = None) -> list[OracleDeviation]:
    """Analytic-vs-numeric and identity checks at one tangent point."""
    x = tp.x
    jac = field.jacobian_at(x)
    connection = connection_lagrange(field, x)
    torsions = torsions_lagrange(field, x)
    return [
        OracleDeviation('jacobian vs finite differences', _max_abs(jac, fd_jacobian(field, x, h)), 1e-6),
        OracleDeviation('hessians vs finite differences', _max_abs(field.hessians_at(x), fd_hessians(field, x, h)), 1e-4),
        OracleDeviation('lagrange connection skew', _max_abs(connection, -connection.T), 0.0),
        OracleDeviation('lagrange connection vs -(J - J^t)/2', _max_abs(-2.0 * connection, jac - jac.T), 1e-12),
        OracleDeviation('torsions vs finite differences of N', _max_abs(torsions, fd_torsions_lagrange(field, x, h)), 1e-6),
        OracleDeviation('hamilton connection symmetric', _max_abs(connection_hamilton(field, x), connection_hamilton(field, x).T), 0.0),
        OracleDeviation('hamilton torsions = -2 R_k', _max_abs(torsions_hamilton(field, x), -2.0 * torsions), 1e-12),
        OracleDeviation(
            'energy trace form = upper-triangle sum',
            abs(energy_from_connection(connection) - upper_triangle_energy(connection)),
            1e-12 * (1.0 + upper_triangle_energy(connection)),
        ),
        OracleDeviation(
            'first invariant two paths',
            _max_abs(first_invariant(field, tp), first_invariant_from_semispray(field, tp)),
            1e-12 * (1.0 + float(np.max(np.abs(first_invariant(field, tp))))),
        ),
        OracleDeviation('curvature E vs delta-derivative', _max_abs(curvature_matrix_E(field, tp), fd_curvature_E(field, tp, h)), 1e-5),
    ]


def deviation_curvature_gap(field: VectorFieldSpec, tp: TangentPoint, h: float) -> float:
    return _max_abs(deviation_curvature(field, tp), fd_deviation_curvature(field, tp, h))
