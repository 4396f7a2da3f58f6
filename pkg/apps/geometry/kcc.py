"""
KCC invariants of the least-squares Euler-Lagrange system and the Jacobi
stability test built on the deviation curvature P.
"""
import enum
from dataclasses import dataclass

import numpy as np

from apps.epidemic.vector_field import VectorFieldSpec
from apps.numerics.calculus import Vector
from apps.numerics.linalg import DEFAULT_TOLERANCE, ComplexSpectrum, Mat, as_matrix, eigenvalues, frobenius_norm

from .lagrange import TangentPoint, connection_lagrange, semispray, torsions_from_hessians

RELATIVE_MARGIN = 1e-9


class StabilityClass(str, enum.Enum):
    JACOBI_STABLE = 'stable'
    JACOBI_UNSTABLE = 'unstable'
    MARGINAL = 'marginal'


@dataclass(frozen=True)
class StabilityVerdict:
    eigenvalues: ComplexSpectrum
    max_real_part: float
    classification: StabilityClass
    margin: float
    band: float

    @property
    def is_stable(self) -> bool:
        return self.classification is StabilityClass.JACOBI_STABLE


def first_invariant(field: VectorFieldSpec, tp: TangentPoint) -> Vector:
    jac = field.jacobian_at(tp.x)
    return -0.5 * (jac - jac.T) @ tp.y - jac.T @ field(tp.x)


def first_invariant_from_semispray(field: VectorFieldSpec, tp: TangentPoint) -> Vector:
    """2G - N y, the defining expression; kept as a second path for checks."""
    return 2.0 * semispray(field, tp) - connection_lagrange(field, tp.x) @ tp.y


def curvature_matrix_E(field: VectorFieldSpec, tp: TangentPoint) -> Mat:
    """
    The delta-derivative of the first invariant, d/dx^j - N^r_j d/dy^r applied
    to E^i, written out with the Hessians of X.
    """
    jac = field.jacobian_at(tp.x)
    value = field(tp.x)
    hess = field.hessians_at(tp.x)
    skew = jac - jac.T

    # hess[k][i, j] = d2 X^k / dx^i dx^j
    own = np.einsum('ijk,k->ij', hess, tp.y)
    crossed = np.einsum('kij,k->ij', hess, tp.y)
    weighted = np.einsum('kij,k->ij', hess, value)
    matrix = -0.5 * (own - crossed) - weighted - jac.T @ jac - 0.25 * skew @ skew
    return as_matrix(matrix, name='curvature matrix E')


def deviation_curvature(field: VectorFieldSpec, tp: TangentPoint) -> Mat:
    torsions = torsions_from_hessians(field.hessians_at(tp.x))
    contracted = np.einsum('kij,k->ij', torsions, tp.y)
    return as_matrix(contracted + curvature_matrix_E(field, tp), name='deviation curvature')


def classify_deviation(
    deviation: Mat,
    *,
    margin: float | None = None,
    relative_margin: float = RELATIVE_MARGIN,
    tol: float = DEFAULT_TOLERANCE,
) -> StabilityVerdict:
    """
    Classify a prebuilt P. Real parts within +-band of zero are Marginal, with
    band = margin when given, else relative_margin * (1 + |P|_F).
    """
    spectrum = eigenvalues(deviation, tol=tol)
    band = margin if margin is not None else relative_margin * (1.0 + frobenius_norm(deviation))
    top = spectrum.max_real_part
    if top < -band:
        classification = StabilityClass.JACOBI_STABLE
    elif top > band:
        classification = StabilityClass.JACOBI_UNSTABLE
    else:
        classification = StabilityClass.MARGINAL
    return StabilityVerdict(
        eigenvalues=spectrum,
        max_real_part=top,
        classification=classification,
        margin=abs(top),
        band=band,
    )


def jacobi_stability(
    field: VectorFieldSpec,
    tp: TangentPoint,
    *,
    relative_margin: float = RELATIVE_MARGIN,
    tol: float = DEFAULT_TOLERANCE,
) -> StabilityVerdict:
    return classify_deviation(deviation_curvature(field, tp), relative_margin=relative_margin, tol=tol)
