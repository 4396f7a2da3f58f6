"""
Dense linear algebra on small square matrices.

Matrices are read-only ``float64`` numpy arrays. The helpers below add the
dimension and finiteness checks numpy leaves out (it would broadcast a 6x6
against a 1x6 without complaint).
"""
from dataclasses import dataclass
from typing import Iterable, Sequence, TypeAlias

import numpy as np
import numpy.typing as npt

from .exceptions import DimensionMismatchError, EigenvalueConvergenceError, NonFiniteValueError

Mat: TypeAlias = npt.NDArray[np.float64]

DEFAULT_TOLERANCE = 1e-10


def as_matrix(entries: npt.ArrayLike, *, name: str = 'matrix') -> Mat:
    matrix = np.array(entries, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.shape[0] < 1:
        raise DimensionMismatchError(f'{name} must be a non-empty square matrix, got shape {matrix.shape}')
    if not np.all(np.isfinite(matrix)):
        row, col = np.argwhere(~np.isfinite(matrix))[0]
        raise NonFiniteValueError(f'{name} has a non-finite entry at ({row + 1}, {col + 1})', coordinate=int(row))
    matrix.setflags(write=False)
    return matrix


def identity(n: int) -> Mat:
    return as_matrix(np.eye(n))


def zeros(n: int) -> Mat:
    return as_matrix(np.zeros((n, n)))


def _check_same_shape(a: Mat, b: Mat, op: str) -> None:
    if a.shape != b.shape:
        raise DimensionMismatchError(f'{op}: shapes {a.shape} and {b.shape} differ')


def mat_add(a: Mat, b: Mat) -> Mat:
    _check_same_shape(a, b, 'mat_add')
    return as_matrix(a + b)


def mat_sub(a: Mat, b: Mat) -> Mat:
    _check_same_shape(a, b, 'mat_sub')
    return as_matrix(a - b)


def mat_scale(s: float, a: Mat) -> Mat:
    return as_matrix(s * a)


def mat_mul(a: Mat, b: Mat) -> Mat:
    _check_same_shape(a, b, 'mat_mul')
    return as_matrix(a @ b)


def transpose(a: Mat) -> Mat:
    return as_matrix(a.T)


def trace(a: Mat) -> float:
    return float(np.trace(a))


def frobenius_norm(a: Mat) -> float:
    return float(np.linalg.norm(a, 'fro'))


def skew_part(a: Mat) -> Mat:
    return mat_scale(0.5, mat_sub(a, transpose(a)))


def sym_part(a: Mat) -> Mat:
    return mat_scale(0.5, mat_add(a, transpose(a)))


def _spectral_order(value: complex) -> tuple[float, float]:
    return (-value.real, -value.imag)


@dataclass(frozen=True)
class ComplexSpectrum:
    """Eigenvalues sorted by descending real part, ties by descending imaginary part."""

    eigenvalues: tuple[complex, ...]

    @classmethod
    def from_values(cls, values: Iterable[complex]) -> 'ComplexSpectrum':
        return cls(tuple(sorted((complex(v) for v in values), key=_spectral_order)))

    @property
    def dimension(self) -> int:
        return len(self.eigenvalues)

    @property
    def real_parts(self) -> tuple[float, ...]:
        return tuple(value.real for value in self.eigenvalues)

    @property
    def max_real_part(self) -> float:
        return self.eigenvalues[0].real

    def as_pairs(self) -> list[dict[str, float]]:
        return [{'re': value.real, 'im': value.imag} for value in self.eigenvalues]

    def __iter__(self):
        return iter(self.eigenvalues)

    def __len__(self) -> int:
        return len(self.eigenvalues)


def eigenvalues(a: Mat | Sequence[Sequence[float]], tol: float = DEFAULT_TOLERANCE) -> ComplexSpectrum:
    """
    All eigenvalues of a general real matrix (LAPACK Hessenberg + shifted QR).

    Each eigenpair is checked against ``||a v - lambda v|| <= tol (1 + ||a||) ||v||``
    so a non-converged or garbage spectrum surfaces as an error.
    """
    matrix = a if isinstance(a, np.ndarray) and not a.flags.writeable else as_matrix(a)
    try:
        values, vectors = np.linalg.eig(matrix)
    except np.linalg.LinAlgError as exc:
        raise EigenvalueConvergenceError(f'eigenvalue iteration did not converge: {exc}') from exc

    scale = 1.0 + frobenius_norm(matrix)
    residuals = np.linalg.norm(matrix @ vectors - vectors * values, axis=0)
    norms = np.linalg.norm(vectors, axis=0)
    worst = int(np.argmax(residuals - tol * scale * norms))
    if not np.all(np.isfinite(values)) or residuals[worst] > tol * scale * norms[worst]:
        raise EigenvalueConvergenceError(
            f'eigenpair residual {residuals[worst]:.3e} exceeds {tol * scale:.3e} for lambda={values[worst]}'
        )
    return ComplexSpectrum.from_values(values)
