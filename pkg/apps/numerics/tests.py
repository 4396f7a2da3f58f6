from unittest import mock

import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_allclose

from .calculus import default_step, fd_hessian_component, fd_hessian_raw, fd_jacobian, fd_partial_matrix
from .exceptions import DimensionMismatchError, EigenvalueConvergenceError, GeometryError, NonFiniteValueError
from .linalg import (
    ComplexSpectrum,
    as_matrix,
    eigenvalues,
    frobenius_norm,
    identity,
    mat_add,
    mat_mul,
    skew_part,
    sym_part,
    trace,
    transpose,
)


class MatrixHelperTests(SimpleTestCase):
    def test_as_matrix_is_read_only(self):
        matrix = as_matrix([[1.0, 2.0], [3.0, 4.0]])
        with self.assertRaises(ValueError):
            matrix[0, 0] = 5.0

    def test_as_matrix_rejects_non_square(self):
        with self.assertRaises(DimensionMismatchError):
            as_matrix([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]])

    def test_as_matrix_names_the_non_finite_entry(self):
        with self.assertRaises(NonFiniteValueError) as ctx:
            as_matrix([[1.0, 0.0], [np.nan, 1.0]])
        self.assertIn('(2, 1)', str(ctx.exception))
        self.assertIsInstance(ctx.exception, GeometryError)

    def test_shape_mismatch_is_an_error_not_a_broadcast(self):
        with self.assertRaises(DimensionMismatchError):
            mat_add(identity(3), identity(2))
        with self.assertRaises(DimensionMismatchError):
            mat_mul(identity(3), identity(2))

    def test_skew_and_symmetric_parts_recombine(self):
        a = as_matrix(np.arange(16.0).reshape(4, 4) ** 1.5)
        assert_allclose(skew_part(a) + sym_part(a), a, atol=1e-12)
        assert_allclose(skew_part(a), -transpose(skew_part(a)), atol=0)
        assert_allclose(sym_part(a), transpose(sym_part(a)), atol=0)

    def test_trace_and_norm(self):
        a = as_matrix([[3.0, 4.0], [0.0, -1.0]])
        self.assertEqual(trace(a), 2.0)
        self.assertAlmostEqual(frobenius_norm(a), np.sqrt(26.0))

    def test_trace_of_a_times_its_transpose_is_the_squared_norm(self):
        rng = np.random.default_rng(5)
        for n in range(1, 7):
            a = as_matrix(rng.normal(size=(n, n)))
            gram = trace(mat_mul(a, transpose(a)))
            self.assertGreaterEqual(gram, 0.0)
            self.assertAlmostEqual(gram, frobenius_norm(a) ** 2, delta=1e-12 * (1.0 + gram))


class EigenvalueTests(SimpleTestCase):
    def test_diagonal_matrix(self):
        spectrum = eigenvalues(np.diag([3.0, -1.0, 2.0]))
        assert_allclose([v.real for v in spectrum], [3.0, 2.0, -1.0], atol=1e-10)
        assert_allclose([v.imag for v in spectrum], [0.0, 0.0, 0.0], atol=1e-10)
        self.assertEqual(spectrum.max_real_part, 3.0)

    def test_rotation_has_conjugate_pair(self):
        spectrum = eigenvalues([[0.0, -1.0], [1.0, 0.0]])
        self.assertEqual(len(spectrum), 2)
        assert_allclose(spectrum.eigenvalues[0], 1j, atol=1e-10)
        assert_allclose(spectrum.eigenvalues[1], -1j, atol=1e-10)
        self.assertEqual(spectrum.as_pairs()[0]['im'], spectrum.eigenvalues[0].imag)

    def test_companion_matrix_roots(self):
        # (t - 1)(t - 2)(t - 3) = t^3 - 6 t^2 + 11 t - 6
        companion = [[6.0, -11.0, 6.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]
        assert_allclose(eigenvalues(companion).real_parts, (3.0, 2.0, 1.0), atol=1e-10)

    def test_random_matrices_match_trace_and_pair_up(self):
        rng = np.random.default_rng(7)
        for _ in range(1000):
            a = rng.normal(size=(6, 6))
            spectrum = eigenvalues(a)
            scale = 1e-9 * (1.0 + np.linalg.norm(a))
            self.assertLessEqual(abs(sum(spectrum.eigenvalues) - np.trace(a)), scale)
            for value in spectrum:
                if abs(value.imag) > scale:
                    gap = min(abs(value.conjugate() - other) for other in spectrum)
                    self.assertLessEqual(gap, scale)

    def test_product_of_eigenvalues_is_the_determinant(self):
        rng = np.random.default_rng(9)
        for n in range(1, 5):
            for _ in range(50):
                a = rng.normal(size=(n, n))
                product = np.prod(np.array(eigenvalues(a).eigenvalues))
                det = np.linalg.det(a)
                scale = 1e-9 * (1.0 + np.linalg.norm(a)) ** n
                self.assertLessEqual(abs(product.imag), scale)
                self.assertLessEqual(abs(product.real - det), scale)

    def test_lapack_failure_is_a_convergence_error(self):
        with mock.patch('numpy.linalg.eig', side_effect=np.linalg.LinAlgError('Eigenvalues did not converge')):
            with self.assertRaises(EigenvalueConvergenceError) as ctx:
                eigenvalues(np.diag([1.0, 2.0]))
        self.assertIn('did not converge', str(ctx.exception))
        self.assertIsInstance(ctx.exception, GeometryError)

    def test_garbage_spectrum_fails_the_residual_check(self):
        with mock.patch('numpy.linalg.eig', return_value=(np.array([5.0, 7.0]), np.eye(2))):
            with self.assertRaises(EigenvalueConvergenceError) as ctx:
                eigenvalues(np.diag([1.0, 2.0]))
        self.assertIn('residual', str(ctx.exception))

    def test_ordering_is_descending_real_then_imaginary(self):
        spectrum = ComplexSpectrum.from_values([1 - 2j, -3.0, 1 + 2j, 4.0])
        self.assertEqual(spectrum.eigenvalues, (4.0, 1 + 2j, 1 - 2j, -3.0))

    def test_non_finite_input_is_rejected(self):
        with self.assertRaises(NonFiniteValueError):
            eigenvalues([[np.inf, 0.0], [0.0, 1.0]])


def _cubic(x):
    return np.array([x[0] ** 3 + x[0] * x[1], np.sin(x[1]) * x[2], x[2] ** 2])


class FiniteDifferenceTests(SimpleTestCase):
    point = np.array([0.7, -1.2, 2.0])

    def test_default_step_scales_with_the_point(self):
        self.assertEqual(default_step([0.0, 0.0]), 1e-5)
        self.assertAlmostEqual(default_step([1e4, -2e5]), 2e-2)

    def test_jacobian_of_a_linear_map_is_the_matrix(self):
        a = np.array([[1.0, 2.0], [-3.0, 0.5]])
        assert_allclose(fd_jacobian(lambda x: a @ x, [3.0, -4.0]), a, atol=1e-9)

    def test_jacobian_of_a_nonlinear_map(self):
        x, y, z = self.point
        expected = [[3 * x**2 + y, x, 0.0], [0.0, np.cos(y) * z, np.sin(y)], [0.0, 0.0, 2 * z]]
        assert_allclose(fd_jacobian(_cubic, self.point, 1e-5), expected, atol=1e-8)

    def test_hessian_component(self):
        x, y, z = self.point
        hessian = fd_hessian_component(lambda p: _cubic(p)[1], self.point, 1e-4)
        expected = [[0.0, 0.0, 0.0], [0.0, -np.sin(y) * z, np.cos(y)], [0.0, np.cos(y), 0.0]]
        assert_allclose(hessian, expected, atol=1e-6)
        assert_allclose(hessian, hessian.T, atol=0)

    def test_raw_hessian_is_symmetric_up_to_rounding(self):
        raw = fd_hessian_raw(lambda p: _cubic(p)[0], self.point, 1e-4)
        assert_allclose(raw, raw.T, atol=1e-8)
        self.assertAlmostEqual(raw[0, 0], 6 * self.point[0], places=5)

    def test_partial_matrix_along_one_axis(self):
        def g(p):
            return np.array([[p[0] * p[1], p[1] ** 2], [1.0, p[0]]])

        assert_allclose(fd_partial_matrix(g, [2.0, 3.0], 1, 1e-5), [[2.0, 6.0], [0.0, 0.0]], atol=1e-8)
        with self.assertRaises(IndexError):
            fd_partial_matrix(g, [2.0, 3.0], 2)

    def test_non_finite_stencil_names_the_coordinate(self):
        def blows_up(p):
            return np.array([np.log(p[1])])

        with self.assertRaises(NonFiniteValueError) as ctx:
            fd_jacobian(blows_up, [1.0, 5e-4], 1e-3)
        self.assertEqual(ctx.exception.coordinate, 1)

    def test_step_must_be_positive(self):
        with self.assertRaises(ValueError):
            fd_jacobian(_cubic, self.point, 0.0)
