import json
from unittest.mock import patch

import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_allclose

from apps.dynamics.integrators import integrate_rk4
from apps.epidemic.covid import covid_field
from apps.epidemic.testing import (
    DISEASE_FREE_STATE,
    RECOVERED_STATE,
    REFERENCE_STATE,
    random_params,
    random_states,
    reference_params,
)
from apps.epidemic.vector_field import linear_field, zero_field
from apps.numerics.calculus import fd_jacobian
from apps.numerics.linalg import as_matrix

from .closed_forms import hamilton_connection_closed_form, lagrange_connection_closed_form
from .hamilton import CotangentPoint, connection_hamilton, hamiltonian, torsions_hamilton
from .kcc import (
    StabilityClass,
    classify_deviation,
    curvature_matrix_E,
    deviation_curvature,
    first_invariant,
    first_invariant_from_semispray,
    jacobi_stability,
)
from .lagrange import (
    TangentPoint,
    connection_lagrange,
    energy_from_connection,
    euler_lagrange_residual,
    lagrangian,
    listed_terms_energy,
    semispray,
    torsions_lagrange,
    upper_triangle_energy,
    yang_mills_energy,
)
from .oracles import (
    OracleDeviation,
    deviation_curvature_gap,
    fd_connection_hamilton,
    fd_curvature_E,
    fd_deviation_curvature,
    fd_torsions_lagrange,
)
from .serializers import GeometryReportSerializer
from .services import GeometryReportService


class LagrangianTests(SimpleTestCase):
    def setUp(self):
        self.field = covid_field(reference_params())

    def test_lagrangian_vanishes_on_shell(self):
        self.assertEqual(lagrangian(self.field, TangentPoint.on_shell(self.field, REFERENCE_STATE)), 0.0)

    def test_lagrangian_at_rest_is_the_squared_field(self):
        tp = TangentPoint(x=REFERENCE_STATE, y=np.zeros(6))
        self.assertAlmostEqual(lagrangian(self.field, tp), 218.295, places=10)

    def test_lagrangian_of_a_unit_offset(self):
        offset = self.field(REFERENCE_STATE) + np.eye(6)[0]
        self.assertAlmostEqual(lagrangian(self.field, TangentPoint(x=REFERENCE_STATE, y=offset)), 1.0, places=12)

    def test_semispray_of_a_symmetric_linear_field(self):
        a = np.array([[2.0, 1.0], [1.0, 3.0]])
        field = linear_field(a)
        x = np.array([1.0, -1.0])
        tp = TangentPoint(x=x, y=[5.0, 7.0])
        assert_allclose(semispray(field, tp), -0.5 * a @ a @ x, atol=1e-14)

    def test_tangent_point_rejects_mismatched_dimensions(self):
        with self.assertRaises(ValueError):
            TangentPoint(x=np.ones(6), y=np.ones(5))


class EulerLagrangeResidualTests(SimpleTestCase):
    def setUp(self):
        self.field = covid_field(reference_params())

    def test_equilibrium_trajectory_has_zero_residual(self):
        trajectory = integrate_rk4(self.field, DISEASE_FREE_STATE, (0.0, 1.0), 0.1)
        assert_allclose(euler_lagrange_residual(self.field, trajectory), 0.0, atol=0)

    def test_residual_is_small_and_second_order(self):
        coarse = integrate_rk4(self.field, REFERENCE_STATE, (0.0, 1.0), 0.01)
        fine = integrate_rk4(self.field, REFERENCE_STATE, (0.0, 1.0), 0.005)
        coarse_residual = np.max(np.abs(euler_lagrange_residual(self.field, coarse)))
        fine_residual = np.max(np.abs(euler_lagrange_residual(self.field, fine)))
        self.assertLessEqual(coarse_residual, 1e-3)
        self.assertGreater(coarse_residual / fine_residual, 3.5)
        self.assertLess(coarse_residual / fine_residual, 4.5)

    def test_residual_needs_uniform_samples(self):
        class Path:
            times = np.array([0.0, 0.1, 0.3])
            states = np.tile(REFERENCE_STATE, (3, 1))

        with self.assertRaises(ValueError):
            euler_lagrange_residual(self.field, Path())


class LagrangeConnectionTests(SimpleTestCase):
    def setUp(self):
        self.field = covid_field(reference_params())

    def test_connection_at_the_recovered_state(self):
        connection = connection_lagrange(self.field, RECOVERED_STATE)
        expected_upper = {(2, 3): 0.05, (2, 4): 0.05, (3, 5): 0.025, (3, 6): 0.05, (4, 6): 0.075, (5, 6): 0.06}
        for i in range(6):
            for j in range(i + 1, 6):
                self.assertAlmostEqual(connection[i, j], expected_upper.get((i + 1, j + 1), 0.0), places=15)
        self.assertAlmostEqual(yang_mills_energy(self.field, RECOVERED_STATE), 0.01735, delta=1e-12)

    def test_listed_terms_miss_the_second_third_entry(self):
        connection = connection_lagrange(self.field, RECOVERED_STATE)
        self.assertAlmostEqual(listed_terms_energy(connection), 0.01735, delta=1e-12)
        self.assertAlmostEqual(listed_terms_energy(connection, include_missing=False), 0.01485, delta=1e-12)

    def test_connection_identities_at_random_states(self):
        rng = np.random.default_rng(5)
        for x in random_states(rng, 100):
            field = covid_field(random_params(rng))
            jac = field.jacobian_at(x)
            connection = connection_lagrange(field, x)
            assert_allclose(connection, -connection.T, atol=0)
            assert_allclose(-2.0 * connection, jac - jac.T, atol=1e-12)
            assert_allclose(connection_hamilton(field, x), jac + jac.T, atol=1e-12)
            energy = energy_from_connection(connection)
            self.assertAlmostEqual(energy, upper_triangle_energy(connection), delta=1e-12 * (1.0 + energy))

    def test_closed_forms_agree_with_the_matrix_formulas(self):
        rng = np.random.default_rng(9)
        cases = [(reference_params(), REFERENCE_STATE), (reference_params(), RECOVERED_STATE)]
        cases += [(random_params(rng), x) for x in random_states(rng, 100)]
        for params, x in cases:
            field = covid_field(params)
            assert_allclose(lagrange_connection_closed_form(params, x), connection_lagrange(field, x), atol=1e-12)
            assert_allclose(hamilton_connection_closed_form(params, x), connection_hamilton(field, x), atol=1e-12)

    def test_torsions_match_finite_differences_of_the_connection(self):
        rng = np.random.default_rng(13)
        for x in [REFERENCE_STATE, *random_states(rng, 99)]:
            torsions = torsions_lagrange(self.field, x)
            assert_allclose(torsions, fd_torsions_lagrange(self.field, x), atol=1e-6)
            assert_allclose(torsions[:, 2:, 2:], 0.0, atol=0)
            assert_allclose(torsions, -np.transpose(torsions, (0, 2, 1)), atol=0)


class KccTests(SimpleTestCase):
    def setUp(self):
        self.field = covid_field(reference_params())
        self.tp = TangentPoint.on_shell(self.field, REFERENCE_STATE)

    def test_first_invariant_two_paths(self):
        rng = np.random.default_rng(17)
        for x in random_states(rng, 100):
            tp = TangentPoint(x=x, y=rng.normal(scale=100.0, size=6))
            direct = first_invariant(self.field, tp)
            assert_allclose(first_invariant_from_semispray(self.field, tp), direct, atol=1e-12 * (1 + np.max(np.abs(direct))))

    def test_first_invariant_derivative_in_y_is_the_connection(self):
        derivative = fd_jacobian(lambda w: first_invariant(self.field, TangentPoint(x=self.tp.x, y=w)), self.tp.y, 1.0)
        assert_allclose(derivative, connection_lagrange(self.field, self.tp.x), atol=1e-12)

    def test_curvature_matches_the_delta_derivative(self):
        rng = np.random.default_rng(19)
        points = [self.tp] + [TangentPoint.on_shell(self.field, x) for x in random_states(rng, 99)]
        for tp in points:
            assert_allclose(curvature_matrix_E(self.field, tp), fd_curvature_E(self.field, tp), atol=1e-5)

    def test_deviation_curvature_matches_nested_differences(self):
        self.assertLessEqual(deviation_curvature_gap(self.field, self.tp, 1e-3), 1e-4)

    def test_deviation_curvature_is_affine_in_y(self):
        y1, y2 = np.full(6, 3.0), np.linspace(-5.0, 5.0, 6)
        p1 = deviation_curvature(self.field, TangentPoint(x=self.tp.x, y=y1))
        p2 = deviation_curvature(self.field, TangentPoint(x=self.tp.x, y=y2))
        middle = deviation_curvature(self.field, TangentPoint(x=self.tp.x, y=0.5 * (y1 + y2)))
        assert_allclose(middle, 0.5 * (p1 + p2), atol=1e-12)

    def test_classify_negative_definite(self):
        verdict = classify_deviation(as_matrix(-np.eye(6)))
        self.assertIs(verdict.classification, StabilityClass.JACOBI_STABLE)
        self.assertTrue(verdict.is_stable)
        self.assertEqual(verdict.margin, 1.0)

    def test_classify_uses_the_margin_band(self):
        small = as_matrix(np.diag([1e-3, -2.0]))
        self.assertIs(classify_deviation(small).classification, StabilityClass.JACOBI_UNSTABLE)
        self.assertIs(classify_deviation(small, margin=1e-2).classification, StabilityClass.MARGINAL)

    def test_zero_field_is_marginal(self):
        tp = TangentPoint(x=np.ones(6), y=np.ones(6))
        verdict = jacobi_stability(zero_field(6), tp)
        self.assertIs(verdict.classification, StabilityClass.MARGINAL)
        self.assertEqual(verdict.max_real_part, 0.0)

    def test_classification_agrees_with_the_nested_difference_p(self):
        rng = np.random.default_rng(31)
        states = [REFERENCE_STATE] + [x * (1000.0 / x.sum()) for x in random_states(rng, 20)]
        for x in states:
            tp = TangentPoint.on_shell(self.field, x)
            verdict = jacobi_stability(self.field, tp)
            if abs(verdict.max_real_part) <= 1e-6:
                continue
            numeric = classify_deviation(fd_deviation_curvature(self.field, tp, 1e-3))
            self.assertIs(numeric.classification, verdict.classification)
            self.assertAlmostEqual(numeric.max_real_part, verdict.max_real_part, delta=1e-4)

    def test_verdict_reports_the_spectrum_of_p(self):
        verdict = jacobi_stability(self.field, self.tp)
        expected = np.linalg.eigvals(deviation_curvature(self.field, self.tp))
        self.assertAlmostEqual(verdict.max_real_part, float(np.max(expected.real)), delta=1e-12)
        self.assertEqual(len(verdict.eigenvalues), 6)


class HamiltonTests(SimpleTestCase):
    def setUp(self):
        self.field = covid_field(reference_params())

    def test_hamilton_connection_diagonal_entries(self):
        connection = connection_hamilton(self.field, REFERENCE_STATE)
        self.assertAlmostEqual(connection[3, 3], -0.3, places=15)
        self.assertAlmostEqual(connection[2, 2], -0.32, places=15)
        assert_allclose(connection, connection.T, atol=0)

    def test_hamiltonian_at_the_legendre_image_of_rest(self):
        p = -2.0 * self.field(REFERENCE_STATE)
        self.assertAlmostEqual(hamiltonian(self.field, CotangentPoint(x=REFERENCE_STATE, p=p)), -218.295, places=10)

    def test_legendre_identity_and_convexity(self):
        rng = np.random.default_rng(23)
        for _ in range(20):
            tp = TangentPoint(x=REFERENCE_STATE, y=rng.normal(scale=10.0, size=6))
            cp = CotangentPoint.legendre(self.field, tp)
            legendre = cp.p @ tp.y - lagrangian(self.field, tp)
            self.assertAlmostEqual(hamiltonian(self.field, cp), legendre, delta=1e-9 * (1 + abs(legendre)))
            other = TangentPoint(x=REFERENCE_STATE, y=rng.normal(scale=10.0, size=6))
            self.assertLessEqual(cp.p @ other.y - lagrangian(self.field, other), hamiltonian(self.field, cp) + 1e-9)

    def test_midpoint_convexity_gap_in_p(self):
        rng = np.random.default_rng(37)
        for x in [REFERENCE_STATE, *random_states(rng, 20)]:
            p, q = rng.normal(scale=50.0, size=(2, 6))
            values = [hamiltonian(self.field, CotangentPoint(x=x, p=v)) for v in (p, q, 0.5 * (p + q))]
            gap = 0.5 * (values[0] + values[1]) - values[2]
            expected = 0.25 * float(np.sum((0.5 * (p - q)) ** 2))
            self.assertAlmostEqual(gap, expected, delta=1e-9 * (1.0 + max(abs(v) for v in values)))

    def test_torsions_are_minus_twice_the_lagrange_torsions(self):
        rng = np.random.default_rng(29)
        for x in random_states(rng, 20):
            assert_allclose(torsions_hamilton(self.field, x), -2.0 * torsions_lagrange(self.field, x), atol=1e-12)

    def test_connections_recombine_to_the_jacobian(self):
        jac = self.field.jacobian_at(REFERENCE_STATE)
        recombined = 0.5 * connection_hamilton(self.field, REFERENCE_STATE) - connection_lagrange(self.field, REFERENCE_STATE)
        assert_allclose(recombined, jac, atol=1e-15)

    def test_connection_matches_mixed_partials_of_h(self):
        assert_allclose(
            connection_hamilton(self.field, REFERENCE_STATE), fd_connection_hamilton(self.field, REFERENCE_STATE), atol=1e-6
        )


class GeometryReportServiceTests(SimpleTestCase):
    def setUp(self):
        self.service = GeometryReportService(covid_field(reference_params()))

    def test_on_shell_defaults(self):
        report = self.service.build(REFERENCE_STATE)
        assert_allclose(report.tangent.y, [-13.05, 3.05, 1.8, 2.0, 0.3, 5.6], atol=1e-12)
        assert_allclose(report.cotangent.p, 0.0, atol=0)
        self.assertEqual(report.lagrange.lagrangian, 0.0)
        self.assertEqual(report.hamilton.hamiltonian, 0.0)
        self.assertEqual(report.checks, ())

    def test_explicit_tangent_and_covector(self):
        report = self.service.build(REFERENCE_STATE, y=np.zeros(6), p=np.ones(6))
        self.assertAlmostEqual(report.lagrange.lagrangian, 218.295, places=10)
        assert_allclose(report.cotangent.p, np.ones(6))

    def test_checks_pass_at_the_reference_state(self):
        report = self.service.build(REFERENCE_STATE, check=True)
        self.assertEqual(len(report.checks), 10)
        failed = [check.name for check in report.checks if not check.passed]
        self.assertEqual(failed, [])

    def test_failing_check_is_logged(self):
        failing = [OracleDeviation('jacobian vs finite differences', 1.0, 1e-6)]
        with (
            patch('apps.geometry.services.pointwise_deviations', return_value=failing),
            patch('apps.geometry.services.logger') as logger_mock,
        ):
            report = self.service.build(REFERENCE_STATE, check=True)

        self.assertFalse(report.checks[0].passed)
        logger_mock.warning.assert_called_once()


class GeometryReportSerializerTests(SimpleTestCase):
    def test_report_is_json_ready(self):
        report = GeometryReportService(covid_field(reference_params())).build(REFERENCE_STATE, y=np.zeros(6), check=True)
        data = json.loads(json.dumps(GeometryReportSerializer(report).data))

        self.assertEqual(
            set(data),
            {'x', 'y', 'p', 'L', 'G', 'N', 'R', 'EYM', 'invariant', 'E', 'P', 'verdict', 'H', 'N_H', 'R_H', 'checks'},
        )
        n = np.array(data['N'])
        n_h = np.array(data['N_H'])
        assert_allclose(n, -n.T, atol=0)
        assert_allclose(n_h, n_h.T, atol=0)
        self.assertEqual(np.array(data['R']).shape, (6, 6, 6))
        self.assertAlmostEqual(data['L'], 218.295, places=10)
        self.assertIn(data['verdict']['class'], {'stable', 'unstable', 'marginal'})
        self.assertEqual(len(data['verdict']['eigenvalues']), 6)
        self.assertTrue(all(check['passed'] for check in data['checks']))
