import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_allclose

from apps.geometry.oracles import fd_hessians
from apps.numerics.calculus import fd_jacobian
from apps.numerics.exceptions import DegeneratePopulationError, DimensionMismatchError, InvalidStateError

from .covid import (
    COMPARTMENTS,
    DIMENSION,
    covid_field,
    covid_hessians,
    covid_jacobian,
    deceased_rate,
    force_of_infection,
    population_total,
    state_as_mapping,
    state_from_mapping,
)
from .serializers import InitialStateSerializer, ModelParamsSerializer, StateSerializer
from .testing import (
    DISEASE_FREE_STATE,
    REFERENCE_RATES,
    REFERENCE_STATE,
    random_params,
    random_states,
    reference_params,
)
from .vector_field import linear_field, zero_field


class ModelParamsTests(SimpleTestCase):
    def test_fraction_must_be_in_half_open_unit_interval(self):
        reference_params(r=1.0)
        for bad in (0.0, 1.5, -0.2):
            with self.assertRaises(ValueError):
                reference_params(r=bad)

    def test_rates_must_be_non_negative_and_finite(self):
        with self.assertRaises(ValueError):
            reference_params(sigma=-0.1)
        with self.assertRaises(ValueError):
            reference_params(beta_s=float('nan'))

    def test_derived_exit_rates(self):
        params = reference_params()
        self.assertAlmostEqual(params.symptomatic_exit, 0.16)
        self.assertAlmostEqual(params.hospital_exit, 0.14)
        assert_allclose(params.transmission, [0.0, 0.0, 0.4, 0.3, 0.1, 0.0])


class CovidFieldTests(SimpleTestCase):
    def setUp(self):
        self.params = reference_params()
        self.field = covid_field(self.params)

    def test_field_at_reference_state(self):
        assert_allclose(self.field(REFERENCE_STATE), [-13.05, 3.05, 1.8, 2.0, 0.3, 5.6], atol=1e-12)
        self.assertAlmostEqual(deceased_rate(self.params, REFERENCE_STATE), 0.3)

    def test_force_of_infection(self):
        force = force_of_infection(self.params, REFERENCE_STATE)
        self.assertEqual(force.total, 1000.0)
        self.assertAlmostEqual(force.lam, 0.0145)
        self.assertAlmostEqual(force.susceptible_share, 0.9)
        self.assertAlmostEqual(force.incidence_share, 0.01305)

    def test_field_and_deceased_outflow_sum_to_zero(self):
        rng = np.random.default_rng(3)
        for x in random_states(rng, 50):
            params = random_params(rng)
            field = covid_field(params)
            total = np.sum(field(x)) + deceased_rate(params, x)
            self.assertLessEqual(abs(total), 1e-10 * (1.0 + np.max(np.abs(field(x)))))

    def test_disease_free_state_is_an_equilibrium(self):
        assert_allclose(self.field(DISEASE_FREE_STATE), np.zeros(DIMENSION), atol=0)

    def test_scale_covariance(self):
        for c in (1e-3, 7.0, 1e4):
            assert_allclose(self.field(c * REFERENCE_STATE), c * self.field(REFERENCE_STATE), rtol=1e-12, atol=0)

    def test_degenerate_population(self):
        with self.assertRaises(DegeneratePopulationError):
            self.field(np.zeros(DIMENSION))
        with self.assertRaises(DegeneratePopulationError):
            self.field(np.array([-10.0, 0.0, 0.0, 0.0, 0.0, 5.0]))

    def test_strict_mode_rejects_negative_compartments(self):
        state = np.array([900.0, -1.0, 20.0, 20.0, 5.0, 5.0])
        self.field(state)
        with self.assertRaises(InvalidStateError):
            covid_field(self.params, strict=True)(state)

    def test_wrong_dimension(self):
        with self.assertRaises(DimensionMismatchError):
            self.field(np.ones(5))


class CovidDerivativeTests(SimpleTestCase):
    def setUp(self):
        self.field = covid_field(reference_params())

    def test_reference_jacobian_entries(self):
        jac = self.field.jacobian_at(REFERENCE_STATE)
        k = 0.0145 * 0.9
        assert_allclose(jac[0], [k - 0.0145, k, k - 0.36, k - 0.27, k - 0.09, k], atol=1e-15)
        assert_allclose(jac[1], -jac[0] - np.array([0.0, 0.2, 0.0, 0.0, 0.0, 0.0]), atol=1e-15)
        assert_allclose(jac[2], [0.0, 0.1, -0.16, 0.0, 0.0, 0.0], atol=1e-15)
        assert_allclose(jac[5], [0.0, 0.0, 0.1, 0.15, 0.12, 0.0], atol=1e-15)

    def test_jacobian_matches_finite_differences(self):
        rng = np.random.default_rng(11)
        for x in [REFERENCE_STATE, *random_states(rng, 99)]:
            params = random_params(rng)
            field = covid_field(params)
            assert_allclose(field.jacobian_at(x), fd_jacobian(field, x), atol=1e-6)

    def test_jacobian_when_everyone_is_susceptible(self):
        jac = self.field.jacobian_at([1000.0, 0.0, 0.0, 0.0, 0.0, 0.0])
        self.assertEqual(jac[0, 2], -0.4)
        assert_allclose(jac[0, 2:5], [-0.4, -0.3, -0.1], atol=0)
        assert_allclose(jac[1, 2:5], [0.4, 0.3, 0.1], atol=0)

    def test_jacobian_column_sums_are_minus_the_deceased_gradient(self):
        sums = self.field.jacobian_at(REFERENCE_STATE).sum(axis=0)
        assert_allclose(sums, [0.0, 0.0, -0.01, 0.0, -0.02, 0.0], atol=1e-15)

    def test_hessians_vanish_outside_the_first_two_components(self):
        hess = self.field.hessians_at(REFERENCE_STATE)
        self.assertEqual(hess.shape, (6, 6, 6))
        assert_allclose(hess[2:], 0.0, atol=0)
        assert_allclose(hess[0] + hess[1], 0.0, atol=0)
        assert_allclose(hess[0], hess[0].T, atol=1e-18)

    def test_hessians_match_finite_differences_of_the_field(self):
        assert_allclose(self.field.hessians_at(REFERENCE_STATE), fd_hessians(self.field, REFERENCE_STATE), atol=1e-4)

    def test_derivative_factories_match_the_field(self):
        params = reference_params()
        assert_allclose(covid_jacobian(params)(REFERENCE_STATE), self.field.jacobian_at(REFERENCE_STATE), atol=0)
        assert_allclose(covid_hessians(params)(REFERENCE_STATE), self.field.hessians_at(REFERENCE_STATE), atol=0)

    def test_reversed_field_negates_everything(self):
        reversed_field = self.field.reversed()
        assert_allclose(reversed_field(REFERENCE_STATE), -self.field(REFERENCE_STATE), atol=0)
        assert_allclose(reversed_field.jacobian_at(REFERENCE_STATE), -self.field.jacobian_at(REFERENCE_STATE), atol=0)
        self.assertEqual(reversed_field.sink_at(REFERENCE_STATE), -self.field.sink_at(REFERENCE_STATE))


class GenericFieldTests(SimpleTestCase):
    def test_linear_field(self):
        field = linear_field([[-1.0, 2.0], [0.0, 3.0]])
        assert_allclose(field([1.0, 1.0]), [1.0, 3.0])
        assert_allclose(field.jacobian_at([5.0, -5.0]), [[-1.0, 2.0], [0.0, 3.0]])
        assert_allclose(field.hessians_at([5.0, -5.0]), np.zeros((2, 2, 2)))
        self.assertEqual(field.sink_at([1.0, 1.0]), 0.0)

    def test_zero_field(self):
        field = zero_field(4)
        assert_allclose(field(np.arange(4.0)), np.zeros(4))

    def test_missing_derivatives_fall_back_to_finite_differences(self):
        from .vector_field import VectorFieldSpec

        field = VectorFieldSpec(dimension=2, evaluator=lambda x: np.array([x[0] * x[1], x[0] ** 2]))
        assert_allclose(field.jacobian_at([2.0, 3.0]), [[3.0, 2.0], [4.0, 0.0]], atol=1e-8)
        assert_allclose(field.hessians_at([2.0, 3.0])[1], [[2.0, 0.0], [0.0, 0.0]], atol=1e-3)


class StateHelperTests(SimpleTestCase):
    def test_mapping_round_trip_keeps_compartment_order(self):
        mapping = state_as_mapping(REFERENCE_STATE)
        self.assertEqual(tuple(mapping), COMPARTMENTS)
        assert_allclose(state_from_mapping(mapping), REFERENCE_STATE)
        self.assertEqual(population_total(REFERENCE_STATE), 1000.0)


class ModelParamsSerializerTests(SimpleTestCase):
    def test_valid_params_create_model_params(self):
        serializer = ModelParamsSerializer(data=REFERENCE_RATES)
        self.assertTrue(serializer.is_valid(), serializer.errors)
        self.assertEqual(serializer.save(), reference_params())

    def test_unknown_key_is_rejected(self):
        serializer = ModelParamsSerializer(data={**REFERENCE_RATES, 'beta_x': 0.1})
        self.assertFalse(serializer.is_valid())
        self.assertEqual(serializer.errors['beta_x'], ['Unknown field.'])

    def test_fraction_out_of_range(self):
        for bad in (1.5, 0.0):
            serializer = ModelParamsSerializer(data={**REFERENCE_RATES, 'r': bad})
            self.assertFalse(serializer.is_valid())
            self.assertIn('r', serializer.errors)

    def test_missing_field_is_named(self):
        data = dict(REFERENCE_RATES)
        del data['gamma_h']
        serializer = ModelParamsSerializer(data=data)
        self.assertFalse(serializer.is_valid())
        self.assertIn('gamma_h', serializer.errors)

    def test_booleans_and_non_finite_values_are_rejected(self):
        for bad in (True, 'nan', 'inf'):
            serializer = ModelParamsSerializer(data={**REFERENCE_RATES, 'sigma': bad})
            self.assertFalse(serializer.is_valid())
            self.assertIn('sigma', serializer.errors)

    def test_representation_of_model_params(self):
        self.assertEqual(ModelParamsSerializer(reference_params()).data, REFERENCE_RATES)


class StateSerializerTests(SimpleTestCase):
    def test_initial_state_defaults_deceased_to_zero(self):
        serializer = InitialStateSerializer(data=state_as_mapping(REFERENCE_STATE))
        self.assertTrue(serializer.is_valid(), serializer.errors)
        initial = serializer.save()
        assert_allclose(initial.state, REFERENCE_STATE)
        self.assertEqual(initial.deceased, 0.0)

    def test_non_positive_population_is_rejected(self):
        serializer = StateSerializer(data=state_as_mapping(np.zeros(DIMENSION)))
        self.assertFalse(serializer.is_valid())
        self.assertIn('non_field_errors', serializer.errors)

    def test_negative_deceased_is_rejected(self):
        serializer = InitialStateSerializer(data={**state_as_mapping(REFERENCE_STATE), 'D': -1.0})
        self.assertFalse(serializer.is_valid())
        self.assertIn('D', serializer.errors)
