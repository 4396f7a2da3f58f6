import io

import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_allclose

from apps.epidemic.covid import covid_field
from apps.epidemic.testing import DISEASE_FREE_STATE, RECOVERED_STATE, REFERENCE_STATE, reference_params
from apps.epidemic.vector_field import VectorFieldSpec, linear_field
from apps.numerics.exceptions import IntegrationError, StepSizeUnderflowError

from .integrators import integrate_adaptive, integrate_rk4, sample_times
from .services import STABILITY_HEADER, TRAJECTORY_HEADER, TrajectoryService, format_number
from .trajectory import SampleGeometry, Trajectory


class TrajectoryTests(SimpleTestCase):
    def test_arrays_are_read_only(self):
        trajectory = Trajectory(times=[0.0, 1.0], states=[[1.0, 2.0], [3.0, 4.0]], deceased=[0.0, 0.5])
        with self.assertRaises(ValueError):
            trajectory.states[0, 0] = 9.0
        assert_allclose(trajectory.conserved_total, [3.0, 7.5])
        self.assertEqual(trajectory.max_conservation_drift(), 4.5)

    def test_times_must_increase(self):
        with self.assertRaises(ValueError):
            Trajectory(times=[0.0, 0.0], states=[[1.0], [1.0]], deceased=[0.0, 0.0])

    def test_shapes_must_agree(self):
        with self.assertRaises(ValueError):
            Trajectory(times=[0.0, 1.0], states=[[1.0]], deceased=[0.0, 0.0])

    def test_geometry_length_must_match(self):
        trajectory = Trajectory(times=[0.0, 1.0], states=[[1.0], [1.0]], deceased=[0.0, 0.0])
        with self.assertRaises(ValueError):
            trajectory.with_geometry([SampleGeometry(0.0, 0.0, 'marginal')])

    def test_uniform_grid(self):
        self.assertTrue(Trajectory(times=sample_times(0.0, 1.0, 0.1), states=np.ones((11, 1)), deceased=np.zeros(11)).is_uniform())
        self.assertFalse(Trajectory(times=[0.0, 0.1, 0.3], states=np.ones((3, 1)), deceased=np.zeros(3)).is_uniform())


class SampleTimesTests(SimpleTestCase):
    def test_grid_ends_on_t1(self):
        times = sample_times(0.0, 100.0, 0.05)
        self.assertEqual(times.size, 2001)
        self.assertEqual(times[-1], 100.0)

    def test_short_last_step(self):
        times = sample_times(0.0, 1.0, 0.3)
        assert_allclose(times, [0.0, 0.3, 0.6, 0.9, 1.0])

    def test_dt_must_be_positive(self):
        with self.assertRaises(ValueError):
            sample_times(0.0, 1.0, 0.0)


class Rk4Tests(SimpleTestCase):
    def setUp(self):
        self.field = covid_field(reference_params())

    def test_total_with_deceased_is_conserved(self):
        trajectory = integrate_rk4(self.field, REFERENCE_STATE, (0.0, 100.0), 0.05)
        self.assertEqual(len(trajectory), 2001)
        self.assertLessEqual(trajectory.max_conservation_drift(), 1e-8 * 1000.0)
        self.assertGreater(trajectory.deceased[-1], 0.0)

    def test_disease_free_state_stays_put(self):
        trajectory = integrate_rk4(self.field, DISEASE_FREE_STATE, (0.0, 10.0), 0.1)
        assert_allclose(trajectory.states, np.tile(DISEASE_FREE_STATE, (len(trajectory), 1)), atol=0)
        assert_allclose(trajectory.deceased, 0.0, atol=0)

    def test_fourth_order_convergence(self):
        reference = integrate_rk4(self.field, REFERENCE_STATE, (0.0, 10.0), 0.025).states[-1]
        coarse = integrate_rk4(self.field, REFERENCE_STATE, (0.0, 10.0), 0.4).states[-1]
        fine = integrate_rk4(self.field, REFERENCE_STATE, (0.0, 10.0), 0.2).states[-1]
        ratio = np.max(np.abs(coarse - reference)) / np.max(np.abs(fine - reference))
        self.assertGreater(ratio, 12.0)
        self.assertLess(ratio, 20.0)

    def test_reversed_field_returns_to_the_start(self):
        forward = integrate_rk4(self.field, REFERENCE_STATE, (0.0, 5.0), 0.01)
        backward = integrate_rk4(
            self.field.reversed(), forward.states[-1], (0.0, 5.0), 0.01, d0=float(forward.deceased[-1])
        )
        assert_allclose(backward.states[-1], REFERENCE_STATE, rtol=1e-6, atol=1e-6)
        self.assertAlmostEqual(backward.deceased[-1], 0.0, delta=1e-6)

    def test_degenerate_population_reports_the_time(self):
        with self.assertRaises(IntegrationError) as ctx:
            integrate_rk4(self.field, np.zeros(6), (0.0, 1.0), 0.1)
        self.assertEqual(ctx.exception.time, 0.0)

    def test_span_must_be_increasing(self):
        with self.assertRaises(ValueError):
            integrate_rk4(self.field, REFERENCE_STATE, (1.0, 1.0), 0.1)

    def test_negative_compartment_is_logged(self):
        rotation = linear_field([[0.0, 1.0], [-1.0, 0.0]])
        with self.assertLogs('apps.dynamics.integrators', level='WARNING') as logs:
            integrate_rk4(rotation, [1.0, 0.0], (0.0, 1.0), 0.1)
        self.assertIn('went negative', logs.output[0])


class AdaptiveTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.field = covid_field(reference_params())
        cls.reference = integrate_rk4(cls.field, REFERENCE_STATE, (0.0, 10.0), 1e-3).states[-1]

    def _relative_error(self, rel_tol):
        trajectory = integrate_adaptive(self.field, REFERENCE_STATE, (0.0, 10.0), rel_tol=rel_tol)
        self.assertEqual(trajectory.times[-1], 10.0)
        return np.max(np.abs(trajectory.states[-1] - self.reference)) / np.max(np.abs(self.reference))

    def test_agrees_with_fine_rk4(self):
        self.assertLessEqual(self._relative_error(1e-6), 1e-5)

    def test_tighter_tolerance_is_more_accurate(self):
        self.assertLess(self._relative_error(1e-8), self._relative_error(1e-6))

    def test_conserves_the_total(self):
        trajectory = integrate_adaptive(self.field, REFERENCE_STATE, (0.0, 100.0))
        self.assertLessEqual(trajectory.max_conservation_drift(), 1e-8 * 1000.0)

    def test_dense_output_on_requested_times(self):
        times = sample_times(0.0, 10.0, 0.5)
        trajectory = integrate_adaptive(self.field, REFERENCE_STATE, (0.0, 10.0), t_eval=times)
        assert_allclose(trajectory.times, times)
        assert_allclose(trajectory.states[0], REFERENCE_STATE, atol=1e-9)
        assert_allclose(trajectory.states[-1], self.reference, rtol=1e-5)

    def test_first_and_max_step_bound_the_accepted_steps(self):
        trajectory = integrate_adaptive(self.field, REFERENCE_STATE, (0.0, 10.0), first_step=1e-3, max_step=0.5)
        self.assertEqual(trajectory.times[1], 1e-3)
        self.assertLessEqual(np.max(np.diff(trajectory.times)), 0.5 + 1e-9)
        self.assertGreaterEqual(len(trajectory), 21)

    def test_step_bounds_must_be_positive(self):
        for bounds in ({'first_step': 0.0}, {'max_step': -1.0}):
            with self.assertRaises(ValueError):
                integrate_adaptive(self.field, REFERENCE_STATE, (0.0, 1.0), **bounds)

    def test_t_eval_outside_the_span(self):
        with self.assertRaises(ValueError):
            integrate_adaptive(self.field, REFERENCE_STATE, (0.0, 1.0), t_eval=[0.5, 2.0])

    def test_blow_up_underflows_the_step(self):
        blow_up = VectorFieldSpec(dimension=1, evaluator=lambda x: x**2, name='blow up')
        with self.assertRaises(StepSizeUnderflowError) as ctx:
            integrate_adaptive(blow_up, [1.0], (0.0, 2.0))
        self.assertGreater(ctx.exception.time, 0.9)
        self.assertLessEqual(ctx.exception.time, 1.0)


class TrajectoryServiceTests(SimpleTestCase):
    def setUp(self):
        self.field = covid_field(reference_params())
        self.service = TrajectoryService(self.field)

    def test_format_number_keeps_seventeen_digits(self):
        self.assertEqual(format_number(0.1), '0.10000000000000001')
        self.assertEqual(format_number(1.0), '1')

    def test_csv_without_geometry(self):
        trajectory = integrate_rk4(self.field, REFERENCE_STATE, (0.0, 1.0), 0.5)
        stream = io.StringIO()
        self.assertEqual(TrajectoryService.write_csv(trajectory, stream), 3)
        lines = stream.getvalue().splitlines()
        self.assertEqual(lines[0], ','.join(TRAJECTORY_HEADER))
        self.assertEqual(lines[0], 't,S,E,Is,Ia,Ih,R,D,Ntot,EYM,max_re_P,jacobi_class')
        self.assertEqual(len(lines), 4)
        self.assertEqual(lines[1], '0,900,50,20,20,5,5,0,1000,,,')

    def test_annotated_csv_and_stability(self):
        trajectory = self.service.annotate(integrate_rk4(self.field, REFERENCE_STATE, (0.0, 1.0), 0.5))
        stream = io.StringIO()
        TrajectoryService.write_csv(trajectory, stream)
        row = stream.getvalue().splitlines()[1].split(',')
        self.assertIn(row[-1], {'stable', 'unstable', 'marginal'})
        self.assertEqual(float(row[9]), trajectory.geometry[0].energy)

        stability = io.StringIO()
        TrajectoryService.write_stability_csv(trajectory, stability)
        lines = stability.getvalue().splitlines()
        self.assertEqual(lines[0], 't,max_re_P,class')
        self.assertEqual(tuple(lines[0].split(',')), STABILITY_HEADER)
        self.assertEqual(len(lines), 4)

    def test_stability_needs_geometry(self):
        trajectory = integrate_rk4(self.field, REFERENCE_STATE, (0.0, 1.0), 0.5)
        with self.assertRaises(ValueError):
            TrajectoryService.write_stability_csv(trajectory, io.StringIO())

    def test_sample_geometry_at_the_recovered_state(self):
        sample = self.service.sample_geometry(RECOVERED_STATE)
        self.assertAlmostEqual(sample.energy, 0.01735, delta=1e-12)
