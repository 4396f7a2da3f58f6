import csv
import io
import json
import re
import tempfile
from pathlib import Path
from unittest import mock

import numpy as np
from django.core.management import call_command, get_commands
from django.core.management.base import CommandError
from django.test import SimpleTestCase, override_settings
from numpy.testing import assert_allclose

from apps.epidemic.covid import covid_field, state_as_mapping
from apps.epidemic.testing import REFERENCE_RATES, REFERENCE_STATE, reference_params
from apps.surfaces.grids import ProjectionSpec, sample_energy_grid

from .base import EXIT_NUMERICAL, EXIT_USAGE, ModelCommand, parse_vector
from .config import ConfigurationError, flatten_errors, parse_run_config
from .validation import ValidationService


GOLDEN = Path(__file__).resolve().parent / 'golden'


def read_csv(text: str) -> list[list[str]]:
    return list(csv.reader(io.StringIO(text)))


def numeric_columns(rows: list[list[str]]) -> np.ndarray:
    return np.array([[float(value) if value else np.nan for value in row] for row in rows])


class CommandTestCase(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.directory = Path(self.tmp.name)
        self.config = self.write_config({'params': REFERENCE_RATES, 'initial_state': state_as_mapping(REFERENCE_STATE)})

    def write_config(self, data, name='run.json'):
        path = self.directory / name
        path.write_text(data if isinstance(data, str) else json.dumps(data))
        return str(path)

    def call(self, command, *args, config=None):
        stdout = io.StringIO()
        call_command(command, '--config', config or self.config, *args, stdout=stdout, stderr=io.StringIO())
        return stdout.getvalue()


class RunConfigTests(SimpleTestCase):
    def test_defaults_fill_missing_sections(self):
        config = parse_run_config({'params': REFERENCE_RATES})
        self.assertEqual(config.params, reference_params())
        self.assertIsNone(config.initial)
        self.assertEqual(config.integrator, {'method': 'rk4', 't0': 0.0, 't1': 100.0, 'dt': 0.05, 'rtol': 1e-6, 'atol': 1e-9})
        self.assertEqual(config.geometry, {'tangent': 'field', 'check': False, 'strict': False})
        self.assertEqual(config.surface['count'], 20)

    def test_errors_use_dotted_paths(self):
        with self.assertRaises(ConfigurationError) as ctx:
            parse_run_config({'params': {**REFERENCE_RATES, 'r': 1.5}, 'integrator': {'dt': -1.0}})
        message = str(ctx.exception)
        self.assertIn('params.r:', message)
        self.assertIn('integrator.dt:', message)

    def test_unknown_section_is_rejected(self):
        with self.assertRaises(ConfigurationError):
            parse_run_config({'params': REFERENCE_RATES, 'plots': {}})

    def test_surface_axes_must_be_distinct(self):
        with self.assertRaises(ConfigurationError):
            parse_run_config({'params': REFERENCE_RATES, 'surface': {'axes': [1, 1, 2]}})

    def test_flatten_errors(self):
        detail = {'params': {'r': ['Out of range.']}, 'non_field_errors': ['Broken.'], 'surface': {'grid': [{}, {'max': ['Bad.']}]}}
        self.assertEqual(
            flatten_errors(detail),
            ['params.r: Out of range.', 'config: Broken.', 'surface.grid[1].max: Bad.'],
        )

    def test_parse_vector(self):
        assert_allclose(parse_vector('1,2,3,4,5,6', '--state'), [1, 2, 3, 4, 5, 6])
        for raw in ('1,2,3', '1,2,3,4,5,x', '1,2,3,4,5,nan'):
            with self.assertRaises(ConfigurationError):
                parse_vector(raw, '--state')


class SimulateCommandTests(CommandTestCase):
    def test_default_run_has_one_row_per_sample(self):
        rows = list(csv.reader(io.StringIO(self.call('simulate', '--t1', '100', '--dt', '0.05'))))
        self.assertEqual(rows[0], ['t', 'S', 'E', 'Is', 'Ia', 'Ih', 'R', 'D', 'Ntot', 'EYM', 'max_re_P', 'jacobi_class'])
        self.assertEqual(len(rows), 2002)
        self.assertEqual(rows[-1][0], '100')
        totals = np.array([float(row[8]) + float(row[7]) for row in rows[1:]])
        self.assertLessEqual(np.max(np.abs(totals - 1000.0)), 1e-5)

    def test_output_is_deterministic(self):
        first = self.call('simulate', '--t1', '5', '--geometry')
        second = self.call('simulate', '--t1', '5', '--geometry')
        self.assertEqual(first, second)

    def test_writes_to_a_file(self):
        out = self.directory / 'runs' / 'trajectory.csv'
        self.assertEqual(self.call('simulate', '--t1', '1', '--out', str(out)), '')
        self.assertEqual(len(out.read_text().splitlines()), 22)

    def test_disease_free_state_is_constant(self):
        rows = list(csv.reader(io.StringIO(self.call('simulate', '--t1', '10', '--state', '990,0,0,0,0,10'))))
        self.assertEqual({row[1] for row in rows[1:]}, {'990'})

    def test_adaptive_run_uses_the_same_grid(self):
        rows = list(csv.reader(io.StringIO(self.call('simulate', '--t1', '10', '--dt', '0.5', '--adaptive'))))
        self.assertEqual(len(rows), 22)
        self.assertEqual(rows[-1][0], '10')

    def test_missing_parameter_is_a_usage_error(self):
        params = dict(REFERENCE_RATES)
        del params['gamma_h']
        config = self.write_config({'params': params, 'initial_state': state_as_mapping(REFERENCE_STATE)}, 'bad.json')
        with self.assertRaises(CommandError) as ctx:
            self.call('simulate', config=config)
        self.assertEqual(ctx.exception.returncode, EXIT_USAGE)
        self.assertIn('params.gamma_h', str(ctx.exception))

    def test_out_of_range_fraction_is_a_usage_error(self):
        config = self.write_config({'params': {**REFERENCE_RATES, 'r': 1.5}}, 'bad.json')
        with self.assertRaises(CommandError) as ctx:
            self.call('simulate', '--state', '900,50,20,20,5,5', config=config)
        self.assertEqual(ctx.exception.returncode, EXIT_USAGE)

    def test_malformed_json_reports_the_position(self):
        config = self.write_config('{"params": ', 'broken.json')
        with self.assertRaises(CommandError) as ctx:
            self.call('simulate', config=config)
        self.assertEqual(ctx.exception.returncode, EXIT_USAGE)
        self.assertIn('line 1, column', str(ctx.exception))

    def test_adaptive_step_cap(self):
        capped = read_csv(self.call('simulate', '--t1', '2', '--dt', '0.5', '--adaptive', '--max-step', '0.1'))
        free = read_csv(self.call('simulate', '--t1', '2', '--dt', '0.5', '--adaptive'))
        self.assertEqual(len(capped), 6)
        self.assertEqual(capped[-1][0], '2')
        assert_allclose(numeric_columns([capped[-1][:9]]), numeric_columns([free[-1][:9]]), rtol=1e-5)
        with self.assertRaises(CommandError) as ctx:
            self.call('simulate', '--adaptive', '--max-step', '0')
        self.assertEqual(ctx.exception.returncode, EXIT_USAGE)

    def test_inverted_span_on_the_command_line_is_a_usage_error(self):
        with self.assertRaises(CommandError) as ctx:
            self.call('simulate', '--t0', '5', '--t1', '1')
        self.assertEqual(ctx.exception.returncode, EXIT_USAGE)
        self.assertIn('integrator.t1', str(ctx.exception))

    def test_internal_value_errors_are_not_usage_errors(self):
        with mock.patch.object(ModelCommand, 'integrate', side_effect=ValueError('need at least 3 samples')):
            with self.assertRaises(ValueError):
                self.call('simulate')

    def test_missing_initial_state(self):
        config = self.write_config({'params': REFERENCE_RATES}, 'bare.json')
        with self.assertRaises(CommandError) as ctx:
            self.call('simulate', config=config)
        self.assertEqual(ctx.exception.returncode, EXIT_USAGE)


class GeometryCommandTests(CommandTestCase):
    def test_report_tensors(self):
        data = json.loads(self.call('geometry'))
        n = np.array(data['N'])
        n_h = np.array(data['N_H'])
        assert_allclose(n, -n.T, atol=0)
        assert_allclose(n_h, n_h.T, atol=0)
        self.assertEqual(data['L'], 0.0)
        self.assertEqual(data['checks'], [])

    def test_zero_tangent(self):
        data = json.loads(self.call('geometry', '--y', 'zero'))
        self.assertAlmostEqual(data['L'], 218.295, places=10)

    def test_explicit_vectors_and_checks(self):
        data = json.loads(self.call('geometry', '--y', '1,1,1,1,1,1', '--p', '0,0,0,0,0,0', '--check'))
        assert_allclose(data['y'], np.ones(6))
        self.assertEqual(data['H'], 0.0)
        self.assertTrue(data['checks'])
        self.assertTrue(all(check['passed'] for check in data['checks']))

    def test_bad_tangent_is_a_usage_error(self):
        with self.assertRaises(CommandError) as ctx:
            self.call('geometry', '--y', 'sideways')
        self.assertEqual(ctx.exception.returncode, EXIT_USAGE)

    def test_empty_population_is_a_numerical_failure(self):
        with self.assertLogs('apps.console.base', level='ERROR'):
            with self.assertRaises(CommandError) as ctx:
                self.call('geometry', '--state', '0,0,0,0,0,0')
        self.assertEqual(ctx.exception.returncode, EXIT_NUMERICAL)


class StabilityCommandTests(CommandTestCase):
    def test_stability_csv(self):
        output = self.call('stability', '--t1', '2', '--dt', '0.5')
        rows = list(csv.reader(io.StringIO(output)))
        self.assertEqual(rows[0], ['t', 'max_re_P', 'class'])
        self.assertEqual(len(rows), 6)
        self.assertTrue(all(row[2] in {'stable', 'unstable', 'marginal'} for row in rows[1:]))
        self.assertEqual(output, self.call('stability', '--t1', '2', '--dt', '0.5'))

    def test_halving_dt_keeps_the_verdicts(self):
        coarse = read_csv(self.call('stability', '--t1', '4', '--dt', '0.5'))[1:]
        fine = {row[0]: row for row in read_csv(self.call('stability', '--t1', '4', '--dt', '0.25'))[1:]}
        self.assertEqual(len(coarse), 9)
        for t, value, label in coarse:
            other = fine[t]
            self.assertAlmostEqual(float(value), float(other[1]), delta=1e-3)
            if abs(float(value)) > 1e-6:
                self.assertEqual(label, other[2], t)


class EnergySurfaceCommandTests(CommandTestCase):
    def test_all_projections_as_point_clouds(self):
        out = self.directory / 'surfaces'
        output = self.call('energy_surface', '--all', '--points', '--tol', '10', '--count', '3', '--out', str(out))
        self.assertEqual(len(output.splitlines()), 20)
        self.assertEqual(len(list(out.glob('surface_*.csv'))), 20)
        self.assertEqual(len(list(out.glob('surface_*.json'))), 20)
        sidecar = json.loads((out / 'surface_456.json').read_text())
        self.assertEqual(sidecar['axes'], [4, 5, 6])
        self.assertEqual(sidecar['points'], 27)

    def test_single_projection_mesh(self):
        spec = ProjectionSpec.from_reference_state((3, 4, 5), REFERENCE_STATE, count=6)
        low, high = sample_energy_grid(covid_field(reference_params()), spec).value_range
        out = self.directory / 'mesh'
        self.call('energy_surface', '--axes', '3,4,5', '--count', '6', '--rho', repr(0.5 * (low + high)), '--out', str(out))
        obj = (out / 'surface_345.obj').read_text()
        self.assertIn('\nf ', obj)
        sidecar = json.loads((out / 'surface_345.json').read_text())
        self.assertGreater(sidecar['triangles'], 0)

    def test_explicit_grid(self):
        out = self.directory / 'grid'
        self.call('energy_surface', '--axes', '1,2,3', '--grid', '0:1000:3', '--points', '--tol', '10', '--out', str(out))
        sidecar = json.loads((out / 'surface_123.json').read_text())
        self.assertEqual(sidecar['grid'], [{'min': 0.0, 'max': 1000.0, 'count': 3}] * 3)

    def test_negative_level_is_a_usage_error(self):
        with self.assertRaises(CommandError) as ctx:
            self.call('energy_surface', '--axes', '1,2,3', '--rho', '-1', '--out', str(self.directory / 'x'))
        self.assertEqual(ctx.exception.returncode, EXIT_USAGE)

    def test_registered_under_its_module_name(self):
        commands = get_commands()
        self.assertEqual(commands['energy_surface'], 'apps.console')
        self.assertNotIn('energy-surface', commands)

    def test_workers_must_be_positive(self):
        with self.assertRaises(CommandError) as ctx:
            self.call('energy_surface', '--all', '--workers', '0', '--out', str(self.directory / 'x'))
        self.assertEqual(ctx.exception.returncode, EXIT_USAGE)

    def test_axes_are_required_without_all(self):
        with self.assertRaises(CommandError) as ctx:
            self.call('energy_surface', '--out', str(self.directory / 'x'))
        self.assertEqual(ctx.exception.returncode, EXIT_USAGE)


@override_settings(VALIDATION_SAMPLES=5)
class ValidateCommandTests(CommandTestCase):
    def test_reference_parameters_pass(self):
        output = self.call('validate')
        self.assertNotIn('FAIL', output)
        self.assertTrue(output.splitlines()[0].startswith('check'))

    def test_all_zero_rates_pass(self):
        rates = {name: 0.0 for name in REFERENCE_RATES}
        rates['r'] = 0.5
        config = self.write_config({'params': rates}, 'zero.json')
        self.assertNotIn('FAIL', self.call('validate', config=config))

    def test_large_populations_pass(self):
        for factor in (100.0, 1000.0):
            state = factor * REFERENCE_STATE
            self.assertEqual(ValidationService.population_scale(state), factor)
            report = ValidationService(reference_params(), state).run()
            self.assertTrue(report.passed, report.as_table())

    def test_service_report(self):
        report = ValidationService(reference_params(), REFERENCE_STATE).run()
        self.assertTrue(report.passed)
        self.assertIsNone(report.worst_offender())
        self.assertTrue(all(check.samples > 0 for check in report.checks))


class GoldenOutputTests(CommandTestCase):
    def golden(self, name: str) -> str:
        return (GOLDEN / name).read_text()

    def test_simulate_matches_the_reference_run(self):
        expected = read_csv(self.golden('simulate_reference.csv'))
        rows = read_csv(self.call('simulate', '--t1', '1', '--dt', '0.25'))
        self.assertEqual(rows[0], expected[0])
        self.assertEqual(rows[1], expected[1])
        self.assertEqual(len(rows), len(expected))
        self.assertEqual([row[9:] for row in rows[1:]], [['', '', '']] * (len(rows) - 1))
        assert_allclose(
            numeric_columns([row[:9] for row in rows[1:]]),
            numeric_columns([row[:9] for row in expected[1:]]),
            rtol=1e-12,
        )

    def test_geometry_matches_the_reference_report(self):
        expected = json.loads(self.golden('geometry_zero_tangent.json'))
        data = json.loads(self.call('geometry', '--y', 'zero'))
        for key, value in expected.items():
            assert_allclose(data[key], value, rtol=1e-12, atol=1e-15, err_msg=key)

    def test_stability_matches_the_recovered_state_spectrum(self):
        expected = read_csv(self.golden('stability_recovered.csv'))
        rows = read_csv(self.call('stability', '--state', '0,0,0,0,0,100', '--t1', '1', '--dt', '0.5'))
        self.assertEqual(rows[0], expected[0])
        self.assertEqual([row[2] for row in rows[1:]], [row[2] for row in expected[1:]])
        assert_allclose(
            numeric_columns([row[:2] for row in rows[1:]]),
            numeric_columns([row[:2] for row in expected[1:]]),
            rtol=1e-12,
        )

    def test_energy_surface_matches_the_reference_slice(self):
        out = self.directory / 'slice'
        self.call('energy_surface', '--axes', '1,2,3', '--grid', '0:1000:2', '--points', '--tol', '1', '--out', str(out))
        expected_rows = read_csv(self.golden('energy_surface_123.csv'))
        rows = read_csv((out / 'surface_123.csv').read_text())
        self.assertEqual(rows[0], expected_rows[0])
        assert_allclose(numeric_columns(rows[1:]), numeric_columns(expected_rows[1:]), rtol=1e-12)

        expected = json.loads(self.golden('energy_surface_123.json'))
        sidecar = json.loads((out / 'surface_123.json').read_text())
        self.assertEqual(sorted(sidecar), sorted(expected))
        assert_allclose(sidecar.pop('energy_range'), expected.pop('energy_range'), rtol=1e-12)
        self.assertEqual(sidecar, expected)

    @override_settings(VALIDATION_SAMPLES=5)
    def test_validate_lists_every_check(self):
        expected = json.loads(self.golden('validate_rows.json'))
        lines = self.call('validate').splitlines()
        self.assertEqual(re.split(r'\s{2,}', lines[0].strip()), ['check', 'worst', 'tolerance', 'result'])
        rows = [re.split(r'\s{2,}', line.strip()) for line in lines[1:]]
        self.assertEqual([row[0] for row in rows], [name for name, _, _ in expected])
        self.assertEqual([row[3] for row in rows], [result for _, _, result in expected])
        for row, (name, tolerance, _) in zip(rows, expected):
            if tolerance is not None:
                self.assertEqual(float(row[2]), tolerance, name)
