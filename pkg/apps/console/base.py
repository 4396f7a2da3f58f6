import logging
from contextlib import contextmanager
from pathlib import Path

import numpy as np
from django.core.management.base import BaseCommand, CommandError

from apps.dynamics.integrators import integrate_adaptive, integrate_rk4, sample_times
from apps.dynamics.trajectory import Trajectory
from apps.epidemic.covid import COMPARTMENTS, InitialCondition, covid_field
from apps.epidemic.vector_field import VectorFieldSpec
from apps.numerics.exceptions import GeometryError

from .config import ConfigurationError, IntegratorSerializer, load_run_config, validate_section

logger = logging.getLogger(__name__)

EXIT_VALIDATION = 1
EXIT_USAGE = 2
EXIT_NUMERICAL = 3


def parse_vector(raw: str, label: str, size: int = len(COMPARTMENTS)) -> np.ndarray:
    try:
        values = np.array([float(part) for part in raw.split(',')])
    except ValueError as exc:
        raise ConfigurationError(f'{label}: expected {size} comma-separated numbers, got {raw!r}') from exc
    if values.size != size:
        raise ConfigurationError(f'{label}: expected {size} values, got {values.size}')
    if not np.all(np.isfinite(values)):
        raise ConfigurationError(f'{label}: values must be finite')
    return values


class ModelCommand(BaseCommand):
    """
    Shared plumbing for the model commands: config loading, CLI overrides and
    the exit-code contract (2 for usage or config errors, 3 for numerical
    failures).
    """

    requires_system_checks: list[str] = []

    def add_arguments(self, parser):
        parser.add_argument('--config', required=True, help='Run configuration JSON')
        parser.add_argument('--out', help='Output path; stdout when omitted')
        parser.add_argument('--strict', action='store_true', help='Reject negative compartments')

    def add_state_argument(self, parser):
        parser.add_argument('--state', help='Six comma-separated compartments S,E,Is,Ia,Ih,R')

    def add_integration_arguments(self, parser):
        self.add_state_argument(parser)
        parser.add_argument('--t0', type=float)
        parser.add_argument('--t1', type=float)
        parser.add_argument('--dt', type=float)
        parser.add_argument('--adaptive', action='store_true')
        parser.add_argument('--rtol', type=float)
        parser.add_argument('--atol', type=float)
        parser.add_argument('--max-step', type=float, help='Largest step the adaptive integrator may take')

    def handle(self, *args, **options):
        try:
            self.config = load_run_config(options['config'])
            self.run(**options)
        except ConfigurationError as exc:
            raise CommandError(str(exc), returncode=EXIT_USAGE) from exc
        except GeometryError as exc:
            logger.exception('%s failed', self.command_name())
            raise CommandError(str(exc), returncode=EXIT_NUMERICAL) from exc

    def run(self, **options):
        raise NotImplementedError

    def command_name(self) -> str:
        return self.__module__.rsplit('.', 1)[-1]

    def field(self, options) -> VectorFieldSpec:
        strict = options.get('strict') or self.config.geometry.get('strict', False)
        return covid_field(self.config.params, strict=strict)

    def initial_condition(self, options) -> InitialCondition:
        if options.get('state'):
            return InitialCondition(state=parse_vector(options['state'], '--state'))
        if self.config.initial is None:
            raise ConfigurationError('initial_state: required in the config or via --state')
        return self.config.initial

    def integrate(self, field: VectorFieldSpec, options) -> Trajectory:
        settings = dict(self.config.integrator)
        for key in ('t0', 't1', 'dt', 'rtol', 'atol'):
            if options.get(key) is not None:
                settings[key] = options[key]
        if options.get('adaptive'):
            settings['method'] = 'adaptive'
        settings = validate_section(IntegratorSerializer, settings, 'integrator')
        max_step = options.get('max_step')
        if max_step is not None and not max_step > 0:
            raise ConfigurationError(f'--max-step: must be positive, got {max_step}')
        initial = self.initial_condition(options)
        span = (settings['t0'], settings['t1'])
        if settings['method'] == 'adaptive':
            return integrate_adaptive(
                field,
                initial.state,
                span,
                rel_tol=settings['rtol'],
                abs_tol=settings['atol'],
                d0=initial.deceased,
                t_eval=sample_times(*span, settings['dt']),
                max_step=max_step,
            )
        return integrate_rk4(field, initial.state, span, settings['dt'], d0=initial.deceased)

    @contextmanager
    def output(self, options):
        if options.get('out'):
            path = Path(options['out'])
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, 'w', newline='') as stream:
                yield stream
        else:
            yield self.stdout
