import json
import logging

from apps.console.base import ModelCommand, parse_vector
from apps.console.config import ConfigurationError
from apps.geometry.serializers import GeometryReportSerializer
from apps.geometry.services import GeometryReportService

logger = logging.getLogger(__name__)


class Command(ModelCommand):
    help = 'Evaluate every Lagrange, KCC and Hamilton tensor at one state and print them as JSON.'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        self.add_state_argument(parser)
        parser.add_argument('--y', help="Tangent vector: 'field' (y = X(x)), 'zero', or six comma-separated numbers")
        parser.add_argument('--p', help='Covector, six comma-separated numbers; default p = 2 (y - X(x))')
        parser.add_argument('--check', action='store_true', help='Run the finite-difference oracles at this point')

    def tangent(self, options, x):
        choice = options.get('y') or self.config.geometry.get('tangent', 'field')
        if choice == 'field':
            return None
        if choice == 'zero':
            return [0.0] * len(x)
        try:
            return parse_vector(choice, '--y')
        except ConfigurationError as exc:
            raise ConfigurationError(f"{exc} (or 'field' / 'zero')") from exc

    def run(self, **options):
        x = self.initial_condition(options).state
        y = self.tangent(options, x)
        p = parse_vector(options['p'], '--p') if options.get('p') else None
        check = options['check'] or self.config.geometry.get('check', False)

        report = GeometryReportService(self.field(options)).build(x, y, p, check=check)
        data = GeometryReportSerializer(report).data
        with self.output(options) as stream:
            stream.write(json.dumps(data, indent=2) + '\n')
        logger.info('geometry: EYM=%r, class %s', report.lagrange.energy, report.verdict.classification.value)
