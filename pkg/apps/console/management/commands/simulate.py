import logging

from apps.console.base import ModelCommand
from apps.dynamics.services import TrajectoryService

logger = logging.getLogger(__name__)


class Command(ModelCommand):
    help = 'Integrate the COVID model and write the trajectory as CSV.'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        self.add_integration_arguments(parser)
        parser.add_argument('--geometry', action='store_true', help='Fill the EYM, max_re_P and jacobi_class columns')

    def run(self, **options):
        field = self.field(options)
        service = TrajectoryService(field)
        trajectory = self.integrate(field, options)
        if options['geometry']:
            trajectory = service.annotate(trajectory)
        with self.output(options) as stream:
            rows = service.write_csv(trajectory, stream)
        logger.info(
            'simulate: %d rows, conservation drift %.3g', rows, trajectory.max_conservation_drift()
        )
