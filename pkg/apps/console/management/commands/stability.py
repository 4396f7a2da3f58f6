import logging
from collections import Counter

from apps.console.base import ModelCommand
from apps.dynamics.services import TrajectoryService

logger = logging.getLogger(__name__)


class Command(ModelCommand):
    help = 'Integrate the model and classify Jacobi stability at every sample (y = X(x)).'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        self.add_integration_arguments(parser)

    def run(self, **options):
        field = self.field(options)
        service = TrajectoryService(field)
        trajectory = service.annotate(self.integrate(field, options))
        with self.output(options) as stream:
            service.write_stability_csv(trajectory, stream)
        counts = Counter(sample.classification for sample in trajectory.geometry)
        logger.info('stability: %s', ', '.join(f'{label}={count}' for label, count in sorted(counts.items())))
