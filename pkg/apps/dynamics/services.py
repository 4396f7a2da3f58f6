import csv
import logging
from typing import TextIO

from django.conf import settings

from apps.epidemic.covid import COMPARTMENTS
from apps.epidemic.vector_field import VectorFieldSpec
from apps.geometry.kcc import classify_deviation, deviation_curvature
from apps.geometry.lagrange import TangentPoint, connection_lagrange, energy_from_connection

from .trajectory import SampleGeometry, Trajectory

logger = logging.getLogger(__name__)

TRAJECTORY_HEADER = ('t', *COMPARTMENTS, 'D', 'Ntot', 'EYM', 'max_re_P', 'jacobi_class')
STABILITY_HEADER = ('t', 'max_re_P', 'class')


def format_number(value: float) -> str:
    digits = getattr(settings, 'OUTPUT_SIGNIFICANT_DIGITS', 17)
    return format(float(value), f'.{digits}g')


class TrajectoryService:
    """Adds per-sample geometry to a trajectory and writes trajectories as CSV."""

    def __init__(self, field: VectorFieldSpec) -> None:
        self.field = field
        self.relative_margin = getattr(settings, 'JACOBI_MARGIN', 1e-9)
        self.eigen_tolerance = getattr(settings, 'EIGEN_TOLERANCE', 1e-10)

    def sample_geometry(self, x) -> SampleGeometry:
        tp = TangentPoint.on_shell(self.field, x)
        verdict = classify_deviation(
            deviation_curvature(self.field, tp), relative_margin=self.relative_margin, tol=self.eigen_tolerance
        )
        return SampleGeometry(
            energy=energy_from_connection(connection_lagrange(self.field, tp.x)),
            max_real_part=verdict.max_real_part,
            classification=verdict.classification.value,
        )

    def annotate(self, trajectory: Trajectory) -> Trajectory:
        samples = [self.sample_geometry(x) for x in trajectory.states]
        unstable = sum(1 for sample in samples if sample.classification == 'unstable')
        logger.info('Annotated %d samples with geometry, %d Jacobi unstable', len(samples), unstable)
        return trajectory.with_geometry(samples)

    @staticmethod
    def write_csv(trajectory: Trajectory, stream: TextIO) -> int:
        """One row per sample; geometry columns stay empty when not computed."""
        writer = csv.writer(stream, lineterminator='\n')
        writer.writerow(TRAJECTORY_HEADER)
        totals = trajectory.total_population
        for m, t in enumerate(trajectory.times):
            row = [format_number(t), *map(format_number, trajectory.states[m])]
            row += [format_number(trajectory.deceased[m]), format_number(totals[m])]
            if trajectory.geometry is None:
                row += ['', '', '']
            else:
                sample = trajectory.geometry[m]
                row += [format_number(sample.energy), format_number(sample.max_real_part), sample.classification]
            writer.writerow(row)
        return len(trajectory)

    @staticmethod
    def write_stability_csv(trajectory: Trajectory, stream: TextIO) -> int:
        if trajectory.geometry is None:
            raise ValueError('trajectory carries no geometry samples')
        writer = csv.writer(stream, lineterminator='\n')
        writer.writerow(STABILITY_HEADER)
        for t, sample in zip(trajectory.times, trajectory.geometry):
            writer.writerow([format_number(t), format_number(sample.max_real_part), sample.classification])
        return len(trajectory)
