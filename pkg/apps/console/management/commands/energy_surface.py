import logging
from pathlib import Path

from apps.console.base import ModelCommand
from apps.console.config import ConfigurationError
from apps.surfaces.grids import GridAxis, ProjectionSpec, enumerate_projections
from apps.surfaces.services import SurfaceService

logger = logging.getLogger(__name__)


def parse_axes(raw: str) -> tuple[int, int, int]:
    try:
        axes = tuple(int(part) for part in raw.split(','))
    except ValueError as exc:
        raise ConfigurationError(f'--axes: expected three comma-separated integers, got {raw!r}') from exc
    if len(axes) != 3:
        raise ConfigurationError(f'--axes: expected three axes, got {len(axes)}')
    return axes


def parse_grid(raw: str) -> tuple[GridAxis, ...]:
    """'lo:hi:count' for every axis, or three of them separated by commas."""
    ranges = []
    for part in raw.split(','):
        pieces = part.split(':')
        if len(pieces) != 3:
            raise ConfigurationError(f'--grid: expected lo:hi:count, got {part!r}')
        try:
            ranges.append(GridAxis(float(pieces[0]), float(pieces[1]), int(pieces[2])))
        except ValueError as exc:
            raise ConfigurationError(f'--grid: cannot parse {part!r}') from exc
    if len(ranges) == 1:
        return (ranges[0],) * 3
    if len(ranges) != 3:
        raise ConfigurationError(f'--grid: expected one or three ranges, got {len(ranges)}')
    return tuple(ranges)


class Command(ModelCommand):
    help = 'Sample the Yang-Mills energy on three-axis slices and export level surfaces (OBJ) or band points (CSV).'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        self.add_state_argument(parser)
        parser.add_argument('--axes', help='Three distinct 1-based axes, e.g. 3,4,5')
        parser.add_argument('--all', action='store_true', help='Export all 20 three-axis slices')
        parser.add_argument('--grid', help='lo:hi:count, once for every axis or three times comma-separated')
        parser.add_argument('--count', type=int, help='Nodes per axis for the default ranges')
        parser.add_argument('--rho', type=float, help='Level value, rho >= 0')
        parser.add_argument('--tol', type=float, help='Band half-width for --points')
        parser.add_argument('--points', action='store_true', help='Write the band point cloud instead of a mesh')
        parser.add_argument('--workers', type=int, help='Concurrent slices for --all')

    def surface_options(self, options) -> dict:
        section = dict(self.config.surface)
        resolved = {
            'rho': options['rho'] if options.get('rho') is not None else section.get('rho', 0.0),
            'tol': options['tol'] if options.get('tol') is not None else section.get('tol', 0.0),
            'count': options['count'] if options.get('count') is not None else section.get('count', 20),
            'points': options['points'] or section.get('points', False),
        }
        if options.get('grid'):
            resolved['grid'] = parse_grid(options['grid'])
        elif section.get('grid'):
            ranges = tuple(GridAxis(g['min'], g['max'], g['count']) for g in section['grid'])
            resolved['grid'] = ranges * 3 if len(ranges) == 1 else ranges
        else:
            resolved['grid'] = None
        if options.get('axes'):
            resolved['axes'] = parse_axes(options['axes'])
        else:
            resolved['axes'] = tuple(section['axes']) if section.get('axes') else None
        return resolved

    def projection(self, axes, reference, surface) -> ProjectionSpec:
        try:
            return ProjectionSpec.from_reference_state(
                axes, reference, surface['grid'], rho=surface['rho'], tol=surface['tol'], count=surface['count']
            )
        except ValueError as exc:
            raise ConfigurationError(f'surface: {exc}') from exc

    def run(self, **options):
        reference = self.initial_condition(options).state
        surface = self.surface_options(options)
        if options.get('workers') is not None and options['workers'] < 1:
            raise ConfigurationError(f"--workers: must be at least 1, got {options['workers']}")
        service = SurfaceService(self.field(options), workers=options.get('workers'))
        directory = Path(options.get('out') or 'surfaces')

        if options['all']:
            axes = enumerate_projections(reference.size)
        elif surface['axes'] is not None:
            axes = [surface['axes']]
        else:
            raise ConfigurationError('give --axes (or surface.axes in the config) or --all')
        specs = [self.projection(choice, reference, surface) for choice in axes]
        results = service.render_many(specs, points=surface['points'])

        for result in results:
            exported = service.export(result, directory)
            size = f'{exported.points.shape[0]} points' if exported.points is not None else (
                f'{exported.mesh.vertex_count} vertices, {exported.mesh.triangle_count} triangles'
            )
            self.stdout.write(f'{directory / exported.output}: axes {exported.spec.axes}, {size}')
        logger.info('energy_surface: %d outputs in %s', len(results), directory)
