import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import numpy.typing as npt
from django.conf import settings

from apps.epidemic.vector_field import VectorFieldSpec

from .exporters import write_obj, write_points_csv, write_sidecar
from .grids import GridAxis, ProjectionSpec, ScalarGrid, band_point_cloud, enumerate_projections, sample_energy_grid
from .meshing import Mesh, extract_isosurface
from .serializers import SurfaceSidecarSerializer

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SurfaceResult:
    spec: ProjectionSpec
    grid: ScalarGrid
    mesh: Mesh | None = None
    points: np.ndarray | None = None
    output: str = ''


class SurfaceService:
    """Samples, meshes and exports energy surfaces for one field."""

    def __init__(self, field: VectorFieldSpec, *, workers: int | None = None) -> None:
        self.field = field
        self.workers = workers or getattr(settings, 'SURFACE_WORKERS', 4)

    def render(self, spec: ProjectionSpec, *, points: bool = False) -> SurfaceResult:
        grid = sample_energy_grid(self.field, spec)
        if points:
            return SurfaceResult(spec=spec, grid=grid, points=band_point_cloud(grid, spec.rho, spec.tol))
        return SurfaceResult(spec=spec, grid=grid, mesh=extract_isosurface(grid, spec.rho))

    def render_all(
        self,
        reference: npt.ArrayLike,
        *,
        grid: tuple[GridAxis, GridAxis, GridAxis] | None = None,
        rho: float = 0.0,
        tol: float = 0.0,
        count: int = 20,
        points: bool = False,
    ) -> list[SurfaceResult]:
        """Every three-axis slice through ``reference``, in lexicographic axis order."""
        specs = [
            ProjectionSpec.from_reference_state(axes, reference, grid, rho=rho, tol=tol, count=count)
            for axes in enumerate_projections(self.field.dimension)
        ]
        return self.render_many(specs, points=points)

    def render_many(self, specs: list[ProjectionSpec], *, points: bool = False) -> list[SurfaceResult]:
        with ThreadPoolExecutor(max_workers=self.workers) as executor:
            results = list(executor.map(lambda spec: self.render(spec, points=points), specs))
        logger.info('Rendered %d projections with %d workers', len(results), self.workers)
        return results

    def export(self, result: SurfaceResult, directory: Path, prefix: str = 'surface') -> SurfaceResult:
        directory.mkdir(parents=True, exist_ok=True)
        stem = directory / f'{prefix}_{result.spec.label()}'
        if result.points is not None:
            output = write_points_csv(result.points, stem.with_suffix('.csv'))
        else:
            output = write_obj(result.mesh, stem.with_suffix('.obj'))
        exported = SurfaceResult(spec=result.spec, grid=result.grid, mesh=result.mesh, points=result.points, output=output.name)
        write_sidecar(SurfaceSidecarSerializer(exported).data, stem.with_suffix('.json'))
        return exported
