import logging
from dataclasses import dataclass

import mcubes
import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .grids import ScalarGrid

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Mesh:
    """Triangle mesh in physical coordinates; triangles index into vertices (0-based)."""

    vertices: np.ndarray
    triangles: np.ndarray
    level: float

    @classmethod
    def empty(cls, level: float) -> 'Mesh':
        return cls(vertices=np.zeros((0, 3)), triangles=np.zeros((0, 3), dtype=np.int64), level=level)

    @property
    def vertex_count(self) -> int:
        return int(self.vertices.shape[0])

    @property
    def triangle_count(self) -> int:
        return int(self.triangles.shape[0])

    @property
    def is_empty(self) -> bool:
        return self.triangle_count == 0

    def normals(self) -> np.ndarray:
        a, b, c = (self.vertices[self.triangles[:, k]] for k in range(3))
        return np.cross(b - a, c - a)

    def centroids(self) -> np.ndarray:
        return self.vertices[self.triangles].mean(axis=1)


def _orient_along_gradient(grid: ScalarGrid, mesh: Mesh) -> Mesh:
    """Flip every triangle when the normals point mostly against grad EYM."""
    coordinates = grid.spec.coordinates()
    gradient = np.stack(np.gradient(grid.values, *coordinates), axis=-1)
    interpolate = RegularGridInterpolator(coordinates, gradient, bounds_error=False, fill_value=None)
    alignment = float(np.einsum('ij,ij->', mesh.normals(), interpolate(mesh.centroids())))
    if alignment >= 0:
        return mesh
    return Mesh(vertices=mesh.vertices, triangles=mesh.triangles[:, ::-1].copy(), level=mesh.level)


def extract_isosurface(grid: ScalarGrid, rho: float) -> Mesh:
    """
    Marching-cubes triangulation of EYM = rho inside the grid box, with normals
    oriented toward increasing EYM. A level outside the sampled range yields an
    empty mesh.
    """
    low, high = grid.value_range
    if not low <= rho <= high:
        logger.warning(
            'projection %s: rho=%g lies outside the sampled range [%g, %g]; mesh is empty',
            grid.spec.axes, rho, low, high,
        )
        return Mesh.empty(rho)

    index_vertices, triangles = mcubes.marching_cubes(np.ascontiguousarray(grid.values), rho)
    if len(triangles) == 0:
        return Mesh.empty(rho)
    origin = np.array([g.lo for g in grid.spec.grid])
    spacing = np.array([g.spacing for g in grid.spec.grid])
    mesh = Mesh(
        vertices=origin + np.asarray(index_vertices, dtype=np.float64) * spacing,
        triangles=np.asarray(triangles, dtype=np.int64),
        level=rho,
    )
    mesh = _orient_along_gradient(grid, mesh)
    logger.debug('projection %s: %d vertices, %d triangles', grid.spec.axes, mesh.vertex_count, mesh.triangle_count)
    return mesh
