"""
Three-axis slices of the Yang-Mills energy scalar field.

A projection varies three coordinates over a box and holds the other ones at
fixed values, normally taken from a reference state. Axes are 1-based.
"""
import itertools
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import numpy.typing as npt

from apps.epidemic.vector_field import VectorFieldSpec
from apps.geometry.lagrange import connection_lagrange, energy_from_connection
from apps.numerics.exceptions import GeometryError, SurfaceSamplingError


class GridAxis(NamedTuple):
    lo: float
    hi: float
    count: int

    def coordinates(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.count)

    @property
    def spacing(self) -> float:
        return (self.hi - self.lo) / (self.count - 1)


def default_axis(value: float, count: int = 20) -> GridAxis:
    """[value/2, 3 value/2] around a reference coordinate, [0, 1] when it is zero."""
    if value > 0:
        return GridAxis(0.5 * value, 1.5 * value, count)
    return GridAxis(0.0, 1.0, count)


def enumerate_projections(dimension: int = 6) -> list[tuple[int, int, int]]:
    return list(itertools.combinations(range(1, dimension + 1), 3))


@dataclass(frozen=True)
class ProjectionSpec:
    axes: tuple[int, int, int]
    fixed_values: tuple[float, ...]
    grid: tuple[GridAxis, GridAxis, GridAxis]
    rho: float = 0.0
    tol: float = 0.0

    def __post_init__(self) -> None:
        axes = tuple(int(a) for a in self.axes)
        grid = tuple(GridAxis(float(g[0]), float(g[1]), int(g[2])) for g in self.grid)
        fixed = tuple(float(v) for v in self.fixed_values)
        object.__setattr__(self, 'axes', axes)
        object.__setattr__(self, 'grid', grid)
        object.__setattr__(self, 'fixed_values', fixed)

        if len(axes) != 3 or len(set(axes)) != 3:
            raise ValueError(f'a projection needs three distinct axes, got {axes}')
        if any(a < 1 or a > self.dimension for a in axes):
            raise ValueError(f'axes must lie in 1..{self.dimension}, got {axes}')
        if len(grid) != 3:
            raise ValueError(f'expected one grid range per axis, got {len(grid)}')
        for axis, (lo, hi, count) in zip(axes, grid):
            if count < 2:
                raise ValueError(f'axis {axis}: grid count must be at least 2, got {count}')
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise ValueError(f'axis {axis}: grid range must satisfy min < max, got ({lo}, {hi})')
        if not all(math.isfinite(v) for v in fixed):
            raise ValueError('fixed values must be finite')
        if not (math.isfinite(self.rho) and self.rho >= 0):
            raise ValueError(f'rho must be a finite value >= 0, got {self.rho}')
        if not (math.isfinite(self.tol) and self.tol >= 0):
            raise ValueError(f'tol must be a finite value >= 0, got {self.tol}')

    @classmethod
    def from_reference_state(
        cls,
        axes: tuple[int, int, int],
        state: npt.ArrayLike,
        grid: tuple[GridAxis, GridAxis, GridAxis] | None = None,
        *,
        rho: float = 0.0,
        tol: float = 0.0,
        count: int = 20,
    ) -> 'ProjectionSpec':
        reference = np.asarray(state, dtype=np.float64)
        chosen = set(axes)
        fixed = tuple(float(reference[a - 1]) for a in range(1, reference.size + 1) if a not in chosen)
        if grid is None:
            grid = tuple(default_axis(float(reference[a - 1]), count) for a in axes)
        return cls(axes=axes, fixed_values=fixed, grid=grid, rho=rho, tol=tol)

    @property
    def dimension(self) -> int:
        return 3 + len(self.fixed_values)

    @property
    def complement(self) -> tuple[int, ...]:
        return tuple(a for a in range(1, self.dimension + 1) if a not in self.axes)

    @property
    def fixed(self) -> dict[int, float]:
        return dict(zip(self.complement, self.fixed_values))

    @property
    def shape(self) -> tuple[int, int, int]:
        return tuple(g.count for g in self.grid)

    def coordinates(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return tuple(g.coordinates() for g in self.grid)

    def point(self, values: tuple[float, float, float]) -> np.ndarray:
        """Full-dimensional point with the three varying coordinates set."""
        point = np.empty(self.dimension)
        for axis, value in self.fixed.items():
            point[axis - 1] = value
        for axis, value in zip(self.axes, values):
            point[axis - 1] = value
        return point

    def label(self) -> str:
        return ''.join(str(a) for a in self.axes)


@dataclass(frozen=True)
class ScalarGrid:
    spec: ProjectionSpec
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64)
        if values.shape != self.spec.shape:
            raise ValueError(f'grid values have shape {values.shape}, expected {self.spec.shape}')
        if not np.all(np.isfinite(values)):
            raise ValueError('grid values must be finite')
        values.setflags(write=False)
        object.__setattr__(self, 'values', values)

    @property
    def value_range(self) -> tuple[float, float]:
        return float(self.values.min()), float(self.values.max())


def energy_at(field: VectorFieldSpec, x: npt.ArrayLike) -> float:
    return energy_from_connection(connection_lagrange(field, x))


def sample_energy_grid(field: VectorFieldSpec, spec: ProjectionSpec) -> ScalarGrid:
    if spec.dimension != field.dimension:
        raise ValueError(f'projection is {spec.dimension}-dimensional, field is {field.dimension}-dimensional')
    axes = spec.coordinates()
    values = np.empty(spec.shape)
    for node in itertools.product(*(range(n) for n in spec.shape)):
        coords = tuple(float(axes[d][node[d]]) for d in range(3))
        try:
            values[node] = energy_at(field, spec.point(coords))
        except GeometryError as exc:
            raise SurfaceSamplingError(
                f'projection {spec.axes}: node {node} at {coords}: {exc}', node=node, coordinates=coords
            ) from exc
    return ScalarGrid(spec=spec, values=values)


def band_point_cloud(grid: ScalarGrid, rho: float, tol: float) -> np.ndarray:
    """Rows (a1, a2, a3, EYM) for every node with |EYM - rho| <= tol, in C order."""
    if tol < 0:
        raise ValueError(f'tol must be >= 0, got {tol}')
    mesh = np.meshgrid(*grid.spec.coordinates(), indexing='ij')
    mask = np.abs(grid.values - rho) <= tol
    return np.column_stack([mesh[0][mask], mesh[1][mask], mesh[2][mask], grid.values[mask]])
