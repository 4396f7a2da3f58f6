import json
import tempfile
from collections import Counter
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_allclose

from apps.epidemic.covid import covid_field
from apps.epidemic.testing import REFERENCE_STATE, reference_params
from apps.epidemic.vector_field import zero_field
from apps.numerics.exceptions import SurfaceSamplingError

from .grids import GridAxis, ProjectionSpec, ScalarGrid, band_point_cloud, default_axis, enumerate_projections, sample_energy_grid
from .meshing import extract_isosurface
from .services import SurfaceService


def _sphere_grid(count=40):
    axis = GridAxis(-2.0, 2.0, count)
    spec = ProjectionSpec(axes=(1, 2, 3), fixed_values=(), grid=(axis, axis, axis), rho=1.0)
    a, b, c = np.meshgrid(*spec.coordinates(), indexing='ij')
    return ScalarGrid(spec=spec, values=a**2 + b**2 + c**2)


class ProjectionTests(SimpleTestCase):
    def test_twenty_projections_in_lexicographic_order(self):
        projections = enumerate_projections()
        self.assertEqual(len(projections), 20)
        self.assertEqual(projections[0], (1, 2, 3))
        self.assertEqual(projections[-1], (4, 5, 6))

    def test_default_axis(self):
        self.assertEqual(default_axis(50.0), GridAxis(25.0, 75.0, 20))
        self.assertEqual(default_axis(0.0, 5), GridAxis(0.0, 1.0, 5))

    def test_reference_projection_holds_the_complement(self):
        spec = ProjectionSpec.from_reference_state((2, 3, 4), REFERENCE_STATE, count=5)
        self.assertEqual(spec.complement, (1, 5, 6))
        self.assertEqual(spec.fixed, {1: 900.0, 5: 5.0, 6: 5.0})
        self.assertEqual(spec.shape, (5, 5, 5))
        assert_allclose(spec.point((1.0, 2.0, 3.0)), [900.0, 1.0, 2.0, 3.0, 5.0, 5.0])
        self.assertEqual(spec.label(), '234')

    def test_invalid_projections(self):
        axis = GridAxis(0.0, 1.0, 3)
        bad = [
            dict(axes=(1, 1, 2), fixed_values=(0.0, 0.0, 0.0), grid=(axis,) * 3),
            dict(axes=(1, 2, 7), fixed_values=(0.0, 0.0, 0.0), grid=(axis,) * 3),
            dict(axes=(1, 2, 3), fixed_values=(0.0, 0.0, 0.0), grid=(GridAxis(1.0, 0.0, 3), axis, axis)),
            dict(axes=(1, 2, 3), fixed_values=(0.0, 0.0, 0.0), grid=(GridAxis(0.0, 1.0, 1), axis, axis)),
            dict(axes=(1, 2, 3), fixed_values=(0.0, 0.0, 0.0), grid=(axis,) * 3, rho=-1.0),
            dict(axes=(1, 2, 3), fixed_values=(0.0, 0.0, 0.0), grid=(axis,) * 3, tol=-0.1),
        ]
        for kwargs in bad:
            with self.assertRaises(ValueError):
                ProjectionSpec(**kwargs)


class EnergyGridTests(SimpleTestCase):
    def test_zero_field_has_zero_energy(self):
        spec = ProjectionSpec.from_reference_state((1, 2, 3), REFERENCE_STATE, count=4)
        grid = sample_energy_grid(zero_field(6), spec)
        assert_allclose(grid.values, 0.0, atol=0)
        self.assertTrue(extract_isosurface(grid, 0.0).is_empty)

    def test_slice_without_susceptibles(self):
        state = np.array([0.0, 50.0, 20.0, 20.0, 5.0, 5.0])
        spec = ProjectionSpec.from_reference_state((2, 3, 4), state, count=4)
        grid = sample_energy_grid(covid_field(reference_params()), spec)
        axes = spec.coordinates()
        for node in np.ndindex(*spec.shape):
            x = spec.point(tuple(axes[d][node[d]] for d in range(3)))
            lam = (0.4 * x[2] + 0.3 * x[3] + 0.1 * x[4]) / x.sum()
            self.assertAlmostEqual(grid.values[node], 0.01735 + 0.25 * lam**2, delta=1e-12)

        flat = sample_energy_grid(covid_field(reference_params(beta_s=0.0, beta_a=0.0, beta_h=0.0)), spec)
        assert_allclose(flat.values, 0.01735, atol=1e-12)

    def test_refined_grid_reproduces_shared_nodes(self):
        field = covid_field(reference_params())
        grid = (GridAxis(400.0, 1200.0, 3), GridAxis(0.0, 100.0, 3), GridAxis(10.0, 30.0, 3))
        coarse = ProjectionSpec(axes=(1, 2, 3), fixed_values=(20.0, 5.0, 5.0), grid=grid)
        fine = ProjectionSpec(
            axes=(1, 2, 3), fixed_values=(20.0, 5.0, 5.0), grid=tuple(GridAxis(g.lo, g.hi, 5) for g in grid)
        )
        coarse_values = sample_energy_grid(field, coarse).values
        fine_values = sample_energy_grid(field, fine).values
        np.testing.assert_array_equal(fine_values[::2, ::2, ::2], coarse_values)

    def test_sampling_error_names_the_node(self):
        axis = GridAxis(-2.0, -1.0, 2)
        spec = ProjectionSpec(axes=(1, 2, 3), fixed_values=(0.0, 0.0, 0.0), grid=(axis,) * 3)
        with self.assertRaises(SurfaceSamplingError) as ctx:
            sample_energy_grid(covid_field(reference_params()), spec)
        self.assertEqual(ctx.exception.node, (0, 0, 0))
        self.assertEqual(ctx.exception.coordinates, (-2.0, -2.0, -2.0))

    def test_dimension_mismatch(self):
        spec = ProjectionSpec.from_reference_state((1, 2, 3), np.ones(4), count=3)
        with self.assertRaises(ValueError):
            sample_energy_grid(covid_field(reference_params()), spec)


class IsosurfaceTests(SimpleTestCase):
    def setUp(self):
        self.grid = _sphere_grid()
        self.mesh = extract_isosurface(self.grid, 1.0)

    def test_sphere_vertices_lie_on_the_unit_sphere(self):
        h = 4.0 / 39.0
        self.assertFalse(self.mesh.is_empty)
        radii = np.linalg.norm(self.mesh.vertices, axis=1)
        self.assertLessEqual(np.max(np.abs(radii - 1.0)), 2.0 * h**2)

    def test_sphere_is_watertight(self):
        edges = Counter()
        for a, b, c in self.mesh.triangles:
            for u, v in ((a, b), (b, c), (c, a)):
                edges[(min(u, v), max(u, v))] += 1
        self.assertEqual(set(edges.values()), {2})

    def test_normals_point_toward_increasing_energy(self):
        outward = np.einsum('ij,ij->i', self.mesh.normals(), self.mesh.centroids()) > 0
        self.assertGreater(outward.mean(), 0.99)

    def test_level_outside_the_range_gives_an_empty_mesh(self):
        with self.assertLogs('apps.surfaces.meshing', level='WARNING'):
            mesh = extract_isosurface(self.grid, 100.0)
        self.assertTrue(mesh.is_empty)
        self.assertEqual(mesh.vertex_count, 0)

    def test_band_point_cloud_is_a_shell(self):
        points = band_point_cloud(self.grid, 1.0, 0.05)
        self.assertGreater(len(points), 0)
        self.assertEqual(len(points), int(np.sum(np.abs(self.grid.values - 1.0) <= 0.05)))
        assert_allclose(np.sum(points[:, :3] ** 2, axis=1), points[:, 3], rtol=1e-12)
        self.assertTrue(np.all((points[:, 3] >= 0.95) & (points[:, 3] <= 1.05)))


class SurfaceServiceTests(SimpleTestCase):
    def setUp(self):
        self.service = SurfaceService(covid_field(reference_params()), workers=2)

    def test_render_all_covers_every_projection(self):
        with self.assertLogs('apps.surfaces', level='INFO'):
            results = self.service.render_all(REFERENCE_STATE, count=3, rho=0.0)
        self.assertEqual([r.spec.axes for r in results], enumerate_projections())
        self.assertTrue(all(r.mesh is not None for r in results))

    def test_export_mesh_and_sidecar(self):
        spec = ProjectionSpec.from_reference_state((1, 2, 3), REFERENCE_STATE, count=6)
        grid = sample_energy_grid(self.service.field, spec)
        low, high = grid.value_range
        spec = ProjectionSpec.from_reference_state((1, 2, 3), REFERENCE_STATE, count=6, rho=0.5 * (low + high))
        result = self.service.render(spec)

        with tempfile.TemporaryDirectory() as tmp:
            exported = self.service.export(result, Path(tmp))
            obj = (Path(tmp) / 'surface_123.obj').read_text().splitlines()
            sidecar = json.loads((Path(tmp) / 'surface_123.json').read_text())

        self.assertEqual(exported.output, 'surface_123.obj')
        self.assertEqual(sum(line.startswith('v ') for line in obj), result.mesh.vertex_count)
        faces = [line.split()[1:] for line in obj if line.startswith('f ')]
        self.assertEqual(len(faces), result.mesh.triangle_count)
        self.assertGreaterEqual(min(int(i) for face in faces for i in face), 1)
        self.assertEqual(sidecar['mode'], 'slice')
        self.assertEqual(sidecar['axes'], [1, 2, 3])
        self.assertEqual(sidecar['fixed'], {'4': 20.0, '5': 5.0, '6': 5.0})
        self.assertEqual(sidecar['grid'][0], {'min': 450.0, 'max': 1350.0, 'count': 6})
        self.assertEqual(sidecar['energy_range'], [low, high])
        self.assertEqual(sidecar['output'], 'surface_123.obj')
        self.assertIsNone(sidecar['points'])

    def test_export_point_cloud(self):
        spec = ProjectionSpec.from_reference_state((4, 5, 6), REFERENCE_STATE, count=4, rho=0.0, tol=10.0)
        result = self.service.render(spec, points=True)

        with tempfile.TemporaryDirectory() as tmp:
            self.service.export(result, Path(tmp), prefix='band')
            rows = (Path(tmp) / 'band_456.csv').read_text().splitlines()
            sidecar = json.loads((Path(tmp) / 'band_456.json').read_text())

        self.assertEqual(rows[0], 'a1,a2,a3,EYM')
        self.assertEqual(len(rows), 65)
        self.assertEqual(sidecar['points'], 64)
        self.assertIsNone(sidecar['vertices'])
