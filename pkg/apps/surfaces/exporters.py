import csv
import json
from pathlib import Path

import mcubes
import numpy as np

from apps.dynamics.services import format_number

from .meshing import Mesh

POINT_HEADER = ('a1', 'a2', 'a3', 'EYM')


def write_obj(mesh: Mesh, path: Path) -> Path:
    """Wavefront OBJ with ``v x y z`` and 1-based ``f i j k`` lines."""
    mcubes.export_obj(mesh.vertices, mesh.triangles, str(path))
    return path


def write_points_csv(points: np.ndarray, path: Path) -> Path:
    with open(path, 'w', newline='') as stream:
        writer = csv.writer(stream, lineterminator='\n')
        writer.writerow(POINT_HEADER)
        for row in points:
            writer.writerow([format_number(v) for v in row])
    return path


def write_sidecar(metadata: dict, path: Path) -> Path:
    with open(path, 'w') as stream:
        json.dump(metadata, stream, indent=2)
        stream.write('\n')
    return path
