"""
Triangle meshes and their conversion to model clouds.

Meshes are loaded with trimesh as plain (vertices, faces) arrays; no
processing or vertex merging is applied. Surfaces are sampled uniformly
by area, reduced with farthest-point subsampling and moved into the
canonical model frame (min z = 0, xy-centroid at the origin).
"""

from pathlib import Path
from typing import List, Tuple, Union
import logging

import numpy as np
import trimesh

from augmap.cloud.core import GroundedTransform, PointCloud, apply_transform
from augmap.utils.errors import CloudFormatError, DegenerateGeometryError, EmptyCloudError
from augmap.utils.validation import validate_positive

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
MESH_SUFFIXES = (".obj", ".ply")


# =============================================================================
# Reading
# =============================================================================

def read_mesh(path: PathLike) -> Tuple[np.ndarray, np.ndarray]:
    """
    Read a triangle mesh from an OBJ or PLY file.

    Polygons with more than three vertices are triangulated by the loader.
    Multi-object files are concatenated into a single mesh.

    Parameters
    ----------
    path : str or Path
        ``.obj`` or ``.ply`` file.

    Returns
    -------
    vertices : ndarray
        float64, shape (V, 3).
    faces : ndarray
        int64 vertex indices, shape (F, 3).

    Raises
    ------
    OSError
        If the file does not exist.
    CloudFormatError
        On malformed content, unknown suffix, a mesh without faces, or
        face indices out of range.
    """
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix not in MESH_SUFFIXES:
        raise CloudFormatError(f"unsupported mesh format '{suffix}'", path)
    if not path.is_file():
        raise OSError(f"Cannot read {path}: no such file")

    try:
        mesh = trimesh.load(str(path), file_type=suffix[1:], force="mesh", process=False)
    except Exception as exc:
        raise CloudFormatError(f"cannot load mesh: {exc}", path) from exc
    if isinstance(mesh, trimesh.Scene):
        parts = [g for g in mesh.geometry.values() if isinstance(g, trimesh.Trimesh)]
        mesh = trimesh.util.concatenate(parts) if parts else None
    if not isinstance(mesh, trimesh.Trimesh):
        raise CloudFormatError("file holds no triangle mesh", path)

    vertices = np.asarray(mesh.vertices, dtype=np.float64).reshape(-1, 3)
    faces = np.asarray(mesh.faces, dtype=np.int64).reshape(-1, 3)
    if len(faces) == 0:
        raise CloudFormatError("mesh has no faces", path)
    if faces.min() < 0 or faces.max() >= len(vertices):
        raise CloudFormatError("face index out of range", path)
    if not np.all(np.isfinite(vertices)):
        raise CloudFormatError("non-finite vertex coordinate", path)
    logger.debug("read %s: %d vertices, %d faces", path.name, len(vertices), len(faces))
    return vertices, faces


def triangle_areas(vertices: np.ndarray, faces: np.ndarray) -> np.ndarray:
    """Area of every triangle, shape (F,)."""
    vertices = np.asarray(vertices, dtype=np.float64)
    faces = np.asarray(faces, dtype=np.int64).reshape(-1, 3)
    return trimesh.triangles.area(vertices[faces])


# =============================================================================
# Sampling
# =============================================================================

def sample_mesh_surface(
    vertices: np.ndarray,
    faces: np.ndarray,
    count: int,
    seed: int = 0,
) -> np.ndarray:
    """
    Draw points uniformly over the surface of a triangle mesh.

    Triangles are chosen with probability proportional to their area and
    points are placed uniformly inside them
    (:func:`trimesh.sample.sample_surface`).

    Parameters
    ----------
    vertices : ndarray
        Shape (V, 3).
    faces : ndarray
        Shape (F, 3), F >= 1.
    count : int
        Number of samples.
    seed : int, default=0
        Seed of the random generator.

    Returns
    -------
    ndarray
        Shape (count, 3).

    Raises
    ------
    DegenerateGeometryError
        If the mesh has no triangle or zero total area.
    """
    validate_positive(count, name="count")
    vertices = np.asarray(vertices, dtype=np.float64).reshape(-1, 3)
    faces = np.asarray(faces, dtype=np.int64).reshape(-1, 3)
    if len(faces) == 0:
        raise DegenerateGeometryError("mesh has no triangles")
    if not float(triangle_areas(vertices, faces).sum()) > 0:
        raise DegenerateGeometryError("mesh has zero surface area")

    mesh = trimesh.Trimesh(vertices=vertices, faces=faces, process=False, validate=False)
    samples, _ = trimesh.sample.sample_surface(mesh, int(count), seed=seed)
    return np.asarray(samples, dtype=np.float64)


def farthest_point_subsample(points: np.ndarray, count: int, seed: int = 0) -> np.ndarray:
    """
    Indices of ``count`` points chosen by farthest-point sampling.

    The first point is drawn with the seeded generator; each next point is
    the one farthest from those already chosen (first index on ties).

    Returns
    -------
    ndarray
        int64 indices in selection order. All indices when
        ``count >= len(points)``.
    """
    points = np.asarray(points, dtype=np.float64)
    n = len(points)
    if n == 0:
        raise EmptyCloudError("cannot subsample an empty point set")
    if count >= n:
        return np.arange(n, dtype=np.int64)

    rng = np.random.default_rng(seed)
    chosen = np.empty(count, dtype=np.int64)
    chosen[0] = rng.integers(n)
    nearest = np.full(n, np.inf)
    for i in range(1, count):
        diff = points - points[chosen[i - 1]]
        nearest = np.minimum(nearest, np.einsum("ij,ij->i", diff, diff))
        chosen[i] = int(np.argmax(nearest))
    return chosen


def canonicalize(cloud: PointCloud) -> Tuple[PointCloud, GroundedTransform]:
    """
    Translate a model cloud so that min z = 0 and the xy-centroid is the origin.

    Returns
    -------
    canonical : PointCloud
    transform : GroundedTransform
        The translation that was applied.
    """
    if cloud.is_empty:
        raise EmptyCloudError("cannot canonicalize an empty cloud")
    cx, cy = cloud.points[:, :2].mean(axis=0)
    shift = GroundedTransform(0.0, (-cx, -cy, -float(cloud.points[:, 2].min())), 1.0)
    canonical = apply_transform(cloud, shift)
    # Exact zeros despite rounding in the subtraction
    points = np.array(canonical.points)
    points[:, 2] -= points[:, 2].min()
    points[:, :2] -= points[:, :2].mean(axis=0)
    return canonical.with_points(points), shift


def find_meshes(mesh_dir: PathLike) -> List[Path]:
    """OBJ and PLY files below ``mesh_dir``, sorted by relative path."""
    mesh_dir = Path(mesh_dir)
    if not mesh_dir.is_dir():
        raise OSError(f"Mesh directory not found: {mesh_dir}")
    return sorted(
        (p for p in mesh_dir.rglob("*") if p.is_file() and p.suffix.lower() in MESH_SUFFIXES),
        key=lambda p: p.relative_to(mesh_dir).as_posix(),
    )
