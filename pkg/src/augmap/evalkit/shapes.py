"""
Procedural furniture meshes.

Chairs are assembled from boxes (seat, backrest, four legs) so that model
databases can be built without external data.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import List, Tuple, Union

import numpy as np

from augmap.utils.io import ensure_parent

PathLike = Union[str, Path]

# Corner order: bit 0 -> x, bit 1 -> y, bit 2 -> z
_BOX_FACES = np.array([
    [0, 2, 1], [1, 2, 3],  # z min
    [4, 5, 6], [5, 7, 6],  # z max
    [0, 1, 4], [1, 5, 4],  # y min
    [2, 6, 3], [3, 6, 7],  # y max
    [0, 4, 2], [2, 4, 6],  # x min
    [1, 3, 5], [3, 7, 5],  # x max
])


def box(lower: Tuple[float, float, float], upper: Tuple[float, float, float]) -> Tuple[np.ndarray, np.ndarray]:
    """Axis-aligned box as 8 vertices and 12 triangles."""
    lower = np.asarray(lower, dtype=np.float64)
    upper = np.asarray(upper, dtype=np.float64)
    corners = np.array(
        [[(upper if i & 1 else lower)[0], (upper if i & 2 else lower)[1], (upper if i & 4 else lower)[2]]
         for i in range(8)]
    )
    return corners, _BOX_FACES.copy()


def merge_meshes(parts: List[Tuple[np.ndarray, np.ndarray]]) -> Tuple[np.ndarray, np.ndarray]:
    """Concatenate triangle soups, offsetting face indices."""
    vertices, faces, offset = [], [], 0
    for v, f in parts:
        vertices.append(v)
        faces.append(f + offset)
        offset += len(v)
    return np.concatenate(vertices), np.concatenate(faces)


@dataclass(frozen=True)
class ChairShape:
    """
    Chair dimensions in meters. The seat is centered on the origin in xy,
    the backrest sits on the +y edge, legs stand on z = 0.
    """

    seat_width: float = 0.45
    seat_depth: float = 0.42
    seat_height: float = 0.45
    seat_thickness: float = 0.04
    back_height: float = 0.40
    back_thickness: float = 0.04
    leg_width: float = 0.04
    armrests: bool = False


def procedural_chair(shape: ChairShape = ChairShape()) -> Tuple[np.ndarray, np.ndarray]:
    """
    Triangle soup of a four-legged chair.

    Returns
    -------
    vertices : ndarray
        Shape (V, 3).
    faces : ndarray
        Shape (F, 3).
    """
    hw, hd = shape.seat_width / 2, shape.seat_depth / 2
    top = shape.seat_height
    bottom = top - shape.seat_thickness
    lw = shape.leg_width
    parts = [box((-hw, -hd, bottom), (hw, hd, top))]
    parts.append(box((-hw, hd - shape.back_thickness, top), (hw, hd, top + shape.back_height)))
    for sx in (-1, 1):
        for sy in (-1, 1):
            x0 = hw - lw if sx > 0 else -hw
            y0 = hd - lw if sy > 0 else -hd
            parts.append(box((x0, y0, 0.0), (x0 + lw, y0 + lw, bottom)))
    if shape.armrests:
        arm_z = top + 0.2
        for sx in (-1, 1):
            x0 = hw - lw if sx > 0 else -hw
            parts.append(box((x0, -hd, arm_z - 0.03), (x0 + lw, hd, arm_z)))
            parts.append(box((x0, -hd, top), (x0 + lw, -hd + lw, arm_z - 0.03)))
    return merge_meshes(parts)


def chair_variants(count: int, seed: int = 0) -> List[ChairShape]:
    """
    ``count`` distinct random chair shapes.

    Examples
    --------
    >>> len(chair_variants(20, seed=1))
    20
    """
    rng = np.random.default_rng(seed)
    shapes = []
    for _ in range(count):
        shapes.append(ChairShape(
            seat_width=float(rng.uniform(0.38, 0.60)),
            seat_depth=float(rng.uniform(0.36, 0.55)),
            seat_height=float(rng.uniform(0.40, 0.52)),
            seat_thickness=float(rng.uniform(0.03, 0.08)),
            back_height=float(rng.uniform(0.25, 0.55)),
            back_thickness=float(rng.uniform(0.03, 0.08)),
            leg_width=float(rng.uniform(0.03, 0.06)),
            armrests=bool(rng.random() < 0.3),
        ))
    return shapes


def write_obj(path: PathLike, vertices: np.ndarray, faces: np.ndarray) -> Path:
    """Write a triangle soup as OBJ (1-based indices)."""
    path = ensure_parent(path)
    with open(path, "w") as handle:
        for x, y, z in vertices:
            handle.write(f"v {x:.9f} {y:.9f} {z:.9f}\n")
        for a, b, c in np.asarray(faces) + 1:
            handle.write(f"f {a} {b} {c}\n")
    return path


def write_chair_set(directory: PathLike, count: int, seed: int = 0, prefix: str = "chair") -> List[Path]:
    """
    Write ``count`` procedural chairs as ``<prefix>_<NN>.obj`` files.
    """
    directory = Path(directory)
    width = max(2, len(str(count - 1)))
    return [
        write_obj(directory / f"{prefix}_{i:0{width}d}.obj", *procedural_chair(shape))
        for i, shape in enumerate(chair_variants(count, seed))
    ]

