"""
Occupancy grids and their map files.

Cells hold 0 (free), 100 (occupied) or 255 (unknown). Cell ``(ix, iy)``
covers ``[ox + ix·res, ox + (ix+1)·res) × [oy + iy·res, oy + (iy+1)·res)``
and is stored row-major at ``iy * width + ix``.

On disk a grid is a PGM image (P5, maxval 255; occupied 0, free 254,
unknown 205; first image row = highest y) plus a YAML sidecar::

    image: map.pgm
    resolution: 0.05
    origin: [x, y, yaw]
    negate: 0
    occupied_thresh: 0.65
    free_thresh: 0.196
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Set, Tuple, Union
import logging
import math

import numpy as np
import yaml
from PIL import Image

from augmap.config.rcparams import resolve_param
from augmap.utils.errors import CloudFormatError, GridMismatchError
from augmap.utils.io import ensure_parent
from augmap.utils.validation import validate_positive

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

FREE = 0
OCCUPIED = 100
UNKNOWN = 255
CELL_STATES = (FREE, OCCUPIED, UNKNOWN)

PGM_OCCUPIED = 0
PGM_FREE = 254
PGM_UNKNOWN = 205

_LATTICE_TOLERANCE = 1e-6


@dataclass(frozen=True, eq=False)
class OccupancyGrid:
    """
    2D lattice of free / occupied / unknown cells.

    Attributes
    ----------
    resolution : float
        Cell edge in meters.
    origin : (float, float, float)
        (x, y, yaw) of the outer corner of cell (0, 0).
    width, height : int
        Cells along x and y.
    cells : ndarray
        uint8 array of shape (height, width); ``cells[iy, ix]``.
    """

    resolution: float
    origin: Tuple[float, float, float]
    width: int
    height: int
    cells: np.ndarray

    def __post_init__(self):
        validate_positive(self.resolution, name="resolution")
        origin = tuple(float(v) for v in self.origin)
        if len(origin) == 2:
            origin = origin + (0.0,)
        if len(origin) != 3:
            raise ValueError(f"origin must be (x, y, yaw), got {self.origin}")
        cells = np.asarray(self.cells)
        if cells.size != self.width * self.height:
            raise ValueError(
                f"{self.width}x{self.height} grid needs {self.width * self.height} cells, "
                f"got {cells.size}"
            )
        cells = cells.reshape(self.height, self.width).astype(np.uint8)
        if not np.all(np.isin(cells, CELL_STATES)):
            raise ValueError(f"cell values must be in {CELL_STATES}")
        cells.setflags(write=False)
        object.__setattr__(self, "resolution", float(self.resolution))
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "width", int(self.width))
        object.__setattr__(self, "height", int(self.height))
        object.__setattr__(self, "cells", cells)

    @classmethod
    def filled(cls, resolution: float, origin, width: int, height: int, value: int = UNKNOWN) -> "OccupancyGrid":
        return cls(resolution, origin, width, height, np.full((height, width), value, dtype=np.uint8))

    def __eq__(self, other) -> bool:
        if not isinstance(other, OccupancyGrid):
            return NotImplemented
        return (
            self.resolution == other.resolution
            and self.origin == other.origin
            and self.cells.shape == other.cells.shape
            and np.array_equal(self.cells, other.cells)
        )

    @property
    def flat(self) -> np.ndarray:
        """Row-major cell values."""
        return self.cells.reshape(-1)

    def cell_of(self, x: float, y: float) -> Tuple[int, int]:
        """``(ix, iy)`` of a world position, possibly outside the grid."""
        return (
            int(math.floor((x - self.origin[0]) / self.resolution)),
            int(math.floor((y - self.origin[1]) / self.resolution)),
        )

    def contains(self, ix: int, iy: int) -> bool:
        return 0 <= ix < self.width and 0 <= iy < self.height

    def value(self, ix: int, iy: int) -> int:
        """Cell state; unknown outside the grid."""
        return int(self.cells[iy, ix]) if self.contains(ix, iy) else UNKNOWN

    def cell_center(self, ix: int, iy: int) -> Tuple[float, float]:
        return (
            self.origin[0] + (ix + 0.5) * self.resolution,
            self.origin[1] + (iy + 0.5) * self.resolution,
        )

    def extent(self) -> Tuple[float, float, float, float]:
        """(xmin, xmax, ymin, ymax) in meters."""
        ox, oy, _ = self.origin
        return ox, ox + self.width * self.resolution, oy, oy + self.height * self.resolution

    def occupied_cells(self) -> Set[Tuple[int, int]]:
        iy, ix = np.nonzero(self.cells == OCCUPIED)
        return set(zip(ix.tolist(), iy.tolist()))


# =============================================================================
# Merging
# =============================================================================

def _lattice_offset(value: float, reference: float, resolution: float) -> int:
    steps = (value - reference) / resolution
    rounded = round(steps)
    if abs(steps - rounded) > _LATTICE_TOLERANCE:
        raise GridMismatchError(
            f"origins are not on a common lattice ({steps:.6f} cells apart)"
        )
    return int(rounded)


def merge_grids(a: OccupancyGrid, b: OccupancyGrid) -> OccupancyGrid:
    """
    Cellwise union of two grids on the same lattice.

    The result covers both extents. A cell is occupied if either grid has it
    occupied, else free if either has it free, else unknown.

    Raises
    ------
    GridMismatchError
        If resolutions or origin yaws differ or the origins are not aligned
        to the same cell lattice.
    """
    if abs(a.resolution - b.resolution) > 1e-12:
        raise GridMismatchError(f"resolution mismatch: {a.resolution} vs {b.resolution}")
    if abs(a.origin[2] - b.origin[2]) > 1e-12:
        raise GridMismatchError(f"origin yaw mismatch: {a.origin[2]} vs {b.origin[2]}")
    res = a.resolution

    # The lower-left grid supplies the union origin
    ax, ay = a.origin[:2]
    bx, by = b.origin[:2]
    dx = _lattice_offset(bx, ax, res)
    dy = _lattice_offset(by, ay, res)
    ox = ax if dx >= 0 else bx
    oy = ay if dy >= 0 else by
    placed = [
        (a, max(0, -dx), max(0, -dy)),
        (b, max(0, dx), max(0, dy)),
    ]
    width = max(sx + grid.width for grid, sx, _ in placed)
    height = max(sy + grid.height for grid, _, sy in placed)

    occupied = np.zeros((height, width), dtype=bool)
    free = np.zeros((height, width), dtype=bool)
    for grid, sx, sy in placed:
        window = (slice(sy, sy + grid.height), slice(sx, sx + grid.width))
        occupied[window] |= grid.cells == OCCUPIED
        free[window] |= grid.cells == FREE

    cells = np.full((height, width), UNKNOWN, dtype=np.uint8)
    cells[free] = FREE
    cells[occupied] = OCCUPIED
    return OccupancyGrid(res, (ox, oy, a.origin[2]), width, height, cells)


# =============================================================================
# Map files
# =============================================================================

def grid_to_image(grid: OccupancyGrid) -> np.ndarray:
    """PGM pixel values, first row = highest y."""
    pixels = np.full(grid.cells.shape, PGM_UNKNOWN, dtype=np.uint8)
    pixels[grid.cells == FREE] = PGM_FREE
    pixels[grid.cells == OCCUPIED] = PGM_OCCUPIED
    return np.ascontiguousarray(pixels[::-1])


def image_to_cells(
    pixels: np.ndarray,
    occupied_thresh: float,
    free_thresh: float,
    negate: int = 0,
) -> np.ndarray:
    """
    Trinary interpretation of map pixels.

    ``p = (255 - v) / 255`` (or ``v / 255`` when negated) is the occupancy
    probability; ``p > occupied_thresh`` is occupied, ``p < free_thresh``
    free, anything else unknown. Rows are flipped back so row 0 is the
    lowest y.
    """
    values = np.asarray(pixels, dtype=np.float64)
    probability = values / 255.0 if negate else (255.0 - values) / 255.0
    cells = np.full(values.shape, UNKNOWN, dtype=np.uint8)
    cells[probability < free_thresh] = FREE
    cells[probability > occupied_thresh] = OCCUPIED
    return np.ascontiguousarray(cells[::-1])


def save_grid(
    grid: OccupancyGrid,
    path: PathLike,
    occupied_thresh: Optional[float] = None,
    free_thresh: Optional[float] = None,
) -> Path:
    """
    Write ``<name>.pgm`` and its YAML sidecar ``<name>.yaml``.

    Parameters
    ----------
    grid : OccupancyGrid
        Grid to write.
    path : str or Path
        Sidecar path; the image gets the same stem with ``.pgm``.
    occupied_thresh, free_thresh : float, optional
        Sidecar thresholds, defaults from ``rcParams`` (0.65, 0.196).

    Returns
    -------
    Path
        The YAML path.
    """
    occupied_thresh = resolve_param("costmap.occupied_thresh", occupied_thresh)
    free_thresh = resolve_param("costmap.free_thresh", free_thresh)
    yaml_path = ensure_parent(Path(path).with_suffix(".yaml"))
    image_path = yaml_path.with_suffix(".pgm")

    try:
        Image.fromarray(grid_to_image(grid)).save(image_path, format="PPM")
        metadata = {
            "image": image_path.name,
            "resolution": grid.resolution,
            "origin": [float(v) for v in grid.origin],
            "negate": 0,
            "occupied_thresh": float(occupied_thresh),
            "free_thresh": float(free_thresh),
        }
        with open(yaml_path, "w") as handle:
            yaml.safe_dump(metadata, handle, default_flow_style=None, sort_keys=False)
    except OSError as exc:
        raise OSError(f"Cannot write {yaml_path}: {exc}") from exc

    logger.info("saved %dx%d grid to %s", grid.width, grid.height, yaml_path)
    return yaml_path


def load_grid(path: PathLike) -> OccupancyGrid:
    """
    Read a map YAML and its image.

    Raises
    ------
    CloudFormatError
        If the sidecar lacks a required key or the image cannot be read.
    """
    yaml_path = Path(path)
    try:
        with open(yaml_path) as handle:
            metadata = yaml.safe_load(handle)
    except OSError as exc:
        raise OSError(f"Cannot read {yaml_path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise CloudFormatError(f"bad map YAML: {exc}", yaml_path) from exc
    if not isinstance(metadata, dict):
        raise CloudFormatError("map YAML must be a mapping", yaml_path)
    missing = [k for k in ("image", "resolution", "origin") if k not in metadata]
    if missing:
        raise CloudFormatError(f"map YAML lacks {missing}", yaml_path)

    image_path = yaml_path.parent / metadata["image"]
    try:
        with Image.open(image_path) as image:
            pixels = np.array(image.convert("L"))
    except OSError as exc:
        raise CloudFormatError(f"cannot read map image: {exc}", image_path) from exc

    cells = image_to_cells(
        pixels,
        float(metadata.get("occupied_thresh", resolve_param("costmap.occupied_thresh"))),
        float(metadata.get("free_thresh", resolve_param("costmap.free_thresh"))),
        int(metadata.get("negate", 0)),
    )
    height, width = cells.shape
    return OccupancyGrid(float(metadata["resolution"]), tuple(metadata["origin"]), width, height, cells)
