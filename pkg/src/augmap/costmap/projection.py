"""
Projection of 3D points into a 2D costmap.

Points whose height lies in ``[z_min, z_max]`` (``z_max`` is the robot
height) occupy the cell below them; every other cell inside the bounds is
free.
"""

from dataclasses import dataclass, fields
from typing import Iterable, Optional, Sequence, Tuple, Union
import logging
import math

import numpy as np
from scipy import ndimage

from augmap.cloud.core import PointCloud, concatenate
from augmap.config.rcparams import resolve_param
from augmap.costmap.grid import FREE, OCCUPIED, UNKNOWN, OccupancyGrid
from augmap.utils.errors import EmptyCloudError
from augmap.utils.validation import validate_positive

logger = logging.getLogger(__name__)

Bounds = Tuple[float, float, float, float]


@dataclass(frozen=True)
class ProjectionParams:
    """
    Height band and lattice of the projection.

    Attributes
    ----------
    z_min, z_max : float
        Height band in meters, ``z_min < z_max``; both ends included.
    resolution : float
        Cell edge in meters.
    padding : float
        Free border added around the data bounds, meters.
    bounds : (xmin, ymin, xmax, ymax), optional
        Explicit xy extent; replaces the data bounds and the padding.
    """

    z_min: float = 0.1
    z_max: float = 1.0
    resolution: float = 0.05
    padding: float = 0.5
    bounds: Optional[Bounds] = None

    def __post_init__(self):
        if not self.z_min < self.z_max:
            raise ValueError(f"z_min must be < z_max, got [{self.z_min}, {self.z_max}]")
        validate_positive(self.resolution, name="resolution")
        validate_positive(self.padding, name="padding", strict=False)
        if self.bounds is not None:
            bounds = tuple(float(v) for v in self.bounds)
            if len(bounds) != 4 or bounds[0] > bounds[2] or bounds[1] > bounds[3]:
                raise ValueError(f"bounds must be (xmin, ymin, xmax, ymax), got {self.bounds}")
            object.__setattr__(self, "bounds", bounds)

    @classmethod
    def from_rcparams(cls, **overrides) -> "ProjectionParams":
        values = {
            f.name: resolve_param(f"costmap.{f.name}", overrides.get(f.name))
            for f in fields(cls)
            if f.name != "bounds"
        }
        return cls(bounds=overrides.get("bounds"), **values)


def _grid_frame(points: np.ndarray, params: ProjectionParams) -> Tuple[float, float, int, int]:
    if params.bounds is not None:
        xmin, ymin, xmax, ymax = params.bounds
    else:
        if len(points) == 0:
            raise EmptyCloudError("cannot size a costmap from no points without explicit bounds")
        xmin, ymin = points[:, :2].min(axis=0) - params.padding
        xmax, ymax = points[:, :2].max(axis=0) + params.padding
    res = params.resolution
    width = int(math.floor((xmax - xmin) / res)) + 1
    height = int(math.floor((ymax - ymin) / res)) + 1
    return float(xmin), float(ymin), width, height


def project_cloud(cloud: PointCloud, params: Optional[ProjectionParams] = None) -> OccupancyGrid:
    """
    Rasterize a cloud into an occupancy grid.

    Parameters
    ----------
    cloud : PointCloud
        Points in the world frame.
    params : ProjectionParams, optional
        Defaults from ``rcParams``.

    Returns
    -------
    OccupancyGrid
        Origin at the lower-left corner of the bounds. Cell of a point:
        ``floor((p - origin) / resolution)``.

    Raises
    ------
    EmptyCloudError
        If the cloud is empty and no bounds are given.

    Examples
    --------
    >>> params = ProjectionParams(z_min=0.1, z_max=0.6, resolution=0.05, bounds=(0, 0, 1, 1))
    >>> grid = project_cloud(PointCloud([[0.52, 0.03, 0.4]]), params)
    >>> sorted(grid.occupied_cells())
    [(10, 0)]
    """
    params = params if params is not None else ProjectionParams.from_rcparams()
    points = cloud.points
    ox, oy, width, height = _grid_frame(points, params)
    res = params.resolution

    in_band = (points[:, 2] >= params.z_min) & (points[:, 2] <= params.z_max)
    band = points[in_band]
    ix = np.floor((band[:, 0] - ox) / res).astype(np.int64)
    iy = np.floor((band[:, 1] - oy) / res).astype(np.int64)
    inside = (ix >= 0) & (ix < width) & (iy >= 0) & (iy < height)

    cells = np.full((height, width), FREE, dtype=np.uint8)
    cells[iy[inside], ix[inside]] = OCCUPIED
    logger.debug(
        "projected %d of %d points into %dx%d cells", int(inside.sum()), len(points), width, height
    )
    return OccupancyGrid(res, (ox, oy, 0.0), width, height, cells)


def project_objects(layer, params: Optional[ProjectionParams] = None) -> OccupancyGrid:
    """
    Costmap of an object layer.

    Parameters
    ----------
    layer : ObjectLayer or sequence of PointCloud
        Placed models.
    params : ProjectionParams, optional
        Defaults from ``rcParams``.

    Raises
    ------
    EmptyCloudError
        If the layer is empty and ``params.bounds`` is not set.
    """
    clouds: Iterable[PointCloud] = layer.clouds if hasattr(layer, "clouds") else layer
    return project_cloud(concatenate(list(clouds)), params)


# =============================================================================
# Collision queries
# =============================================================================

def inflate(grid: OccupancyGrid, radius: float) -> np.ndarray:
    """
    Boolean mask of cells within ``radius`` of an occupied cell center.
    """
    occupied = grid.cells == OCCUPIED
    cells = int(math.floor(radius / grid.resolution))
    if cells <= 0:
        return occupied
    offsets = np.arange(-cells, cells + 1)
    disk = (offsets[:, None] ** 2 + offsets[None, :] ** 2) * grid.resolution ** 2 <= radius ** 2
    return ndimage.binary_dilation(occupied, structure=disk)


def is_path_clear(
    grid: OccupancyGrid,
    waypoints: Sequence[Sequence[float]],
    robot_radius: float = 0.0,
    unknown_is_obstacle: bool = False,
) -> bool:
    """
    Whether a polyline stays clear of occupied cells.

    The path is sampled every half cell; a sample collides when an occupied
    cell center lies within ``robot_radius`` of its cell. Samples outside the
    grid count as unknown.

    Parameters
    ----------
    grid : OccupancyGrid
        Costmap.
    waypoints : sequence of (x, y)
        Polyline vertices in meters, at least one.
    robot_radius : float, default=0.0
        Clearance in meters.
    unknown_is_obstacle : bool, default=False
        Treat unknown cells as blocked.
    """
    validate_positive(robot_radius, name="robot_radius", strict=False)
    waypoints = np.asarray(waypoints, dtype=np.float64).reshape(-1, 2)
    if len(waypoints) == 0:
        raise ValueError("waypoints cannot be empty")

    blocked = inflate(grid, robot_radius)
    if unknown_is_obstacle:
        blocked = blocked | (grid.cells == UNKNOWN)

    step = grid.resolution / 2.0
    samples = [waypoints[:1]]
    for start, end in zip(waypoints[:-1], waypoints[1:]):
        n = max(1, int(math.ceil(np.linalg.norm(end - start) / step)))
        t = np.arange(1, n + 1)[:, None] / n
        samples.append(start + t * (end - start))
    for x, y in np.concatenate(samples):
        ix, iy = grid.cell_of(x, y)
        if grid.contains(ix, iy):
            if blocked[iy, ix]:
                return False
        elif unknown_is_obstacle:
            return False
    return True
