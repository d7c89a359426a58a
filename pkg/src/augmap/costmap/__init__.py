"""
2D costmaps for augmap.

This module provides the occupancy grid, the projection of placed objects
into it, the merge with a SLAM grid, and the PGM + YAML map files.
"""

from augmap.costmap.grid import (
    OccupancyGrid,
    FREE,
    OCCUPIED,
    UNKNOWN,
    merge_grids,
    grid_to_image,
    image_to_cells,
    save_grid,
    load_grid,
)

from augmap.costmap.projection import (
    ProjectionParams,
    project_cloud,
    project_objects,
    inflate,
    is_path_clear,
)

__all__ = [
    # Types
    "OccupancyGrid",
    "ProjectionParams",
    # Cell states
    "FREE",
    "OCCUPIED",
    "UNKNOWN",
    # Projection
    "project_cloud",
    "project_objects",
    "merge_grids",
    # Navigation queries
    "inflate",
    "is_path_clear",
    # Files
    "grid_to_image",
    "image_to_cells",
    "save_grid",
    "load_grid",
]
