"""
Point-cloud foundations for augmap.

This module provides the point-cloud containers, file I/O, exact
nearest-neighbor search, normal estimation, covariance statistics and the
grounded transform shared by every pipeline stage.
"""

from augmap.cloud.core import (
    Point3,
    make_point,
    PointCloud,
    GroundedTransform,
    empty_cloud,
    concatenate,
    apply_transform,
    farthest_point_distance,
    wrap_angle,
    angle_difference,
)

from augmap.cloud.index import (
    NeighborIndex,
    build_index,
    nearest,
)

from augmap.cloud.features import (
    CovarianceSummary,
    covariance_summary,
    estimate_normals,
    orient_normals,
    voxel_downsample,
)

from augmap.cloud.io import (
    load_cloud,
    save_cloud,
    read_ply,
    read_pcd,
    read_vertex_property,
)

__all__ = [
    # Types
    "Point3",
    "make_point",
    "PointCloud",
    "GroundedTransform",
    "NeighborIndex",
    "CovarianceSummary",
    # Construction and transforms
    "empty_cloud",
    "concatenate",
    "apply_transform",
    "wrap_angle",
    "angle_difference",
    # Statistics
    "farthest_point_distance",
    "covariance_summary",
    "estimate_normals",
    "orient_normals",
    "voxel_downsample",
    # Search
    "build_index",
    "nearest",
    # I/O
    "load_cloud",
    "save_cloud",
    "read_ply",
    "read_pcd",
    "read_vertex_property",
]
