"""
augmap: scene completion for semantic 3D maps.

augmap turns partial, semantically labeled point clouds of indoor scenes
into a multi-layer map in which each detected object is replaced by the
best-matching complete model from a synthetic database, and derives a 2D
navigation costmap from the completed objects.

Basic usage:
    >>> import augmap as am
    >>> db = am.load_database("db/")
    >>> clusters = am.extract_instances(am.load_cloud("S.ply"), class_id=1)
    >>> kept, reports = am.filter_clusters(clusters)
    >>> layer = am.build_object_layer(am.match_clusters(kept, db), db)
    >>> scene = am.augment_scene(am.load_cloud("G.ply"), layer)
"""

__version__ = "0.1.0"
__license__ = "MIT"
__description__ = "Scene completion for semantic 3D maps with synthetic model databases"

# Parameters
from augmap.config import (
    rcParams,
    resolve_param,
    rc_context,
    reset_params,
    load_config_file,
)

# Point clouds
from augmap.cloud import (
    Point3,
    PointCloud,
    GroundedTransform,
    NeighborIndex,
    apply_transform,
    farthest_point_distance,
    load_cloud,
    save_cloud,
)

# Pipeline stages
from augmap.segmentation import (
    SegmentationParams,
    Cluster,
    extract_instances,
    planarity_filter,
    size_filter,
    filter_clusters,
)
from augmap.registration import (
    RegistrationParams,
    Alignment,
    model_distance,
    coarse_align,
    icp_refine,
)
from augmap.modeldb import (
    ModelEntry,
    ModelDatabase,
    MatchResult,
    ingest_model,
    build_database,
    save_database,
    load_database,
    match,
    match_clusters,
)
from augmap.augmentation import (
    ObjectLayer,
    AugmentedScene,
    MapLayers,
    place_model,
    build_object_layer,
    augment_scene,
    save_layers,
    load_layers,
)
from augmap.costmap import (
    OccupancyGrid,
    ProjectionParams,
    project_objects,
    project_cloud,
    merge_grids,
    save_grid,
    load_grid,
    is_path_clear,
)

# Evaluation
from augmap.evalkit import (
    SceneSpec,
    GroundTruth,
    EvalReport,
    render_partial,
    synthesize_scene,
    evaluate,
    completion_error,
    report_from_counts,
)

# Preview figures
from augmap.plot import plot_topview, plot_costmap, plot_residuals
from augmap.utils.io import savefig

__all__ = [
    # Version
    "__version__",
    # Parameters
    "rcParams",
    "resolve_param",
    "rc_context",
    "reset_params",
    "load_config_file",
    # Point clouds
    "Point3",
    "PointCloud",
    "GroundedTransform",
    "NeighborIndex",
    "apply_transform",
    "farthest_point_distance",
    "load_cloud",
    "save_cloud",
    # Segmentation
    "SegmentationParams",
    "Cluster",
    "extract_instances",
    "planarity_filter",
    "size_filter",
    "filter_clusters",
    # Registration
    "RegistrationParams",
    "Alignment",
    "model_distance",
    "coarse_align",
    "icp_refine",
    # Model database
    "ModelEntry",
    "ModelDatabase",
    "MatchResult",
    "ingest_model",
    "build_database",
    "save_database",
    "load_database",
    "match",
    "match_clusters",
    # Augmentation
    "ObjectLayer",
    "AugmentedScene",
    "MapLayers",
    "place_model",
    "build_object_layer",
    "augment_scene",
    "save_layers",
    "load_layers",
    # Costmap
    "OccupancyGrid",
    "ProjectionParams",
    "project_objects",
    "project_cloud",
    "merge_grids",
    "save_grid",
    "load_grid",
    "is_path_clear",
    # Evaluation
    "SceneSpec",
    "GroundTruth",
    "EvalReport",
    "render_partial",
    "synthesize_scene",
    "evaluate",
    "completion_error",
    "report_from_counts",
    # Figures
    "plot_topview",
    "plot_costmap",
    "plot_residuals",
    "savefig",
]
