"""
Synthetic model database for augmap.

This module provides mesh reading and sampling, the persisted model
database, and the exhaustive search that matches a partial view to its
closest model.
"""

from augmap.modeldb.mesh import (
    read_mesh,
    triangle_areas,
    sample_mesh_surface,
    farthest_point_subsample,
    canonicalize,
    find_meshes,
)

from augmap.modeldb.database import (
    ModelEntry,
    ModelDatabase,
    IngestFailure,
    model_seed,
    ingest_model,
    build_database,
    merge_databases,
    save_database,
    load_database,
)

from augmap.modeldb.search import (
    MatchResult,
    match,
    match_clusters,
    write_match_report,
    read_match_report,
)

__all__ = [
    # Meshes
    "read_mesh",
    "triangle_areas",
    "sample_mesh_surface",
    "farthest_point_subsample",
    "canonicalize",
    "find_meshes",
    # Database
    "ModelEntry",
    "ModelDatabase",
    "IngestFailure",
    "model_seed",
    "ingest_model",
    "build_database",
    "merge_databases",
    "save_database",
    "load_database",
    # Search
    "MatchResult",
    "match",
    "match_clusters",
    "write_match_report",
    "read_match_report",
]
