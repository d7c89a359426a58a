"""
Instance extraction and shape filtering for augmap.
"""

from augmap.segmentation.params import SegmentationParams

from augmap.segmentation.instances import (
    Cluster,
    difference_of_normals,
    euclidean_clusters,
    extract_instances,
    segment_scene,
    write_clusters,
    load_clusters,
)

from augmap.segmentation.filters import (
    FilterReport,
    KEPT,
    REJECTED_PLANAR,
    REJECTED_SIZE,
    planarity_filter,
    size_filter,
    apply_filters,
    filter_clusters,
    reports_to_frame,
    write_filter_report,
    read_filter_report,
)

__all__ = [
    # Types
    "SegmentationParams",
    "Cluster",
    "FilterReport",
    # Verdicts
    "KEPT",
    "REJECTED_PLANAR",
    "REJECTED_SIZE",
    # Extraction
    "difference_of_normals",
    "euclidean_clusters",
    "extract_instances",
    "segment_scene",
    # Filters
    "planarity_filter",
    "size_filter",
    "apply_filters",
    "filter_clusters",
    # Files
    "write_clusters",
    "load_clusters",
    "reports_to_frame",
    "write_filter_report",
    "read_filter_report",
]
