"""
Synthetic scenes and evaluation for augmap.

This module renders labeled scenes and partial views from database models,
generates procedural chair meshes, and scores detections (precision,
recall, F1) and completions (chamfer distance).
"""

from augmap.evalkit.scenes import (
    Placement,
    Camera,
    Room,
    SceneSpec,
    TruthEntry,
    GroundTruth,
    visible_indices,
    render_partial,
    room_clutter,
    random_placements,
    synthesize_scene,
)

from augmap.evalkit.metrics import (
    Assignment,
    EvalReport,
    f1_score,
    report_from_counts,
    evaluate,
    completion_error,
)

from augmap.evalkit.shapes import (
    ChairShape,
    procedural_chair,
    chair_variants,
    write_obj,
    write_chair_set,
)

__all__ = [
    # Scene description
    "Placement",
    "Camera",
    "Room",
    "SceneSpec",
    "TruthEntry",
    "GroundTruth",
    # Rendering
    "visible_indices",
    "render_partial",
    "room_clutter",
    "random_placements",
    "synthesize_scene",
    # Metrics
    "Assignment",
    "EvalReport",
    "f1_score",
    "report_from_counts",
    "evaluate",
    "completion_error",
    # Procedural meshes
    "ChairShape",
    "procedural_chair",
    "chair_variants",
    "write_obj",
    "write_chair_set",
]
