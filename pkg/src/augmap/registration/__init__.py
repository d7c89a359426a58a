"""
Model-to-partial registration for augmap.

This module provides the coarse yaw sweep, the yaw-and-translation ICP and
the directed model distance δ used to rank database models.
"""

from augmap.registration.params import (
    RegistrationParams,
    GROUNDING_MODES,
    SCALE_POLICIES,
    normalize_grounding,
)

from augmap.registration.align import (
    Alignment,
    normalize_partial,
    initial_scale,
    height_scale,
    estimate_scale,
    model_distance,
    yaw_lattice,
    centroid_aligned,
    coarse_scores,
    coarse_align,
    icp_refine,
    register,
)

__all__ = [
    # Types
    "RegistrationParams",
    "Alignment",
    "GROUNDING_MODES",
    "SCALE_POLICIES",
    "normalize_grounding",
    # Frames and scale
    "normalize_partial",
    "initial_scale",
    "height_scale",
    "estimate_scale",
    # Alignment
    "model_distance",
    "yaw_lattice",
    "centroid_aligned",
    "coarse_scores",
    "coarse_align",
    "icp_refine",
    "register",
]
