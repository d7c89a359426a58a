"""
Scene augmentation for augmap.

This module places matched models in the world (object layer O), merges
them into the scene (A = (G \\ S̄) ∪ O), and stores the multi-layer map.
"""

from augmap.augmentation.scene import (
    ORIGINAL,
    PlacedObject,
    ObjectLayer,
    AugmentedScene,
    grounded_world_transform,
    place_model,
    build_object_layer,
    superseded_mask,
    augment_scene,
    save_augmented,
    load_augmented,
    save_object_layer,
    load_object_layer,
)

from augmap.augmentation.layers import (
    MapLayers,
    save_layers,
    load_layers,
)

__all__ = [
    # Types
    "PlacedObject",
    "ObjectLayer",
    "AugmentedScene",
    "MapLayers",
    "ORIGINAL",
    # Placement
    "grounded_world_transform",
    "place_model",
    "build_object_layer",
    # Augmentation
    "superseded_mask",
    "augment_scene",
    # Files
    "save_augmented",
    "load_augmented",
    "save_object_layer",
    "load_object_layer",
    "save_layers",
    "load_layers",
]
