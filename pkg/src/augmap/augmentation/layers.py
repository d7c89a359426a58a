"""
The multi-layer map bundle.

A map is stored as one directory::

    geometry.ply        G, geometric layer
    semantic.ply        S, labeled layer
    objects/            O, placed models + matches.jsonl
    occupancy.yaml/pgm  M, 2D grid (optional)
    augmented.ply       A, with provenance (optional)
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union
import logging

from augmap.augmentation.scene import (
    AugmentedScene,
    ObjectLayer,
    load_augmented,
    load_object_layer,
    save_augmented,
    save_object_layer,
)
from augmap.cloud.core import PointCloud
from augmap.cloud.io import load_cloud, save_cloud
from augmap.costmap.grid import OccupancyGrid, load_grid, save_grid

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

GEOMETRY_FILE = "geometry.ply"
SEMANTIC_FILE = "semantic.ply"
OBJECTS_DIR = "objects"
OCCUPANCY_FILE = "occupancy.yaml"
AUGMENTED_FILE = "augmented.ply"


@dataclass(frozen=True)
class MapLayers:
    """
    Layers of one mapped scene.

    Attributes
    ----------
    geometry : PointCloud
        G.
    semantic : PointCloud
        S, labeled.
    objects : ObjectLayer
        O.
    occupancy : OccupancyGrid, optional
        M.
    augmented : AugmentedScene, optional
        A.
    """

    geometry: PointCloud
    semantic: PointCloud
    objects: ObjectLayer = ObjectLayer()
    occupancy: Optional[OccupancyGrid] = None
    augmented: Optional[AugmentedScene] = None


def save_layers(layers: MapLayers, directory: PathLike) -> Path:
    """Write every present layer below ``directory``."""
    directory = Path(directory)
    save_cloud(layers.geometry, directory / GEOMETRY_FILE)
    save_cloud(layers.semantic, directory / SEMANTIC_FILE)
    save_object_layer(layers.objects, directory / OBJECTS_DIR)
    if layers.occupancy is not None:
        save_grid(layers.occupancy, directory / OCCUPANCY_FILE)
    if layers.augmented is not None:
        save_augmented(layers.augmented, directory / AUGMENTED_FILE)
    logger.info("saved map layers to %s", directory)
    return directory


def load_layers(directory: PathLike) -> MapLayers:
    """
    Read a directory written by :func:`save_layers`.

    Optional layers are None when their files are absent.
    """
    directory = Path(directory)
    objects = load_object_layer(directory / OBJECTS_DIR)
    occupancy_path = directory / OCCUPANCY_FILE
    augmented_path = directory / AUGMENTED_FILE
    return MapLayers(
        geometry=load_cloud(directory / GEOMETRY_FILE),
        semantic=load_cloud(directory / SEMANTIC_FILE),
        objects=objects,
        occupancy=load_grid(occupancy_path) if occupancy_path.is_file() else None,
        augmented=(
            load_augmented(augmented_path, [o.match.model_id for o in objects])
            if augmented_path.is_file() else None
        ),
    )
