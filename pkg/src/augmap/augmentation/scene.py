"""
Object layer and augmented scene.

Matched models are placed in the world frame to form the object layer O.
Scene points within ε of any placed model (the superseded set S̄) are
removed from the geometric layer G and replaced by the placed models::

    A = (G \\ S̄) ∪ O
"""

from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple, Union
import logging

import numpy as np

from augmap.cloud.core import GroundedTransform, Point3, PointCloud, apply_transform, concatenate
from augmap.cloud.index import NeighborIndex
from augmap.cloud.io import load_cloud, read_vertex_property, save_cloud
from augmap.config.rcparams import resolve_param
from augmap.modeldb.database import ModelDatabase
from augmap.modeldb.search import MatchResult, read_match_report, write_match_report
from augmap.registration.params import normalize_grounding
from augmap.utils.errors import CloudFormatError
from augmap.utils.validation import validate_positive

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
ORIGINAL = 0
MATCHES_FILE = "matches.jsonl"


# =============================================================================
# Placement
# =============================================================================

def grounded_world_transform(
    match: MatchResult,
    db: ModelDatabase,
    grounding: Optional[str] = None,
) -> GroundedTransform:
    """
    World transform of a match after grounding.

    In ``floor`` mode the z translation is adjusted so the placed model's
    lowest point lies on the floor plane z = 0. Other modes return the
    match transform unchanged.
    """
    grounding = normalize_grounding(resolve_param("registration.grounding", grounding))
    T = match.world_transform
    if grounding != "floor":
        return T
    lowest = float(T.apply(db[match.model_id].cloud.points)[:, 2].min())
    tx, ty, tz = T.translation
    return GroundedTransform(T.yaw, (tx, ty, tz - lowest), T.scale)


def place_model(
    match: MatchResult,
    db: ModelDatabase,
    grounding: Optional[str] = None,
) -> PointCloud:
    """
    Database cloud of the matched model in the world frame.

    Parameters
    ----------
    match : MatchResult
        Match whose ``world_transform`` maps the canonical model to the
        world.
    db : ModelDatabase
        Database holding ``match.model_id``.
    grounding : str, optional
        ``floor`` forces min z = 0 in the world.

    Returns
    -------
    PointCloud
        Placed points labeled with the match class.

    Raises
    ------
    KeyError
        If the model is not in the database.
    """
    entry = db[match.model_id]
    T = grounded_world_transform(match, db, grounding)
    placed = apply_transform(entry.cloud, T)
    return placed.with_labels(np.full(len(placed), match.class_id, dtype=np.int64))


@dataclass(frozen=True)
class PlacedObject:
    """A match and its placed cloud."""

    match: MatchResult
    cloud: PointCloud


@dataclass(frozen=True)
class ObjectLayer:
    """
    The object layer O: placed models ordered by cluster_id.

    Attributes
    ----------
    objects : tuple of PlacedObject
    """

    objects: Tuple[PlacedObject, ...] = ()

    def __post_init__(self):
        ordered = tuple(sorted(self.objects, key=lambda o: o.match.cluster_id))
        ids = [o.match.cluster_id for o in ordered]
        if len(set(ids)) != len(ids):
            raise ValueError("object layer holds two objects for one cluster")
        object.__setattr__(self, "objects", ordered)

    def __len__(self) -> int:
        return len(self.objects)

    def __iter__(self):
        return iter(self.objects)

    @property
    def is_empty(self) -> bool:
        return not self.objects

    @property
    def clouds(self) -> List[PointCloud]:
        return [o.cloud for o in self.objects]

    @property
    def matches(self) -> List[MatchResult]:
        return [o.match for o in self.objects]

    def combined(self) -> PointCloud:
        """All placed points, objects in cluster_id order."""
        return concatenate(self.clouds)


def build_object_layer(
    matches: Iterable[MatchResult],
    db: ModelDatabase,
    grounding: Optional[str] = None,
) -> ObjectLayer:
    """
    Place every match.

    The stored matches carry the grounded world transform and the centroid
    of the placed cloud, so each placed cloud equals the database cloud
    under its match's ``world_transform``.
    """
    objects = []
    for match in matches:
        T = grounded_world_transform(match, db, grounding)
        placed = place_model(match, db, grounding)
        grounded = replace(match, world_transform=T, centroid=Point3(*placed.centroid()))
        objects.append(PlacedObject(grounded, placed))
    return ObjectLayer(tuple(objects))


# =============================================================================
# Augmented scene
# =============================================================================

@dataclass(frozen=True)
class AugmentedScene:
    """
    The augmented scene A.

    Attributes
    ----------
    cloud : PointCloud
        Surviving scene points (input order) followed by the placed models
        (cluster_id order).
    provenance : ndarray
        uint16 per point: 0 for original scene points, k for the k-th
        object of the layer (1-based).
    model_ids : tuple of str
        ``model_ids[k - 1]`` is the model behind provenance k.
    removed : ndarray
        Boolean mask over the input scene, True for points of S̄.
    """

    cloud: PointCloud
    provenance: np.ndarray
    model_ids: Tuple[str, ...]
    removed: np.ndarray

    def __post_init__(self):
        provenance = np.asarray(self.provenance, dtype=np.uint16)
        if len(provenance) != len(self.cloud):
            raise ValueError("provenance must have one tag per point")
        if len(provenance) and int(provenance.max()) > len(self.model_ids):
            raise ValueError("provenance tag without a model id")
        provenance.setflags(write=False)
        object.__setattr__(self, "provenance", provenance)
        object.__setattr__(self, "model_ids", tuple(self.model_ids))

    @property
    def n_original(self) -> int:
        return int(np.sum(self.provenance == ORIGINAL))

    def source_of(self, index: int) -> str:
        """``original`` or the model id of a point."""
        tag = int(self.provenance[index])
        return "original" if tag == ORIGINAL else self.model_ids[tag - 1]


def superseded_mask(G: PointCloud, clouds: Sequence[PointCloud], epsilon: float) -> np.ndarray:
    """
    True for scene points within ``epsilon`` of any placed cloud (S̄).
    """
    mask = np.zeros(len(G), dtype=bool)
    if G.is_empty:
        return mask
    for cloud in clouds:
        if cloud.is_empty:
            continue
        distances, _ = NeighborIndex(cloud).query(G.points)
        mask |= distances <= epsilon
    return mask


def augment_scene(
    G: PointCloud,
    layer: ObjectLayer,
    epsilon: Optional[float] = None,
) -> AugmentedScene:
    """
    Replace the scene points each placed model supersedes.

    Parameters
    ----------
    G : PointCloud
        Geometric layer (world frame).
    layer : ObjectLayer
        Placed models.
    epsilon : float, optional
        Removal radius in meters, default ``rcParams["augmentation.epsilon"]``
        (0.1).

    Returns
    -------
    AugmentedScene
        ``|A| = |G| - |S̄| + Σ |placed|``.

    Notes
    -----
    The augmented cloud keeps every optional array of ``G``. Placed points
    get the (0, 0, 0) normal marker and ``rcParams["augmentation.model_color"]``
    where the model cloud lacks them.

    Examples
    --------
    >>> scene = augment_scene(G, ObjectLayer(), 0.1)  # doctest: +SKIP
    >>> scene.cloud is G  # doctest: +SKIP
    True
    """
    epsilon = resolve_param("augmentation.epsilon", epsilon)
    validate_positive(epsilon, name="epsilon")

    if layer.is_empty:
        return AugmentedScene(
            cloud=G,
            provenance=np.zeros(len(G), dtype=np.uint16),
            model_ids=(),
            removed=np.zeros(len(G), dtype=bool),
        )

    removed = superseded_mask(G, layer.clouds, epsilon)
    survivors = G.subset(~removed)
    tags = [np.zeros(len(survivors), dtype=np.uint16)]
    tags += [np.full(len(o.cloud), k, dtype=np.uint16) for k, o in enumerate(layer, start=1)]

    cloud = concatenate([survivors] + [_like_scene(o.cloud, survivors) for o in layer])
    logger.info(
        "augmented scene: %d of %d scene points superseded, %d model points added",
        int(removed.sum()), len(G), len(cloud) - len(survivors),
    )
    return AugmentedScene(
        cloud=cloud,
        provenance=np.concatenate(tags),
        model_ids=tuple(o.match.model_id for o in layer),
        removed=removed,
    )


def _like_scene(placed: PointCloud, scene: PointCloud) -> PointCloud:
    # Placed points carry exactly the scene's optional arrays; missing
    # normals become the (0, 0, 0) marker, missing colors the model color.
    n = len(placed)
    normals = colors = labels = None
    if scene.normals is not None:
        normals = placed.normals if placed.normals is not None else np.zeros((n, 3))
    if scene.colors is not None:
        if placed.colors is not None:
            colors = placed.colors
        else:
            rgb = np.asarray(resolve_param("augmentation.model_color"), dtype=np.uint8)
            colors = np.tile(rgb, (n, 1))
    if scene.labels is not None:
        labels = placed.labels
    return PointCloud(placed.points, normals=normals, labels=labels, colors=colors)


# =============================================================================
# Files
# =============================================================================

def save_augmented(scene: AugmentedScene, path: PathLike) -> Path:
    """Write ``augmented.ply`` with a ``provenance`` (ushort) property."""
    return save_cloud(scene.cloud, path, extra={"provenance": ("ushort", scene.provenance)})


def load_augmented(path: PathLike, model_ids: Sequence[str] = ()) -> AugmentedScene:
    """
    Read an augmented cloud. ``model_ids`` restores the provenance table.
    """
    cloud = load_cloud(path)
    provenance = read_vertex_property(path, "provenance").astype(np.uint16)
    n_models = int(provenance.max()) if len(provenance) else 0
    ids = tuple(model_ids) or tuple(f"object_{k}" for k in range(1, n_models + 1))
    return AugmentedScene(cloud, provenance, ids, np.zeros(0, dtype=bool))


def save_object_layer(layer: ObjectLayer, directory: PathLike) -> List[Path]:
    """
    Write ``object_<cluster_id>.ply`` per placed model and ``matches.jsonl``.
    """
    directory = Path(directory)
    paths = [
        save_cloud(o.cloud, directory / f"object_{o.match.cluster_id}.ply", binary=True)
        for o in layer
    ]
    write_match_report(layer.matches, directory / MATCHES_FILE)
    logger.info("saved %d objects to %s", len(paths), directory)
    return paths


def load_object_layer(directory: PathLike) -> ObjectLayer:
    """
    Read a directory written by :func:`save_object_layer`.

    Raises
    ------
    CloudFormatError
        If an object file listed in the match report is missing.
    """
    directory = Path(directory)
    matches_path = directory / MATCHES_FILE
    if not matches_path.is_file():
        raise CloudFormatError("object layer has no match report", matches_path)
    objects = []
    for match in read_match_report(matches_path):
        path = directory / f"object_{match.cluster_id}.ply"
        if not path.is_file():
            raise CloudFormatError("object file missing", path)
        objects.append(PlacedObject(match, load_cloud(path)))
    return ObjectLayer(tuple(objects))
