"""
Synthetic scenes and partial views.

A :class:`SceneSpec` places database models in a room, renders what a set
of pinhole cameras see (point z-buffer, no meshes involved) and corrupts
the labels near object boundaries the way a 2D segmentation network
spreads a label onto adjacent walls. The result stands in for the output
of a live semantic reconstruction, with exact ground truth attached.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union
import logging
import math

import numpy as np
from joblib import Parallel, delayed

from augmap.cloud.core import GroundedTransform, Point3, PointCloud, apply_transform, make_point
from augmap.cloud.index import NeighborIndex
from augmap.config.rcparams import resolve_param
from augmap.modeldb.database import ModelDatabase
from augmap.utils.errors import EmptyCloudError
from augmap.utils.io import read_json, write_json
from augmap.utils.validation import validate_positive, validate_range

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

_UP = np.array([0.0, 0.0, 1.0])
_NEAR = 1e-9


# =============================================================================
# Scene description
# =============================================================================

@dataclass(frozen=True)
class Placement:
    """
    World pose of one model: yaw about z, xy position, uniform scale.

    The canonical model frame already has its ground contact at z = 0, so
    placed models stand on the floor.
    """

    model_id: str
    x: float
    y: float
    yaw: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        values = (self.x, self.y, self.yaw, self.scale)
        if not all(math.isfinite(float(v)) for v in values):
            raise ValueError(f"placement of {self.model_id!r} must be finite, got {values}")
        validate_positive(self.scale, name="scale")

    @property
    def transform(self) -> GroundedTransform:
        return GroundedTransform(self.yaw, (self.x, self.y, 0.0), self.scale)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "model_id": self.model_id,
            "x": float(self.x),
            "y": float(self.y),
            "yaw": float(self.yaw),
            "scale": float(self.scale),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Placement":
        return cls(data["model_id"], data["x"], data["y"], data.get("yaw", 0.0), data.get("scale", 1.0))


@dataclass(frozen=True)
class Camera:
    """Pinhole viewpoint looking from ``position`` towards ``look_at``."""

    position: Point3
    look_at: Point3

    def __post_init__(self):
        object.__setattr__(self, "position", make_point(*self.position))
        object.__setattr__(self, "look_at", make_point(*self.look_at))
        if self.position == self.look_at:
            raise ValueError("camera position and look_at must differ")

    def basis(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        (forward, right, up) unit vectors; image up follows world z.
        """
        forward = np.subtract(self.look_at, self.position)
        forward = forward / np.linalg.norm(forward)
        right = np.cross(forward, _UP)
        if np.linalg.norm(right) < 1e-9:
            # looking straight up or down
            right = np.cross(forward, np.array([0.0, 1.0, 0.0]))
        right = right / np.linalg.norm(right)
        up = np.cross(right, forward)
        return forward, right, up

    def to_dict(self) -> Dict[str, Any]:
        return {"position": list(self.position), "look_at": list(self.look_at)}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Camera":
        return cls(tuple(data["position"]), tuple(data["look_at"]))


@dataclass(frozen=True)
class Room:
    """Floor rectangle at z = 0 and, optionally, the four walls around it."""

    xmin: float
    ymin: float
    xmax: float
    ymax: float
    wall_height: float = 2.5
    floor: bool = True
    walls: bool = True

    def __post_init__(self):
        if not (self.xmin < self.xmax and self.ymin < self.ymax):
            raise ValueError(
                f"room extent must be (xmin < xmax, ymin < ymax), got "
                f"({self.xmin}, {self.ymin}, {self.xmax}, {self.ymax})"
            )
        validate_positive(self.wall_height, name="wall_height")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "xmin": self.xmin,
            "ymin": self.ymin,
            "xmax": self.xmax,
            "ymax": self.ymax,
            "wall_height": self.wall_height,
            "floor": self.floor,
            "walls": self.walls,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Room":
        return cls(**data)


@dataclass(frozen=True)
class SceneSpec:
    """
    Everything needed to synthesize one labeled scene.

    Attributes
    ----------
    placements : tuple of Placement
        Models to place.
    cameras : tuple of Camera
        Viewpoints; the rendered scene is the union of their views.
    room : Room, optional
        Floor and walls (background clutter). None renders objects only.
    noise_sigma : float, optional
        Standard deviation of the range noise, meters. Defaults to
        ``rcParams["evalkit.noise_sigma"]``.
    label_bleed : float, optional
        Probability in [0, 1] that a clutter point near an object takes the
        object's label. Defaults to ``rcParams["evalkit.label_bleed"]``.
    seed : int, default=0
        Seed of every stochastic step.
    image_res : int, optional
        Square image side in pixels.
    fov : float, optional
        Field of view in degrees.
    """

    placements: Tuple[Placement, ...]
    cameras: Tuple[Camera, ...]
    room: Optional[Room] = None
    noise_sigma: Optional[float] = None
    label_bleed: Optional[float] = None
    seed: int = 0
    image_res: Optional[int] = None
    fov: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "placements", tuple(self.placements))
        object.__setattr__(self, "cameras", tuple(self.cameras))
        if not self.cameras:
            raise ValueError("a scene needs at least one camera")
        noise_sigma = float(resolve_param("evalkit.noise_sigma", self.noise_sigma))
        label_bleed = float(resolve_param("evalkit.label_bleed", self.label_bleed))
        image_res = int(resolve_param("evalkit.image_res", self.image_res))
        fov = float(resolve_param("evalkit.fov", self.fov))
        validate_positive(noise_sigma, name="noise_sigma", strict=False)
        validate_range(label_bleed, 0.0, 1.0, name="label_bleed")
        validate_positive(image_res, name="image_res")
        if not 0.0 < fov < 180.0:
            raise ValueError(f"fov must be in (0, 180) degrees, got {fov}")
        object.__setattr__(self, "noise_sigma", noise_sigma)
        object.__setattr__(self, "label_bleed", label_bleed)
        object.__setattr__(self, "image_res", image_res)
        object.__setattr__(self, "fov", fov)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "placements": [p.to_dict() for p in self.placements],
            "cameras": [c.to_dict() for c in self.cameras],
            "room": self.room.to_dict() if self.room is not None else None,
            "noise_sigma": self.noise_sigma,
            "label_bleed": self.label_bleed,
            "seed": int(self.seed),
            "image_res": self.image_res,
            "fov": self.fov,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SceneSpec":
        room = data.get("room")
        return cls(
            placements=tuple(Placement.from_dict(p) for p in data["placements"]),
            cameras=tuple(Camera.from_dict(c) for c in data["cameras"]),
            room=Room.from_dict(room) if room else None,
            noise_sigma=data.get("noise_sigma"),
            label_bleed=data.get("label_bleed"),
            seed=int(data.get("seed", 0)),
            image_res=data.get("image_res"),
            fov=data.get("fov"),
        )

    def to_json(self, path: PathLike) -> Path:
        return write_json(self.to_dict(), path)

    @classmethod
    def from_json(cls, path: PathLike) -> "SceneSpec":
        return cls.from_dict(read_json(path))


@dataclass(frozen=True)
class TruthEntry:
    """Ground truth of one placement."""

    class_id: int
    centroid: Point3
    model_id: str
    pose: Placement

    def __post_init__(self):
        object.__setattr__(self, "centroid", Point3(*(float(v) for v in self.centroid)))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "class_id": int(self.class_id),
            "centroid": list(self.centroid),
            "model_id": self.model_id,
            "pose": self.pose.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "TruthEntry":
        return cls(
            int(data["class_id"]),
            Point3(*data["centroid"]),
            data["model_id"],
            Placement.from_dict(data["pose"]),
        )


@dataclass(frozen=True)
class GroundTruth:
    """One :class:`TruthEntry` per placement, in placement order."""

    entries: Tuple[TruthEntry, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def to_dict(self) -> Dict[str, Any]:
        return {"entries": [e.to_dict() for e in self.entries]}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "GroundTruth":
        return cls(tuple(TruthEntry.from_dict(e) for e in data["entries"]))

    def to_json(self, path: PathLike) -> Path:
        return write_json(self.to_dict(), path)

    @classmethod
    def from_json(cls, path: PathLike) -> "GroundTruth":
        return cls.from_dict(read_json(path))


# =============================================================================
# Rendering
# =============================================================================

def visible_indices(
    points: np.ndarray,
    camera: Camera,
    image_res: Optional[int] = None,
    fov: Optional[float] = None,
) -> np.ndarray:
    """
    Indices of the points a camera sees, ascending.

    Every point in front of the camera is projected onto an
    ``image_res`` x ``image_res`` pixel grid; each pixel keeps its nearest
    point along the optical axis (lowest index on equal depth).

    Parameters
    ----------
    points : ndarray
        Shape (N, 3), world frame.
    camera : Camera
        Viewpoint.
    image_res : int, optional
        Pixels per side. Defaults to ``rcParams["evalkit.image_res"]``.
    fov : float, optional
        Horizontal and vertical field of view, degrees.
    """
    image_res = int(resolve_param("evalkit.image_res", image_res))
    fov = float(resolve_param("evalkit.fov", fov))
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)

    forward, right, up = camera.basis()
    rel = points - np.asarray(camera.position)
    depth = rel @ forward
    in_front = depth > _NEAR
    safe_depth = np.where(in_front, depth, 1.0)
    half = math.tan(math.radians(fov) / 2.0)
    u = (rel @ right) / safe_depth / half
    v = (rel @ up) / safe_depth / half
    seen = np.flatnonzero(in_front & (np.abs(u) <= 1.0) & (np.abs(v) <= 1.0))
    if len(seen) == 0:
        return seen.astype(np.int64)

    col = np.minimum(np.floor((u[seen] + 1.0) / 2.0 * image_res), image_res - 1).astype(np.int64)
    row = np.minimum(np.floor((1.0 - v[seen]) / 2.0 * image_res), image_res - 1).astype(np.int64)
    pixel = row * image_res + col

    order = np.lexsort((seen, depth[seen], pixel))
    _, first = np.unique(pixel[order], return_index=True)
    return np.sort(seen[order][first]).astype(np.int64)


def _ray_noise(
    points: np.ndarray,
    origins: np.ndarray,
    noise_sigma: float,
    rng: np.random.Generator,
) -> np.ndarray:
    offsets = rng.normal(0.0, noise_sigma, size=len(points)) if noise_sigma > 0 else np.zeros(len(points))
    rays = points - origins
    norms = np.linalg.norm(rays, axis=1, keepdims=True)
    rays = np.divide(rays, norms, out=np.zeros_like(rays), where=norms > 0)
    return points + offsets[:, None] * rays


def render_partial(
    model: PointCloud,
    camera: Camera,
    image_res: Optional[int] = None,
    noise_sigma: Optional[float] = None,
    seed: int = 0,
    fov: Optional[float] = None,
) -> PointCloud:
    """
    Partial view of a cloud seen from one camera.

    Parameters
    ----------
    model : PointCloud
        Cloud in the world frame.
    camera : Camera
        Viewpoint, outside the model's bounding box.
    image_res : int, optional
        Pixels per side. Defaults to ``rcParams["evalkit.image_res"]``.
    noise_sigma : float, optional
        Gaussian range noise along each view ray, meters. Defaults to
        ``rcParams["evalkit.noise_sigma"]``.
    seed : int, default=0
        Noise seed.
    fov : float, optional
        Field of view in degrees.

    Returns
    -------
    PointCloud
        Visible points (input order), displaced along their rays, with the
        model's labels and colors.

    Raises
    ------
    ValueError
        If the camera sits inside the model's bounding box.
    EmptyCloudError
        If no point is visible.
    """
    noise_sigma = float(resolve_param("evalkit.noise_sigma", noise_sigma))
    validate_positive(noise_sigma, name="noise_sigma", strict=False)
    if model.is_empty:
        raise EmptyCloudError("cannot render an empty cloud")
    lower, upper = model.bounds()
    position = np.asarray(camera.position)
    if np.all(position >= lower) and np.all(position <= upper):
        raise ValueError(f"camera at {tuple(camera.position)} is inside the model bounding box")

    visible = visible_indices(model.points, camera, image_res, fov)
    if len(visible) == 0:
        raise EmptyCloudError(f"no point visible from camera at {tuple(camera.position)}")

    rng = np.random.default_rng(seed)
    view = model.subset(visible)
    noisy = _ray_noise(view.points, position[None, :], noise_sigma, rng)
    logger.debug("rendered %d of %d points", len(visible), len(model))
    return PointCloud(noisy, labels=view.labels, colors=view.colors)


# =============================================================================
# Scene synthesis
# =============================================================================

def room_clutter(room: Room, spacing: Optional[float] = None) -> np.ndarray:
    """
    Regular samples of the floor and walls, ``spacing`` apart.
    """
    spacing = float(resolve_param("evalkit.clutter_spacing", spacing))
    validate_positive(spacing, name="clutter_spacing")
    xs = np.arange(room.xmin, room.xmax + spacing / 2, spacing)
    ys = np.arange(room.ymin, room.ymax + spacing / 2, spacing)
    zs = np.arange(spacing, room.wall_height + spacing / 2, spacing)

    parts = []
    if room.floor:
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        parts.append(np.column_stack([X.ravel(), Y.ravel(), np.zeros(X.size)]))
    if room.walls:
        X, Z = np.meshgrid(xs, zs, indexing="ij")
        for y in (room.ymin, room.ymax):
            parts.append(np.column_stack([X.ravel(), np.full(X.size, y), Z.ravel()]))
        Y, Z = np.meshgrid(ys[1:-1], zs, indexing="ij")
        for x in (room.xmin, room.xmax):
            parts.append(np.column_stack([np.full(Y.size, x), Y.ravel(), Z.ravel()]))
    if not parts:
        return np.zeros((0, 3))
    return np.concatenate(parts)


def random_placements(
    model_ids: Sequence[str],
    count: int,
    room: Room,
    seed: int = 0,
    clearance: float = 1.0,
    margin: float = 0.6,
    max_tries: int = 10000,
) -> Tuple[Placement, ...]:
    """
    ``count`` placements with random models and yaws, at least ``clearance``
    apart and ``margin`` away from the walls.

    Raises
    ------
    ValueError
        If the room cannot hold that many placements.
    """
    if not model_ids:
        raise ValueError("model_ids cannot be empty")
    rng = np.random.default_rng(seed)
    ids = sorted(model_ids)
    centers: List[np.ndarray] = []
    placements: List[Placement] = []
    for _ in range(max_tries):
        if len(placements) == count:
            break
        xy = np.array([
            rng.uniform(room.xmin + margin, room.xmax - margin),
            rng.uniform(room.ymin + margin, room.ymax - margin),
        ])
        yaw = float(rng.uniform(0.0, 2.0 * math.pi))
        model_id = ids[int(rng.integers(len(ids)))]
        if all(np.linalg.norm(xy - c) >= clearance for c in centers):
            centers.append(xy)
            placements.append(Placement(model_id, float(xy[0]), float(xy[1]), yaw))
    if len(placements) < count:
        raise ValueError(f"could only place {len(placements)} of {count} models in the room")
    return tuple(placements)


def synthesize_scene(
    spec: SceneSpec,
    db: ModelDatabase,
    background_class: Optional[int] = None,
    bleed_radius: Optional[float] = None,
    clutter_spacing: Optional[float] = None,
    workers: Optional[int] = None,
) -> Tuple[PointCloud, PointCloud, GroundTruth]:
    """
    Render a labeled scene from a :class:`SceneSpec`.

    Parameters
    ----------
    spec : SceneSpec
        Placements, cameras, room and corruption settings.
    db : ModelDatabase
        Source of the placed models.
    background_class : int, optional
        Label of floor and wall points. Defaults to
        ``rcParams["evalkit.background_class"]``.
    bleed_radius : float, optional
        Clutter points closer than this to a visible object point can take
        its label.
    clutter_spacing : float, optional
        Sampling step of floor and walls, meters.
    workers : int, optional
        Threads rendering cameras; views merge in camera order.

    Returns
    -------
    G : PointCloud
        Unlabeled union of the views: object points (placement order)
        followed by clutter points.
    S : PointCloud
        Same points with class labels.
    truth : GroundTruth
        One entry per placement; centroids of the complete placed models.

    Raises
    ------
    KeyError
        If a placement names a model missing from ``db``.
    """
    background_class = int(resolve_param("evalkit.background_class", background_class))
    bleed_radius = float(resolve_param("evalkit.bleed_radius", bleed_radius))
    workers = resolve_param("pipeline.workers", workers)
    missing = sorted({p.model_id for p in spec.placements if p.model_id not in db})
    if missing:
        raise KeyError(f"models not in database: {', '.join(missing)}")

    clouds, classes, truth = [], [], []
    for placement in spec.placements:
        entry = db[placement.model_id]
        placed = apply_transform(entry.cloud, placement.transform)
        clouds.append(placed.points)
        classes.append(np.full(len(placed), entry.class_id, dtype=np.int64))
        truth.append(TruthEntry(entry.class_id, Point3(*placed.centroid()), entry.model_id, placement))

    clutter = room_clutter(spec.room, clutter_spacing) if spec.room is not None else np.zeros((0, 3))
    points = np.concatenate(clouds + [clutter]) if clouds else clutter
    labels = np.concatenate(classes + [np.full(len(clutter), background_class, dtype=np.int64)])
    is_object = np.arange(len(points)) < len(points) - len(clutter)
    if len(points) == 0:
        raise EmptyCloudError("scene has neither placements nor a room")

    views = Parallel(n_jobs=workers if workers else -1, prefer="threads")(
        delayed(visible_indices)(points, camera, spec.image_res, spec.fov)
        for camera in spec.cameras
    )
    # ray origin of each point: first camera that sees it
    origin_of = np.full(len(points), -1, dtype=np.int64)
    for k, view in enumerate(views):
        unseen = view[origin_of[view] < 0]
        origin_of[unseen] = k
    visible = np.flatnonzero(origin_of >= 0)
    if len(visible) == 0:
        raise EmptyCloudError("no scene point is visible from any camera")

    rng = np.random.default_rng(spec.seed)
    positions = np.asarray([c.position for c in spec.cameras])
    noisy = _ray_noise(points[visible], positions[origin_of[visible]], spec.noise_sigma, rng)

    scene_labels = labels[visible].copy()
    visible_object = visible[is_object[visible]]
    clutter_rows = np.flatnonzero(~is_object[visible])
    bled = 0
    if len(visible_object) and len(clutter_rows) and spec.label_bleed > 0:
        distances, nearest_idx = NeighborIndex(points[visible_object]).query(points[visible[clutter_rows]])
        draws = rng.random(len(clutter_rows))
        flip = (distances <= bleed_radius) & (draws < spec.label_bleed)
        scene_labels[clutter_rows[flip]] = labels[visible_object[nearest_idx[flip]]]
        bled = int(flip.sum())

    logger.info(
        "synthesized scene: %d placements, %d cameras, %d of %d points visible, %d bled labels",
        len(spec.placements), len(spec.cameras), len(visible), len(points), bled,
    )
    G = PointCloud(noisy)
    S = PointCloud(noisy, labels=scene_labels)
    return G, S, GroundTruth(tuple(truth))
