"""
Core point-cloud types.

This module defines the immutable containers shared by every stage of the
pipeline: 3D points, point clouds with optional per-point normals, labels
and colors, and the grounded (yaw + translation + uniform scale) transform.
"""

from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence, Tuple, Union
import math

import numpy as np

from augmap.utils.errors import EmptyCloudError
from augmap.utils.validation import validate_points, validate_same_length

TWO_PI = 2.0 * math.pi
NORMAL_TOLERANCE = 1e-6


class Point3(NamedTuple):
    """A 3D coordinate in meters."""

    x: float
    y: float
    z: float


def make_point(x: float, y: float, z: float) -> Point3:
    """
    Build a :class:`Point3`, rejecting non-finite components.

    Raises
    ------
    ValueError
        If any component is NaN or infinite.
    """
    values = (float(x), float(y), float(z))
    if not all(math.isfinite(v) for v in values):
        raise ValueError(f"Point3 components must be finite, got {values}")
    return Point3(*values)


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.ascontiguousarray(array)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class PointCloud:
    """
    Ordered 3D points with optional normals, class labels and colors.

    Attributes
    ----------
    points : ndarray
        float64 array of shape (N, 3), meters.
    normals : ndarray, optional
        float64 array of shape (N, 3). Each row is a unit vector, or the
        marker (0, 0, 0) for points whose normal could not be estimated.
    labels : ndarray, optional
        int64 array of shape (N,), semantic class ids.
    colors : ndarray, optional
        uint8 array of shape (N, 3), passed through untouched.

    Notes
    -----
    All arrays are read-only; operations return new clouds.
    """

    points: np.ndarray
    normals: Optional[np.ndarray] = None
    labels: Optional[np.ndarray] = None
    colors: Optional[np.ndarray] = None

    def __post_init__(self):
        points = validate_points(self.points)
        object.__setattr__(self, "points", _frozen(points))
        n = len(points)

        if self.normals is not None:
            normals = np.asarray(self.normals, dtype=np.float64).reshape(-1, 3)
            validate_same_length(normals, n, name="normals")
            if not np.all(np.isfinite(normals)):
                raise ValueError("normals contain non-finite values")
            norms = np.linalg.norm(normals, axis=1)
            bad = ~((np.abs(norms - 1.0) <= NORMAL_TOLERANCE) | (norms == 0.0))
            if np.any(bad):
                raise ValueError(
                    f"normals must have unit norm, row {int(np.flatnonzero(bad)[0])} "
                    f"has norm {norms[bad][0]:.9f}"
                )
            object.__setattr__(self, "normals", _frozen(normals))

        if self.labels is not None:
            labels = np.asarray(self.labels)
            if labels.size and not np.issubdtype(labels.dtype, np.integer):
                if not np.all(np.equal(np.mod(labels, 1), 0)):
                    raise ValueError("labels must be integers")
            labels = labels.astype(np.int64).reshape(-1)
            validate_same_length(labels, n, name="labels")
            if np.any(labels < 0):
                raise ValueError("labels must be non-negative class ids")
            object.__setattr__(self, "labels", _frozen(labels))

        if self.colors is not None:
            colors = np.asarray(self.colors).reshape(-1, 3).astype(np.uint8)
            validate_same_length(colors, n, name="colors")
            object.__setattr__(self, "colors", _frozen(colors))

    def __len__(self) -> int:
        return len(self.points)

    @property
    def is_empty(self) -> bool:
        return len(self.points) == 0

    @property
    def has_normals(self) -> bool:
        return self.normals is not None

    @property
    def has_labels(self) -> bool:
        return self.labels is not None

    def centroid(self) -> np.ndarray:
        """Mean of the points, shape (3,)."""
        if self.is_empty:
            raise ValueError("centroid of an empty cloud is undefined")
        return self.points.mean(axis=0)

    def bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        """Axis-aligned bounding box as (min_xyz, max_xyz)."""
        if self.is_empty:
            raise ValueError("bounds of an empty cloud are undefined")
        return self.points.min(axis=0), self.points.max(axis=0)

    def subset(self, selector: Union[np.ndarray, Sequence[int]]) -> "PointCloud":
        """
        Select points by boolean mask or index array, keeping the given order.
        """
        selector = np.asarray(selector)
        if selector.dtype != bool:
            selector = selector.astype(np.int64)
        return PointCloud(
            points=self.points[selector],
            normals=None if self.normals is None else self.normals[selector],
            labels=None if self.labels is None else self.labels[selector],
            colors=None if self.colors is None else self.colors[selector],
        )

    def with_normals(self, normals: Optional[np.ndarray]) -> "PointCloud":
        return PointCloud(self.points, normals, self.labels, self.colors)

    def with_labels(self, labels: Optional[np.ndarray]) -> "PointCloud":
        return PointCloud(self.points, self.normals, labels, self.colors)

    def with_points(self, points: np.ndarray) -> "PointCloud":
        return PointCloud(points, self.normals, self.labels, self.colors)


def empty_cloud() -> PointCloud:
    """A cloud without points."""
    return PointCloud(np.zeros((0, 3)))


def concatenate(clouds: Sequence[PointCloud]) -> PointCloud:
    """
    Stack clouds in order.

    Optional arrays are kept only when every input carries them.
    """
    clouds = list(clouds)
    if not clouds:
        return empty_cloud()

    def stack(attr):
        arrays = [getattr(c, attr) for c in clouds]
        if any(a is None for a in arrays):
            return None
        return np.concatenate(arrays, axis=0)

    return PointCloud(
        points=np.concatenate([c.points for c in clouds], axis=0),
        normals=stack("normals"),
        labels=stack("labels"),
        colors=stack("colors"),
    )


def _rotation_z(yaw: float) -> np.ndarray:
    c, s = math.cos(yaw), math.sin(yaw)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def wrap_angle(angle: float) -> float:
    """Map an angle into [0, 2π)."""
    wrapped = math.fmod(angle, TWO_PI)
    if wrapped < 0:
        wrapped += TWO_PI
    if wrapped >= TWO_PI:
        wrapped = 0.0
    return wrapped


def angle_difference(a: float, b: float) -> float:
    """Absolute difference of two angles, in [0, π]."""
    d = wrap_angle(a - b)
    return min(d, TWO_PI - d)


@dataclass(frozen=True)
class GroundedTransform:
    """
    Rotation about z, uniform scale and translation.

    A point ``p`` maps to ``R_z(yaw) @ (scale * p) + translation``.

    Attributes
    ----------
    yaw : float
        Radians, normalised into [0, 2π).
    translation : tuple of float
        (tx, ty, tz) in meters.
    scale : float
        Strictly positive uniform factor.

    Examples
    --------
    >>> T = GroundedTransform(yaw=math.pi, translation=(0, 0, 0))
    >>> T.apply(np.array([[1.0, 0.0, 0.0]])).round(12)
    array([[-1.,  0.,  0.]])
    """

    yaw: float = 0.0
    translation: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    scale: float = 1.0

    def __post_init__(self):
        yaw = float(self.yaw)
        scale = float(self.scale)
        translation = tuple(float(v) for v in np.asarray(self.translation).reshape(3))
        if not math.isfinite(yaw) or not all(math.isfinite(v) for v in translation):
            raise ValueError("transform components must be finite")
        if not math.isfinite(scale) or scale <= 0:
            raise ValueError(f"scale must be strictly positive, got {scale}")
        object.__setattr__(self, "yaw", wrap_angle(yaw))
        object.__setattr__(self, "translation", translation)
        object.__setattr__(self, "scale", scale)

    @classmethod
    def identity(cls) -> "GroundedTransform":
        return cls()

    @property
    def rotation(self) -> np.ndarray:
        """3x3 rotation matrix about z."""
        return _rotation_z(self.yaw)

    def matrix(self) -> np.ndarray:
        """4x4 homogeneous matrix."""
        m = np.eye(4)
        m[:3, :3] = self.rotation * self.scale
        m[:3, 3] = self.translation
        return m

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Transform an (N, 3) array of points."""
        points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        return (self.scale * points) @ self.rotation.T + np.asarray(self.translation)

    def inverse(self) -> "GroundedTransform":
        """
        The transform undoing this one.

        ``q = R(s p) + t``  gives  ``p = R(-yaw) ((1/s) q) - R(-yaw) t / s``.
        """
        inv_rotation = _rotation_z(-self.yaw)
        translation = -(inv_rotation @ np.asarray(self.translation)) / self.scale
        return GroundedTransform(-self.yaw, tuple(translation), 1.0 / self.scale)

    def compose(self, other: "GroundedTransform") -> "GroundedTransform":
        """
        ``self ∘ other``: apply ``other`` first, then ``self``.
        """
        translation = (
            self.scale * (self.rotation @ np.asarray(other.translation))
            + np.asarray(self.translation)
        )
        return GroundedTransform(
            self.yaw + other.yaw, tuple(translation), self.scale * other.scale
        )

    def to_dict(self) -> dict:
        return {
            "yaw": self.yaw,
            "translation": list(self.translation),
            "scale": self.scale,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GroundedTransform":
        return cls(data["yaw"], tuple(data["translation"]), data["scale"])


def apply_transform(cloud: PointCloud, T: GroundedTransform) -> PointCloud:
    """
    Apply a grounded transform to a cloud.

    Points map to ``R_z(yaw) (scale p) + translation``; normals are rotated
    (not scaled) and renormalised, marker normals stay (0, 0, 0).

    Parameters
    ----------
    cloud : PointCloud
        Input cloud (left untouched).
    T : GroundedTransform
        Transform to apply.

    Returns
    -------
    PointCloud
        Transformed copy carrying the same labels and colors.
    """
    points = T.apply(cloud.points)
    normals = None
    if cloud.normals is not None:
        normals = cloud.normals @ T.rotation.T
        norms = np.linalg.norm(normals, axis=1, keepdims=True)
        normals = np.divide(normals, norms, out=np.zeros_like(normals), where=norms > 0)
    return PointCloud(points, normals, cloud.labels, cloud.colors)


def farthest_point_distance(cloud: PointCloud) -> float:
    """
    Distance of the farthest point to the cloud centroid (λ).

    Raises
    ------
    EmptyCloudError
        If the cloud has no points.

    Examples
    --------
    >>> corners = np.array([[x, y, z] for x in (-1, 1) for y in (-1, 1) for z in (-1, 1)])
    >>> round(farthest_point_distance(PointCloud(corners)), 12) == round(math.sqrt(3), 12)
    True
    """
    if cloud.is_empty:
        raise EmptyCloudError("farthest_point_distance requires a non-empty cloud")
    offsets = cloud.points - cloud.points.mean(axis=0)
    return float(np.sqrt((offsets * offsets).sum(axis=1)).max())
