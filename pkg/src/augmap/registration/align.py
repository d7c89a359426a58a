"""
Model-to-partial alignment.

A database model (canonical frame: min z = 0, xy-centroid at the origin) is
aligned to a partial view brought into its own local frame. The pose space
is a yaw about z, a translation and a uniform scale. Alignment runs in two
stages: a sweep over a lattice of yaws picks the best coarse pose, then an
ICP loop constrained to yaw and translation refines it.

The model distance δ is the mean distance from each partial point to its
nearest transformed model point. It is directed partial → model so that
the parts of the model the sensor never saw are not penalized.
"""

from dataclasses import dataclass
from typing import List, Optional, Tuple
import logging
import math

import numpy as np

from augmap.cloud.core import (
    GroundedTransform,
    PointCloud,
    farthest_point_distance,
)
from augmap.cloud.index import NeighborIndex
from augmap.config.rcparams import resolve_param
from augmap.registration.params import RegistrationParams, normalize_grounding
from augmap.utils.errors import DegenerateGeometryError, EmptyCloudError, RegistrationError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Alignment:
    """
    Result of aligning a model to a partial view.

    Attributes
    ----------
    transform : GroundedTransform
        Model canonical frame → partial local frame.
    delta : float
        Final model distance δ in meters.
    residual_history : tuple of float
        δ before the first update and after every accepted update.
    iterations : int
        ICP iterations run.
    """

    transform: GroundedTransform
    delta: float
    residual_history: Tuple[float, ...]
    iterations: int

    def __post_init__(self):
        history = tuple(float(r) for r in self.residual_history)
        object.__setattr__(self, "residual_history", history)
        if history and abs(history[-1] - self.delta) > 1e-12:
            raise ValueError("delta must equal the last residual")

    def to_dict(self) -> dict:
        return {
            "transform": self.transform.to_dict(),
            "delta": self.delta,
            "residual_history": list(self.residual_history),
            "iterations": self.iterations,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Alignment":
        return cls(
            transform=GroundedTransform.from_dict(data["transform"]),
            delta=data["delta"],
            residual_history=tuple(data["residual_history"]),
            iterations=data["iterations"],
        )


def _as_cloud(value) -> PointCloud:
    # Clusters carry their points in ``.cloud``
    return value.cloud if hasattr(value, "cloud") else value


# =============================================================================
# Frames and scale
# =============================================================================

def normalize_partial(cluster, grounding: Optional[str] = None) -> Tuple[PointCloud, GroundedTransform]:
    """
    Move a partial view into its local frame.

    The xy-centroid goes to the origin. In ``partial_extent`` mode the lowest
    point goes to z = 0; in ``floor`` mode z is kept (height above the floor
    plane z = 0).

    Parameters
    ----------
    cluster : Cluster or PointCloud
        Partial view in the world frame.
    grounding : str, optional
        Defaults to ``rcParams["registration.grounding"]``.

    Returns
    -------
    local : PointCloud
        The translated partial.
    to_world : GroundedTransform
        Local → world transform (a pure translation).

    Examples
    --------
    >>> cloud = PointCloud([[5.0, 3.0, 0.25], [5.0, 3.0, 0.75]])
    >>> local, to_world = normalize_partial(cloud, "partial_extent")
    >>> local.points.tolist()
    [[0.0, 0.0, 0.0], [0.0, 0.0, 0.5]]
    >>> to_world.translation
    (5.0, 3.0, 0.25)
    """
    grounding = normalize_grounding(resolve_param("registration.grounding", grounding))
    cloud = _as_cloud(cluster)
    if cloud.is_empty:
        raise EmptyCloudError("cannot normalize an empty partial")
    cx, cy = cloud.points[:, :2].mean(axis=0)
    cz = float(cloud.points[:, 2].min()) if grounding == "partial_extent" else 0.0
    to_world = GroundedTransform(0.0, (cx, cy, cz), 1.0)
    local = cloud.with_points(cloud.points - np.array([cx, cy, cz]))
    return local, to_world


def _clamp(value: float, low: float, high: float) -> float:
    return float(min(max(value, low), high))


def initial_scale(
    partial: PointCloud,
    model: PointCloud,
    scale_min: float = 0.5,
    scale_max: float = 2.0,
) -> float:
    """
    Scale from the ratio of farthest-point distances, ``λ(partial) / λ(model)``.

    The ratio is clamped to ``[scale_min, scale_max]``.

    Raises
    ------
    DegenerateGeometryError
        If the model has λ = 0.
    """
    model_lambda = farthest_point_distance(model)
    if model_lambda == 0:
        raise DegenerateGeometryError("model has zero farthest-point distance")
    return _clamp(farthest_point_distance(partial) / model_lambda, scale_min, scale_max)


def height_scale(
    partial: PointCloud,
    model: PointCloud,
    scale_min: float = 0.5,
    scale_max: float = 2.0,
) -> float:
    """
    Scale from the ratio of z-extents. Side crops leave it unchanged.

    Raises
    ------
    DegenerateGeometryError
        If the model is flat in z.
    """
    if partial.is_empty or model.is_empty:
        raise EmptyCloudError("height_scale requires non-empty clouds")
    model_height = float(np.ptp(model.points[:, 2]))
    if model_height == 0:
        raise DegenerateGeometryError("model has zero height")
    return _clamp(float(np.ptp(partial.points[:, 2])) / model_height, scale_min, scale_max)


def estimate_scale(partial: PointCloud, model: PointCloud, params: RegistrationParams) -> float:
    """Scale hypothesis under ``params.scale_policy``."""
    if params.scale_policy == "fixed":
        return 1.0
    if params.scale_policy == "height":
        return height_scale(partial, model, params.scale_min, params.scale_max)
    return initial_scale(partial, model, params.scale_min, params.scale_max)


# =============================================================================
# Distances
# =============================================================================

def model_distance(model: PointCloud, partial: PointCloud, T: GroundedTransform) -> float:
    """
    Mean distance from each partial point to the nearest transformed model point.

    ``δ = (1/|partial|) Σ_p min_q |p − T(q)|``

    Parameters
    ----------
    model : PointCloud
        Model in its canonical frame.
    partial : PointCloud
        Partial view in its local frame.
    T : GroundedTransform
        Model → partial transform.

    Returns
    -------
    float
        δ in meters, ≥ 0.

    Raises
    ------
    EmptyCloudError
        If either cloud is empty.
    """
    if partial.is_empty:
        raise EmptyCloudError("model_distance requires a non-empty partial")
    index = NeighborIndex(T.apply(model.points))
    distances, _ = index.query(partial.points)
    return float(distances.mean())


def _correspondences(
    model_index: NeighborIndex,
    partial_points: np.ndarray,
    T: GroundedTransform,
) -> Tuple[np.ndarray, np.ndarray]:
    # Similarity transforms scale distances uniformly, so the model index is
    # queried with the partial pulled back into the canonical frame.
    distances, indices = model_index.query(T.inverse().apply(partial_points))
    return distances * T.scale, indices


# =============================================================================
# Coarse yaw sweep
# =============================================================================

def yaw_lattice(yaw_samples: int) -> np.ndarray:
    """Yaw hypotheses ``2πk / yaw_samples`` for k = 0 .. yaw_samples − 1."""
    return 2.0 * math.pi * np.arange(yaw_samples) / yaw_samples


def centroid_aligned(model: PointCloud, partial: PointCloud, yaw: float, scale: float) -> GroundedTransform:
    """
    Transform with the given yaw and scale that maps the model xy-centroid
    onto the partial xy-centroid. The z offset is 0: both clouds stand on
    z = 0 in their local frames.
    """
    rotated = GroundedTransform(yaw, (0.0, 0.0, 0.0), scale).apply(
        model.points.mean(axis=0, keepdims=True)
    )[0]
    target = partial.points.mean(axis=0)
    return GroundedTransform(yaw, (target[0] - rotated[0], target[1] - rotated[1], 0.0), scale)


def coarse_scores(
    model: PointCloud,
    partial: PointCloud,
    params: Optional[RegistrationParams] = None,
    model_index: Optional[NeighborIndex] = None,
    scale: Optional[float] = None,
) -> Tuple[List[GroundedTransform], np.ndarray]:
    """
    δ of every yaw hypothesis of the lattice.

    Returns
    -------
    transforms : list of GroundedTransform
        One per lattice yaw, ascending.
    deltas : ndarray
        Matching δ values.
    """
    params = params if params is not None else RegistrationParams.from_rcparams()
    if model.is_empty or partial.is_empty:
        raise EmptyCloudError("coarse alignment requires non-empty clouds")
    model_index = model_index if model_index is not None else NeighborIndex(model)
    scale = estimate_scale(partial, model, params) if scale is None else scale

    transforms = [
        centroid_aligned(model, partial, yaw, scale) for yaw in yaw_lattice(params.yaw_samples)
    ]
    deltas = np.array(
        [_correspondences(model_index, partial.points, T)[0].mean() for T in transforms]
    )
    return transforms, deltas


def select_smallest_yaw(deltas: np.ndarray, tie_tolerance: float) -> int:
    """Index of the minimum δ; values within ``tie_tolerance`` of it tie and the first wins."""
    best = float(np.min(deltas))
    return int(np.flatnonzero(deltas <= best + tie_tolerance)[0])


def coarse_align(
    model: PointCloud,
    partial: PointCloud,
    params: Optional[RegistrationParams] = None,
    model_index: Optional[NeighborIndex] = None,
    scale: Optional[float] = None,
) -> GroundedTransform:
    """
    Best transform over the yaw lattice.

    Every yaw ``2πk / yaw_samples`` is tried with the estimated scale and the
    translation aligning the xy-centroids; the transform with minimum δ is
    returned, ties going to the smallest yaw.

    Parameters
    ----------
    model : PointCloud
        Model in its canonical frame.
    partial : PointCloud
        Partial in its local frame (see :func:`normalize_partial`).
    params : RegistrationParams, optional
        Defaults from ``rcParams``.
    model_index : NeighborIndex, optional
        Prebuilt index over the model points.
    scale : float, optional
        Fixed scale overriding ``params.scale_policy``.

    Returns
    -------
    GroundedTransform
        Model → partial transform.
    """
    params = params if params is not None else RegistrationParams.from_rcparams()
    transforms, deltas = coarse_scores(model, partial, params, model_index, scale)
    best = select_smallest_yaw(deltas, params.tie_tolerance)
    logger.debug("coarse yaw %.1f deg, delta %.5f", math.degrees(transforms[best].yaw), deltas[best])
    return transforms[best]


# =============================================================================
# ICP refinement
# =============================================================================

def _procrustes_update(
    source: np.ndarray,
    target: np.ndarray,
    scale: float,
) -> GroundedTransform:
    """
    Closed-form yaw and translation mapping ``scale * source`` onto ``target``.

    Yaw comes from the 2D Procrustes problem on xy; the translation is the
    difference of centroids, z included.
    """
    scaled = scale * source
    src_mean = scaled.mean(axis=0)
    tgt_mean = target.mean(axis=0)
    src = scaled[:, :2] - src_mean[:2]
    tgt = target[:, :2] - tgt_mean[:2]
    sin_sum = float(np.sum(src[:, 0] * tgt[:, 1] - src[:, 1] * tgt[:, 0]))
    cos_sum = float(np.sum(src[:, 0] * tgt[:, 0] + src[:, 1] * tgt[:, 1]))
    yaw = math.atan2(sin_sum, cos_sum) if (sin_sum or cos_sum) else 0.0

    c, s = math.cos(yaw), math.sin(yaw)
    rotated_mean = np.array(
        [c * src_mean[0] - s * src_mean[1], s * src_mean[0] + c * src_mean[1], src_mean[2]]
    )
    return GroundedTransform(yaw, tuple(tgt_mean - rotated_mean), scale)


def icp_refine(
    model: PointCloud,
    partial: PointCloud,
    T0: GroundedTransform,
    params: Optional[RegistrationParams] = None,
    model_index: Optional[NeighborIndex] = None,
) -> Alignment:
    """
    Refine yaw and translation by iterative closest points, scale fixed.

    Each iteration pairs every partial point with its nearest transformed
    model point, ignores pairs farther than ``outlier_factor`` times the
    median pair distance, and solves yaw and translation in closed form on
    the remaining pairs. An update is kept only if δ (over all partial
    points) does not grow. The loop stops when δ improves by less than
    ``convergence_tol`` or after ``max_iterations``.

    Parameters
    ----------
    model : PointCloud
        Model in its canonical frame.
    partial : PointCloud
        Partial in its local frame.
    T0 : GroundedTransform
        Starting model → partial transform, usually from :func:`coarse_align`.
    params : RegistrationParams, optional
        Defaults from ``rcParams``.
    model_index : NeighborIndex, optional
        Prebuilt index over the model points.

    Returns
    -------
    Alignment
        Refined transform, δ and the residual history.

    Raises
    ------
    RegistrationError
        If the outlier test rejects every correspondence.
    """
    params = params if params is not None else RegistrationParams.from_rcparams()
    if model.is_empty or partial.is_empty:
        raise EmptyCloudError("icp_refine requires non-empty clouds")
    model_index = model_index if model_index is not None else NeighborIndex(model)
    targets = partial.points

    T = T0
    distances, indices = _correspondences(model_index, targets, T)
    residual = float(distances.mean())
    history = [residual]
    iterations = 0

    for _ in range(params.max_iterations):
        inliers = distances <= params.outlier_factor * np.median(distances)
        if not np.any(inliers):
            raise RegistrationError("all correspondences rejected as outliers")

        candidate = _procrustes_update(
            model_index.points[indices[inliers]], targets[inliers], T.scale
        )
        new_distances, new_indices = _correspondences(model_index, targets, candidate)
        new_residual = float(new_distances.mean())
        iterations += 1
        if new_residual > residual:
            break

        improvement = residual - new_residual
        T, distances, indices, residual = candidate, new_distances, new_indices, new_residual
        history.append(residual)
        if improvement < params.convergence_tol:
            break

    logger.debug("icp: %d iterations, delta %.6f -> %.6f", iterations, history[0], residual)
    return Alignment(
        transform=T, delta=residual, residual_history=tuple(history), iterations=iterations
    )


def register(
    model: PointCloud,
    partial: PointCloud,
    params: Optional[RegistrationParams] = None,
    model_index: Optional[NeighborIndex] = None,
    T0: Optional[GroundedTransform] = None,
) -> Alignment:
    """
    Coarse yaw sweep followed by ICP.

    When ``T0`` is given the sweep is skipped and ICP starts from it.
    """
    params = params if params is not None else RegistrationParams.from_rcparams()
    model_index = model_index if model_index is not None else NeighborIndex(model)
    if T0 is None:
        T0 = coarse_align(model, partial, params, model_index)
    return icp_refine(model, partial, T0, params, model_index)

