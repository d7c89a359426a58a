"""
Local and global geometric statistics of point clouds.

This module computes per-point normals from neighborhood covariances, the
covariance summary (centroid, sorted eigenvalues and eigenvectors) of a
whole cloud, and voxel-grid downsampling.
"""

from dataclasses import dataclass
from typing import Tuple
import logging

import numpy as np

from augmap.cloud.core import PointCloud, Point3
from augmap.cloud.index import NeighborIndex
from augmap.utils.errors import EmptyCloudError
from augmap.utils.validation import validate_positive

logger = logging.getLogger(__name__)

MIN_NEIGHBORS = 3
_SIGN_TOLERANCE = 1e-12


def orient_normals(normals: np.ndarray) -> np.ndarray:
    """
    Flip normals to a canonical sign.

    The z-component is made non-negative; when it is zero the x-component,
    and when that is zero too the y-component. Marker rows (0, 0, 0) are
    left alone.

    Parameters
    ----------
    normals : ndarray
        Shape (N, 3).

    Returns
    -------
    ndarray
        Oriented copy.
    """
    normals = np.array(normals, dtype=np.float64, copy=True)
    key = normals[:, 2].copy()
    for axis in (0, 1):
        undecided = np.abs(key) <= _SIGN_TOLERANCE
        key[undecided] = normals[undecided, axis]
    flip = key < -_SIGN_TOLERANCE
    normals[flip] *= -1.0
    return normals


def estimate_normals(cloud: PointCloud, radius: float) -> PointCloud:
    """
    Estimate one unit normal per point from its neighborhood.

    The normal is the eigenvector of the smallest eigenvalue of the
    covariance of all points within ``radius`` (the point itself included),
    oriented by :func:`orient_normals`. Points with fewer than 3 neighbors
    get the marker normal (0, 0, 0).

    Parameters
    ----------
    cloud : PointCloud
        Input cloud with at least 3 points.
    radius : float
        Neighborhood radius in meters, > 0.

    Returns
    -------
    PointCloud
        Copy of ``cloud`` carrying the estimated normals.

    Raises
    ------
    ValueError
        If ``radius`` is not positive.
    EmptyCloudError
        If the cloud has fewer than 3 points.

    Examples
    --------
    >>> xy = np.random.default_rng(0).uniform(-1, 1, (100, 2))
    >>> plane = PointCloud(np.column_stack([xy, np.zeros(100)]))
    >>> estimate_normals(plane, 0.2).normals[0]
    array([0., 0., 1.])
    """
    validate_positive(radius, name="radius")
    if len(cloud) < MIN_NEIGHBORS:
        raise EmptyCloudError(
            f"estimate_normals requires at least {MIN_NEIGHBORS} points, got {len(cloud)}"
        )

    points = cloud.points
    n = len(points)
    index = NeighborIndex(points)
    neighborhoods = index.within(points, radius)
    counts = np.fromiter((len(nb) for nb in neighborhoods), dtype=np.int64, count=n)
    rows = np.repeat(np.arange(n), counts)
    cols = np.concatenate(neighborhoods) if n else np.zeros(0, dtype=np.int64)

    # Offsets relative to the query point keep the moments small
    offsets = points[cols] - points[rows]
    safe_counts = np.maximum(counts, 1).astype(np.float64)
    mean = np.column_stack(
        [np.bincount(rows, weights=offsets[:, a], minlength=n) for a in range(3)]
    ) / safe_counts[:, None]
    second = np.empty((n, 3, 3))
    for a in range(3):
        for b in range(a, 3):
            moment = np.bincount(rows, weights=offsets[:, a] * offsets[:, b], minlength=n)
            second[:, a, b] = second[:, b, a] = moment / safe_counts
    covariance = second - mean[:, :, None] * mean[:, None, :]

    _, eigenvectors = np.linalg.eigh(covariance)
    normals = eigenvectors[:, :, 0]
    normals /= np.linalg.norm(normals, axis=1, keepdims=True)
    normals = orient_normals(normals)
    normals[counts < MIN_NEIGHBORS] = 0.0

    logger.debug(
        "normals at r=%.3f: %d points, %d markers", radius, n,
        int(np.sum(counts < MIN_NEIGHBORS)),
    )
    return cloud.with_normals(normals)


@dataclass(frozen=True)
class CovarianceSummary:
    """
    Centroid and eigen-decomposition of a cloud's coordinate covariance.

    Attributes
    ----------
    centroid : Point3
        Mean point.
    eigenvalues : tuple of float
        (λ1, λ2, λ3), descending, non-negative, m².
    eigenvectors : ndarray
        3x3 matrix whose columns are the matching orthonormal eigenvectors.
    """

    centroid: Point3
    eigenvalues: Tuple[float, float, float]
    eigenvectors: np.ndarray

    @property
    def planarity_ratio(self) -> float:
        """λ3 / λ1, 0 when λ1 is 0."""
        l1, _, l3 = self.eigenvalues
        return l3 / l1 if l1 > 0 else 0.0


def covariance_summary(cloud: PointCloud) -> CovarianceSummary:
    """
    Population covariance (divided by N) of a cloud about its centroid.

    Parameters
    ----------
    cloud : PointCloud
        At least 3 points.

    Returns
    -------
    CovarianceSummary
        Eigenvalues sorted descending; tiny negative round-off clipped to 0.

    Raises
    ------
    EmptyCloudError
        If the cloud has fewer than 3 points.
    """
    if len(cloud) < 3:
        raise EmptyCloudError(
            f"covariance_summary requires at least 3 points, got {len(cloud)}"
        )
    points = cloud.points
    centroid = points.mean(axis=0)
    offsets = points - centroid
    covariance = offsets.T @ offsets / len(points)

    eigenvalues, eigenvectors = np.linalg.eigh(covariance)
    order = np.argsort(eigenvalues)[::-1]
    eigenvalues = np.clip(eigenvalues[order], 0.0, None)
    eigenvectors = eigenvectors[:, order]
    eigenvectors.setflags(write=False)

    return CovarianceSummary(
        centroid=Point3(*centroid.tolist()),
        eigenvalues=tuple(float(v) for v in eigenvalues),
        eigenvectors=eigenvectors,
    )


def voxel_downsample(cloud: PointCloud, leaf: float) -> PointCloud:
    """
    Replace the points of each occupied voxel by their centroid.

    The voxel of ``p`` is ``floor(p / leaf)`` per axis. Output points are
    ordered by lexicographic voxel coordinate. Labels take the majority
    class of the voxel (ties: lowest class id); normals are averaged and
    renormalised; colors are averaged.

    Parameters
    ----------
    cloud : PointCloud
        Input cloud.
    leaf : float
        Voxel edge length in meters, > 0.

    Returns
    -------
    PointCloud
        One point per occupied voxel.

    Raises
    ------
    ValueError
        If ``leaf`` is not positive.
    """
    validate_positive(leaf, name="leaf")
    if cloud.is_empty:
        return cloud

    keys = np.floor(cloud.points / leaf).astype(np.int64)
    # np.unique over rows sorts lexicographically by (kx, ky, kz)
    _, inverse, counts = np.unique(keys, axis=0, return_inverse=True, return_counts=True)
    inverse = inverse.reshape(-1)
    n_voxels = len(counts)

    def voxel_mean(values: np.ndarray) -> np.ndarray:
        return np.column_stack(
            [np.bincount(inverse, weights=values[:, a], minlength=n_voxels)
             for a in range(values.shape[1])]
        ) / counts[:, None]

    points = voxel_mean(cloud.points)

    normals = None
    if cloud.normals is not None:
        normals = voxel_mean(cloud.normals)
        norms = np.linalg.norm(normals, axis=1, keepdims=True)
        normals = np.divide(normals, norms, out=np.zeros_like(normals), where=norms > 1e-12)

    labels = None
    if cloud.labels is not None:
        pairs, pair_counts = np.unique(
            np.column_stack([inverse, cloud.labels]), axis=0, return_counts=True
        )
        # Sort by voxel, then descending count, then ascending label
        order = np.lexsort((pairs[:, 1], -pair_counts, pairs[:, 0]))
        pairs = pairs[order]
        first = np.ones(len(pairs), dtype=bool)
        first[1:] = pairs[1:, 0] != pairs[:-1, 0]
        labels = pairs[first, 1]

    colors = None
    if cloud.colors is not None:
        colors = np.rint(voxel_mean(cloud.colors.astype(np.float64))).astype(np.uint8)

    return PointCloud(points, normals, labels, colors)
