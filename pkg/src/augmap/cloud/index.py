"""
Exact nearest-neighbor search over an immutable point set.

The index wraps :class:`scipy.spatial.cKDTree` and adds a deterministic
tie-break: among equidistant neighbors the lowest point index wins, so the
answers are identical to an exhaustive search.
"""

from typing import List, Tuple, Union

import numpy as np
from scipy.spatial import cKDTree

from augmap.cloud.core import PointCloud, Point3
from augmap.utils.errors import EmptyCloudError
from augmap.utils.validation import validate_points

# Relative slack used to detect candidate ties before exact resolution
_TIE_SLACK = 1e-9


def _row_distances(points: np.ndarray, queries: np.ndarray) -> np.ndarray:
    diff = points - queries
    return np.sqrt((diff * diff).sum(axis=1))


class NeighborIndex:
    """
    k-d tree over a fixed set of points.

    Parameters
    ----------
    points : ndarray or PointCloud
        Indexed points, shape (N, 3), N >= 1.

    Notes
    -----
    The index never changes after construction; concurrent read-only
    queries are safe.

    Examples
    --------
    >>> index = NeighborIndex(np.zeros((1, 3)))
    >>> index.nearest((1.0, 1.0, 1.0))
    (0, 1.7320508075688772)
    """

    def __init__(self, points: Union[np.ndarray, PointCloud]):
        if isinstance(points, PointCloud):
            points = points.points
        points = validate_points(points)
        if len(points) == 0:
            raise EmptyCloudError("Cannot build a neighbor index over an empty cloud")
        self._points = np.array(points, dtype=np.float64)
        self._points.setflags(write=False)
        self._tree = cKDTree(self._points)

    def __len__(self) -> int:
        return len(self._points)

    @property
    def points(self) -> np.ndarray:
        return self._points

    def _resolve_ties(self, query: np.ndarray, radius: float) -> Tuple[int, float]:
        candidates = np.asarray(
            self._tree.query_ball_point(query, radius * (1 + _TIE_SLACK) + 1e-12),
            dtype=np.int64,
        )
        candidates.sort()
        distances = _row_distances(self._points[candidates], query)
        best = int(np.argmin(distances))  # first occurrence = lowest index
        return int(candidates[best]), float(distances[best])

    def query(self, queries: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """
        Nearest indexed point for each query.

        Parameters
        ----------
        queries : ndarray
            Query points, shape (M, 3).

        Returns
        -------
        distances : ndarray
            Shape (M,), meters.
        indices : ndarray
            Shape (M,), int64 indices into the indexed points.
        """
        queries = validate_points(queries, name="queries")
        if len(queries) == 0:
            return np.zeros(0), np.zeros(0, dtype=np.int64)

        k = 2 if len(self._points) > 1 else 1
        tree_dist, tree_idx = self._tree.query(queries, k=k)
        if k == 1:
            tree_dist = tree_dist[:, None]
            tree_idx = tree_idx[:, None]
        indices = tree_idx[:, 0].astype(np.int64)

        if k == 2:
            near_tie = tree_dist[:, 1] <= tree_dist[:, 0] * (1 + _TIE_SLACK) + 1e-15
            for row in np.flatnonzero(near_tie):
                indices[row], _ = self._resolve_ties(queries[row], tree_dist[row, 0])

        distances = _row_distances(self._points[indices], queries)
        return distances, indices

    def nearest(self, q: Union[Point3, np.ndarray, Tuple[float, float, float]]) -> Tuple[int, float]:
        """
        Exact nearest neighbor of a single query point.

        Returns
        -------
        (int, float)
            Point index (lowest among equidistant points) and distance.
        """
        distances, indices = self.query(np.asarray(q, dtype=np.float64).reshape(1, 3))
        return int(indices[0]), float(distances[0])

    def within(self, queries: np.ndarray, radius: float) -> List[np.ndarray]:
        """
        Indices of indexed points within ``radius`` of each query, ascending.
        """
        queries = validate_points(queries, name="queries")
        neighborhoods = self._tree.query_ball_point(queries, radius, return_sorted=True)
        return [np.asarray(n, dtype=np.int64) for n in neighborhoods]

    def pairs(self, radius: float) -> np.ndarray:
        """
        All index pairs (i < j) of indexed points closer than ``radius``.
        """
        return self._tree.query_pairs(radius, output_type="ndarray")


def build_index(cloud: PointCloud) -> NeighborIndex:
    """
    Build a :class:`NeighborIndex` over a cloud.

    Raises
    ------
    EmptyCloudError
        If the cloud has no points.
    """
    return NeighborIndex(cloud)


def nearest(index: NeighborIndex, q: Union[Point3, np.ndarray]) -> Tuple[int, float]:
    """
    Exact nearest neighbor of ``q``; ties resolve to the lowest index.
    """
    return index.nearest(q)
