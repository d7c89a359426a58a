"""
Object-instance extraction from a semantic cloud.

Points of one class are thinned with a difference-of-normals (DoN) test and
grouped by single-linkage euclidean clustering; each resulting cluster is a
partial view of one object.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Union
import logging
import re

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from augmap.cloud.core import PointCloud
from augmap.cloud.features import estimate_normals
from augmap.cloud.index import NeighborIndex
from augmap.cloud.io import load_cloud, save_cloud
from augmap.segmentation.params import SegmentationParams
from augmap.utils.errors import CloudFormatError

logger = logging.getLogger(__name__)

CLUSTER_FILE_PATTERN = re.compile(r"^cluster_(\d+)_(\d+)\.ply$")


@dataclass(frozen=True)
class Cluster:
    """
    One candidate object instance.

    Attributes
    ----------
    cloud : PointCloud
        Cluster points in the world frame, labeled with ``class_id``.
    class_id : int
        Semantic class of every point.
    cluster_id : int
        Unique id within a segmentation run.
    indices : ndarray, optional
        Indices of the points in the semantic cloud they came from.
    """

    cloud: PointCloud
    class_id: int
    cluster_id: int
    indices: Optional[np.ndarray] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.cloud.is_empty:
            raise ValueError("a cluster must contain at least one point")
        labels = self.cloud.labels
        if labels is None:
            labels = np.full(len(self.cloud), self.class_id, dtype=np.int64)
            object.__setattr__(self, "cloud", self.cloud.with_labels(labels))
        elif np.any(labels != self.class_id):
            raise ValueError(
                f"cluster {self.cluster_id}: all points must carry class {self.class_id}"
            )

    def __len__(self) -> int:
        return len(self.cloud)

    @property
    def filename(self) -> str:
        return f"cluster_{self.cluster_id}_{self.class_id}.ply"


def difference_of_normals(cloud: PointCloud, r_small: float, r_large: float) -> np.ndarray:
    """
    Per-point DoN magnitude ``|n_s - n_l| / 2`` at two radii.

    Both normals come from :func:`estimate_normals` and are canonically
    oriented independently, so two nearly horizontal normals can still
    point in opposite directions. ``n_l`` is therefore flipped onto the
    half-space of ``n_s`` before the difference, which bounds the value to
    [0, sqrt(2)/2].

    A point gets NaN when either normal is the marker (fewer than 3
    neighbors within the radius). The small ball lies inside the large
    one, so this happens exactly when ``n_s`` is the marker.
    :func:`extract_instances` keeps NaN points.

    Parameters
    ----------
    cloud : PointCloud
        At least 3 points.
    r_small, r_large : float
        Neighborhood radii in meters.

    Returns
    -------
    ndarray
        Shape (N,).
    """
    n_small = estimate_normals(cloud, r_small).normals
    n_large = estimate_normals(cloud, r_large).normals
    marker = (np.abs(n_small).sum(axis=1) == 0) | (np.abs(n_large).sum(axis=1) == 0)

    sign = np.where((n_small * n_large).sum(axis=1) < 0, -1.0, 1.0)
    don = np.linalg.norm(n_small - sign[:, None] * n_large, axis=1) / 2.0
    don[marker] = np.nan
    return don


def euclidean_clusters(points: np.ndarray, gap: float) -> np.ndarray:
    """
    Single-linkage components: points closer than ``gap`` share a component.

    Returns
    -------
    ndarray
        Component label per point (arbitrary numbering).
    """
    n = len(points)
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    pairs = np.asarray(NeighborIndex(points).pairs(gap), dtype=np.int64).reshape(-1, 2)
    graph = coo_matrix(
        (np.ones(len(pairs), dtype=np.int8), (pairs[:, 0], pairs[:, 1])), shape=(n, n)
    )
    _, components = connected_components(graph, directed=False)
    return components


def extract_instances(
    semantic: PointCloud,
    class_id: int,
    params: Optional[SegmentationParams] = None,
    first_id: int = 0,
) -> List[Cluster]:
    """
    Extract candidate clusters of one class.

    Steps: keep the points labeled ``class_id``; estimate normals at
    ``r_small`` and ``r_large``; keep points whose DoN is at least
    ``don_threshold`` or whose normal could not be estimated (thin
    structures); cluster the survivors with gap ``cluster_gap``; drop
    clusters with fewer than ``min_points`` points.

    Parameters
    ----------
    semantic : PointCloud
        Labeled scene cloud.
    class_id : int
        Target class.
    params : SegmentationParams, optional
        Defaults from ``rcParams``.
    first_id : int, default=0
        Id given to the first (largest) cluster.

    Returns
    -------
    list of Cluster
        Ordered by descending size, then lowest point index; ids are
        consecutive from ``first_id``.

    Raises
    ------
    ValueError
        If the cloud carries no labels.
    """
    params = params if params is not None else SegmentationParams.from_rcparams()
    if semantic.labels is None:
        raise ValueError("extract_instances requires a labeled cloud")

    selected = np.flatnonzero(semantic.labels == class_id)
    if len(selected) == 0:
        return []
    subset = semantic.subset(selected)

    if len(subset) >= 3:
        don = difference_of_normals(subset, params.r_small, params.r_large)
        keep = np.isnan(don) | (don >= params.don_threshold)
    else:
        keep = np.ones(len(subset), dtype=bool)
    survivors = selected[keep]
    logger.debug(
        "class %d: %d labeled points, %d survive DoN >= %.2f",
        class_id, len(selected), len(survivors), params.don_threshold,
    )

    components = euclidean_clusters(semantic.points[survivors], params.cluster_gap)
    groups = []
    for component in np.unique(components):
        members = survivors[components == component]  # ascending semantic index
        if len(members) >= params.min_points:
            groups.append(members)
    groups.sort(key=lambda m: (-len(m), int(m[0])))

    clusters = [
        Cluster(
            cloud=semantic.subset(members),
            class_id=int(class_id),
            cluster_id=first_id + rank,
            indices=members,
        )
        for rank, members in enumerate(groups)
    ]
    logger.info("class %d: %d clusters", class_id, len(clusters))
    return clusters


def segment_scene(
    semantic: PointCloud,
    class_ids: Sequence[int],
    params: Optional[SegmentationParams] = None,
) -> List[Cluster]:
    """
    Run :func:`extract_instances` for several classes with unique ids.

    Classes are processed in the given order; cluster ids continue across
    classes.
    """
    clusters: List[Cluster] = []
    for class_id in class_ids:
        clusters.extend(extract_instances(semantic, class_id, params, first_id=len(clusters)))
    return clusters


def write_clusters(
    clusters: Sequence[Cluster],
    out_dir: Union[str, Path],
    binary: Optional[bool] = None,
) -> List[Path]:
    """
    Save each cluster as ``cluster_<id>_<class>.ply`` in ``out_dir``.

    Binary files round-trip coordinates exactly.
    """
    out_dir = Path(out_dir)
    return [save_cloud(c.cloud, out_dir / c.filename, binary=binary) for c in clusters]


def load_clusters(directory: Union[str, Path]) -> List[Cluster]:
    """
    Load the cluster files written by :func:`write_clusters`, ordered by id.

    Raises
    ------
    CloudFormatError
        If the directory holds no cluster files.
    """
    directory = Path(directory)
    found = []
    for path in sorted(directory.iterdir()):
        match = CLUSTER_FILE_PATTERN.match(path.name)
        if match:
            found.append((int(match.group(1)), int(match.group(2)), path))
    if not found:
        raise CloudFormatError("no cluster_<id>_<class>.ply files", directory)
    found.sort()
    return [
        Cluster(cloud=load_cloud(path), class_id=class_id, cluster_id=cluster_id)
        for cluster_id, class_id, path in found
    ]
