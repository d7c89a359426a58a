"""
Shape filters that reject mislabeled clusters.

Label bleeding along walls and floors produces flat clusters; the
planarity filter catches them from the covariance eigenvalues. Clusters
whose farthest-point distance λ is outside the class range are rejected by
the size filter.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List, Optional, Tuple, Union
import logging

import pandas as pd

from augmap.cloud.core import farthest_point_distance
from augmap.cloud.features import covariance_summary
from augmap.segmentation.instances import Cluster
from augmap.segmentation.params import SegmentationParams
from augmap.utils.errors import DegenerateGeometryError
from augmap.utils.io import ensure_parent

logger = logging.getLogger(__name__)

KEPT = "kept"
REJECTED_PLANAR = "rejected_planar"
REJECTED_SIZE = "rejected_size"
VERDICTS = (KEPT, REJECTED_PLANAR, REJECTED_SIZE)

REPORT_COLUMNS = [
    "cluster_id", "class_id", "verdict", "lambda", "eig1", "eig2", "eig3", "n_points",
]


@dataclass(frozen=True)
class FilterReport:
    """
    Verdict of the shape filters on one cluster.

    Attributes
    ----------
    cluster_id : int
        Cluster the report refers to.
    verdict : str
        One of ``kept``, ``rejected_planar``, ``rejected_size``.
    lambda_ : float, optional
        Farthest-point distance in meters, when measured.
    eigenvalues : tuple of float, optional
        (λ1, λ2, λ3) of the coordinate covariance, when measured.
    class_id : int, optional
        Semantic class of the cluster.
    n_points : int, optional
        Cluster size.
    """

    cluster_id: int
    verdict: str
    lambda_: Optional[float] = None
    eigenvalues: Optional[Tuple[float, float, float]] = None
    class_id: Optional[int] = None
    n_points: Optional[int] = None

    def __post_init__(self):
        if self.verdict not in VERDICTS:
            raise ValueError(f"verdict must be one of {VERDICTS}, got {self.verdict!r}")

    @property
    def kept(self) -> bool:
        return self.verdict == KEPT

    def to_record(self) -> dict:
        eig = self.eigenvalues if self.eigenvalues is not None else (None, None, None)
        return {
            "cluster_id": self.cluster_id,
            "class_id": self.class_id,
            "verdict": self.verdict,
            "lambda": self.lambda_,
            "eig1": eig[0],
            "eig2": eig[1],
            "eig3": eig[2],
            "n_points": self.n_points,
        }


def is_planar(eigenvalues: Tuple[float, float, float], params: SegmentationParams) -> bool:
    """λ3 below the absolute floor or λ3/λ1 below the ratio floor."""
    l1, _, l3 = eigenvalues
    ratio = l3 / l1 if l1 > 0 else 0.0
    return l3 < params.planarity_abs or ratio < params.planarity_ratio


def in_size_range(lam: float, params: SegmentationParams) -> bool:
    """λ inside [λ_min, λ_max], bounds included."""
    return params.lambda_min <= lam <= params.lambda_max


def planarity_filter(cluster: Cluster, params: Optional[SegmentationParams] = None) -> FilterReport:
    """
    Reject clusters whose covariance is nearly flat.

    Parameters
    ----------
    cluster : Cluster
        At least 3 points.
    params : SegmentationParams, optional
        Defaults from ``rcParams``.

    Returns
    -------
    FilterReport
        ``rejected_planar`` iff ``λ3 < planarity_abs`` or
        ``λ3 / λ1 < planarity_ratio``; carries the eigenvalues.

    Raises
    ------
    DegenerateGeometryError
        If the cluster has fewer than 3 points.
    """
    params = params if params is not None else SegmentationParams.from_rcparams()
    if len(cluster) < 3:
        raise DegenerateGeometryError(
            f"cluster {cluster.cluster_id}: planarity needs at least 3 points, got {len(cluster)}"
        )
    eigenvalues = covariance_summary(cluster.cloud).eigenvalues
    verdict = REJECTED_PLANAR if is_planar(eigenvalues, params) else KEPT
    return FilterReport(
        cluster_id=cluster.cluster_id,
        verdict=verdict,
        eigenvalues=eigenvalues,
        class_id=cluster.class_id,
        n_points=len(cluster),
    )


def size_filter(cluster: Cluster, params: Optional[SegmentationParams] = None) -> FilterReport:
    """
    Keep clusters whose farthest-point distance λ lies in the class range.

    Examples
    --------
    A single point has λ = 0 and is always rejected with the default range.

    >>> from augmap.cloud import PointCloud
    >>> single = Cluster(PointCloud([[0.0, 0.0, 0.0]]), class_id=1, cluster_id=0)
    >>> size_filter(single).verdict
    'rejected_size'
    """
    params = params if params is not None else SegmentationParams.from_rcparams()
    lam = farthest_point_distance(cluster.cloud)
    return FilterReport(
        cluster_id=cluster.cluster_id,
        verdict=KEPT if in_size_range(lam, params) else REJECTED_SIZE,
        lambda_=lam,
        class_id=cluster.class_id,
        n_points=len(cluster),
    )


def apply_filters(cluster: Cluster, params: Optional[SegmentationParams] = None) -> FilterReport:
    """
    Run both filters and combine the verdicts.

    ``rejected_planar`` takes priority over ``rejected_size``, so the
    combined verdict does not depend on the order the filters run in.
    Clusters with fewer than 3 points have no covariance; they are judged by
    size and count as planar when the size test passes.
    """
    params = params if params is not None else SegmentationParams.from_rcparams()
    size = size_filter(cluster, params)
    if len(cluster) < 3:
        eigenvalues = None
        planar = True
    else:
        eigenvalues = planarity_filter(cluster, params).eigenvalues
        planar = is_planar(eigenvalues, params)

    if planar and (eigenvalues is not None or size.kept):
        verdict = REJECTED_PLANAR
    elif not size.kept:
        verdict = REJECTED_SIZE
    else:
        verdict = KEPT
    report = FilterReport(
        cluster_id=cluster.cluster_id,
        verdict=verdict,
        lambda_=size.lambda_,
        eigenvalues=eigenvalues,
        class_id=cluster.class_id,
        n_points=len(cluster),
    )
    logger.debug(
        "cluster %d: %s (lambda=%.3f, eig=%s)",
        cluster.cluster_id, verdict, size.lambda_, eigenvalues,
    )
    return report


def filter_clusters(
    clusters: Iterable[Cluster],
    params: Optional[SegmentationParams] = None,
) -> Tuple[List[Cluster], List[FilterReport]]:
    """
    Apply :func:`apply_filters` to every cluster.

    Returns
    -------
    kept : list of Cluster
        Clusters with verdict ``kept``, input order.
    reports : list of FilterReport
        One report per input cluster.
    """
    params = params if params is not None else SegmentationParams.from_rcparams()
    kept, reports = [], []
    for cluster in clusters:
        report = apply_filters(cluster, params)
        reports.append(report)
        if report.kept:
            kept.append(cluster)
    logger.info("filters kept %d of %d clusters", len(kept), len(reports))
    return kept, reports


def reports_to_frame(reports: Iterable[FilterReport]) -> pd.DataFrame:
    """One row per report with the columns of the filter report file."""
    return pd.DataFrame([r.to_record() for r in reports], columns=REPORT_COLUMNS)


def write_filter_report(reports: Iterable[FilterReport], path: Union[str, Path]) -> Path:
    """
    Write the filter report as CSV.

    Columns: cluster_id, class_id, verdict, lambda, eig1, eig2, eig3,
    n_points. Missing measurements are left empty.
    """
    path = ensure_parent(path)
    reports_to_frame(reports).to_csv(path, index=False, float_format="%.9g")
    return path


def read_filter_report(path: Union[str, Path]) -> pd.DataFrame:
    """Read a report written by :func:`write_filter_report`."""
    return pd.read_csv(path)
