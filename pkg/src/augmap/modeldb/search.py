"""
Exhaustive model search.

Every database model of the cluster's class is registered against the
partial view; the model with the smallest δ is the match. Ties go to the
lowest model_id.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union
import logging
import time

import numpy as np
from joblib import Parallel, delayed

from augmap.cloud.core import GroundedTransform, Point3, PointCloud
from augmap.cloud.index import NeighborIndex
from augmap.config.rcparams import resolve_param
from augmap.modeldb.database import ModelDatabase, ModelEntry
from augmap.modeldb.mesh import farthest_point_subsample
from augmap.registration.align import (
    Alignment,
    centroid_aligned,
    coarse_align,
    estimate_scale,
    icp_refine,
    normalize_partial,
    register,
)
from augmap.registration.params import RegistrationParams
from augmap.segmentation.instances import Cluster
from augmap.utils.errors import DatabaseError
from augmap.utils.io import read_jsonl, write_jsonl

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


@dataclass(frozen=True)
class MatchResult:
    """
    Best database model for one cluster.

    Attributes
    ----------
    cluster_id : int
        Cluster that was matched.
    class_id : int
        Class of the cluster and the model.
    model_id : str
        Matched model (o*).
    alignment : Alignment
        Model → partial local frame alignment.
    world_transform : GroundedTransform
        Canonical model frame → world.
    delta : float
        δ of the match, meters.
    ranking : tuple of (str, float)
        Best ``top_k`` models, ascending δ then model_id.
    centroid : Point3
        Centroid of the placed model in the world frame.
    elapsed : float
        Wall-clock search time in seconds (not written to reports).
    """

    cluster_id: int
    class_id: int
    model_id: str
    alignment: Alignment
    world_transform: GroundedTransform
    delta: float
    ranking: Tuple[Tuple[str, float], ...]
    centroid: Point3
    elapsed: float = field(default=0.0, compare=False)

    def __post_init__(self):
        ranking = tuple((str(m), float(d)) for m, d in self.ranking)
        object.__setattr__(self, "ranking", ranking)
        object.__setattr__(self, "centroid", Point3(*(float(v) for v in self.centroid)))
        if ranking:
            if ranking != tuple(sorted(ranking, key=lambda r: (r[1], r[0]))):
                raise ValueError("ranking must be sorted by delta, then model_id")
            if ranking[0] != (self.model_id, self.delta):
                raise ValueError("model_id and delta must head the ranking")

    def to_record(self) -> dict:
        """Flat record of the match report."""
        return {
            "cluster_id": self.cluster_id,
            "class_id": self.class_id,
            "model_id": self.model_id,
            "delta": self.delta,
            "yaw": self.world_transform.yaw,
            "translation": list(self.world_transform.translation),
            "scale": self.world_transform.scale,
            "ranking": [[m, d] for m, d in self.ranking],
            "centroid": list(self.centroid),
            "alignment": self.alignment.to_dict(),
        }

    @classmethod
    def from_record(cls, record: dict) -> "MatchResult":
        return cls(
            cluster_id=int(record["cluster_id"]),
            class_id=int(record["class_id"]),
            model_id=record["model_id"],
            alignment=Alignment.from_dict(record["alignment"]),
            world_transform=GroundedTransform(
                record["yaw"], tuple(record["translation"]), record["scale"]
            ),
            delta=float(record["delta"]),
            ranking=tuple((m, d) for m, d in record["ranking"]),
            centroid=Point3(*record["centroid"]),
        )


def _prepare_partial(local: PointCloud, db_points: int, seed: int) -> PointCloud:
    # δ is measured at database resolution
    if len(local) <= db_points:
        return PointCloud(local.points)
    keep = np.sort(farthest_point_subsample(local.points, db_points, seed=seed))
    return PointCloud(local.points[keep])


def _coarse_reference(
    candidates: Sequence[ModelEntry],
    partial: PointCloud,
    params: RegistrationParams,
    seed: int,
) -> float:
    """Yaw of a single seeded random model, reused for every candidate."""
    rng = np.random.default_rng(seed)
    reference = candidates[int(rng.integers(len(candidates)))]
    yaw = coarse_align(reference.cloud, partial, params).yaw
    logger.debug("coarse reference %s, yaw %.3f", reference.model_id, yaw)
    return yaw


def _align_candidate(
    entry: ModelEntry,
    partial: PointCloud,
    params: RegistrationParams,
    reference_yaw: Optional[float],
) -> Alignment:
    index = NeighborIndex(entry.cloud)
    if reference_yaw is None:
        return register(entry.cloud, partial, params, model_index=index)
    scale = estimate_scale(partial, entry.cloud, params)
    T0 = centroid_aligned(entry.cloud, partial, reference_yaw, scale)
    return icp_refine(entry.cloud, partial, T0, params, model_index=index)


def match(
    partial: Cluster,
    db: ModelDatabase,
    reg_params: Optional[RegistrationParams] = None,
    top_k: Optional[int] = None,
    workers: Optional[int] = None,
    shared_coarse: Optional[bool] = None,
    seed: Optional[int] = None,
) -> MatchResult:
    """
    Find the database model closest to a partial view.

    Each model of the cluster's class is aligned with a coarse yaw sweep and
    ICP; its δ is the final ICP residual. The smallest δ wins, ties going to
    the lowest model_id.

    Parameters
    ----------
    partial : Cluster
        Filtered cluster in the world frame.
    db : ModelDatabase
        Model database.
    reg_params : RegistrationParams, optional
        Defaults from ``rcParams``.
    top_k : int, optional
        Length of the ranking, default ``rcParams["modeldb.top_k"]``.
    workers : int, optional
        Parallel jobs over models (threads); 1 runs sequentially, None uses
        all cores. Results do not depend on it.
    shared_coarse : bool, optional
        Compute the coarse yaw once on a seeded random model and start every
        candidate's ICP from it.
    seed : int, optional
        Seed of the ``shared_coarse`` choice and of partial subsampling.

    Returns
    -------
    MatchResult

    Raises
    ------
    DatabaseError
        If the database has no model of the cluster's class.
    """
    params = reg_params if reg_params is not None else RegistrationParams.from_rcparams()
    top_k = int(resolve_param("modeldb.top_k", top_k))
    workers = resolve_param("pipeline.workers", workers)
    shared_coarse = bool(resolve_param("modeldb.shared_coarse", shared_coarse))
    seed = int(resolve_param("pipeline.seed", seed))

    candidates = db.by_class(partial.class_id)
    if not candidates:
        raise DatabaseError(f"no models of class {partial.class_id} in the database")

    start = time.perf_counter()
    local, to_world = normalize_partial(partial, params.grounding)
    sample = _prepare_partial(local, db.db_points, seed)
    reference_yaw = _coarse_reference(candidates, sample, params, seed) if shared_coarse else None

    n_jobs = -1 if workers is None else int(workers)
    if n_jobs == 1 or len(candidates) == 1:
        alignments = [_align_candidate(e, sample, params, reference_yaw) for e in candidates]
    else:
        alignments = Parallel(n_jobs=n_jobs, prefer="threads")(
            delayed(_align_candidate)(e, sample, params, reference_yaw) for e in candidates
        )

    scored = sorted(
        zip(candidates, alignments), key=lambda pair: (pair[1].delta, pair[0].model_id)
    )
    best_entry, best_alignment = scored[0]
    world = to_world.compose(best_alignment.transform)
    centroid = world.apply(best_entry.cloud.points.mean(axis=0, keepdims=True))[0]
    elapsed = time.perf_counter() - start

    logger.info(
        "cluster %d -> %s (delta %.4f m, %d models, %.2f s)",
        partial.cluster_id, best_entry.model_id, best_alignment.delta, len(candidates), elapsed,
    )
    return MatchResult(
        cluster_id=partial.cluster_id,
        class_id=partial.class_id,
        model_id=best_entry.model_id,
        alignment=best_alignment,
        world_transform=world,
        delta=best_alignment.delta,
        ranking=tuple((e.model_id, a.delta) for e, a in scored[:top_k]),
        centroid=Point3(*centroid),
        elapsed=elapsed,
    )


def match_clusters(
    clusters: Sequence[Cluster],
    db: ModelDatabase,
    reg_params: Optional[RegistrationParams] = None,
    **kwargs,
) -> List[MatchResult]:
    """:func:`match` for every cluster, in input order."""
    return [match(cluster, db, reg_params, **kwargs) for cluster in clusters]


def write_match_report(results: Sequence[MatchResult], path: PathLike) -> Path:
    """
    Write one JSON record per match, ordered by cluster_id.

    Timing is left out so identical runs produce identical files.
    """
    ordered = sorted(results, key=lambda r: r.cluster_id)
    return write_jsonl((r.to_record() for r in ordered), path)


def read_match_report(path: PathLike) -> List[MatchResult]:
    """Read a report written by :func:`write_match_report`."""
    return [MatchResult.from_record(record) for record in read_jsonl(path)]
