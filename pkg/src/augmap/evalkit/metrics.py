"""
Detection and completion metrics.

Detections are placed models; a detection is a true positive when it can
be paired one-to-one with a ground-truth object of the same class whose
centroid lies within ``d_match``.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Tuple, Union
import logging

import numpy as np
import pandas as pd
from scipy.spatial.distance import cdist

from augmap.cloud.core import PointCloud
from augmap.cloud.index import NeighborIndex
from augmap.config.rcparams import resolve_param
from augmap.evalkit.scenes import GroundTruth
from augmap.modeldb.search import MatchResult
from augmap.utils.errors import EmptyCloudError
from augmap.utils.io import read_json, write_json
from augmap.utils.validation import validate_positive

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

TRUE_POSITIVE = "tp"
FALSE_POSITIVE = "fp"
FALSE_NEGATIVE = "fn"

SUMMARY_COLUMNS = ["tp", "fp", "fn", "precision", "recall", "f1"]


def f1_score(precision: float, recall: float) -> float:
    """
    Harmonic mean of precision and recall; 0 when both are 0.

    Examples
    --------
    >>> round(f1_score(0.8, 1.0), 4)
    0.8889
    """
    if precision + recall == 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


@dataclass(frozen=True)
class Assignment:
    """
    Outcome of one detection or one unmatched truth entry.

    ``cluster_id`` is None for false negatives, ``truth_index`` is None for
    false positives.
    """

    outcome: str
    cluster_id: Optional[int] = None
    truth_index: Optional[int] = None
    distance: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "outcome": self.outcome,
            "cluster_id": self.cluster_id,
            "truth_index": self.truth_index,
            "distance": self.distance,
        }


@dataclass(frozen=True)
class EvalReport:
    """
    Detection counts and the derived scores.

    Attributes
    ----------
    tp, fp, fn : int
        True positives, false positives, false negatives.
    precision, recall, f1 : float
        In [0, 1]; 0 wherever the denominator is 0.
    assignments : tuple of Assignment
        Per-detection outcomes (empty when built from counts).
    """

    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float
    assignments: Tuple[Assignment, ...] = field(default_factory=tuple, compare=False)

    def __post_init__(self):
        for name in ("tp", "fp", "fn"):
            value = getattr(self, name)
            if int(value) != value or value < 0:
                raise ValueError(f"{name} must be a non-negative integer, got {value}")
            object.__setattr__(self, name, int(value))
        object.__setattr__(self, "assignments", tuple(self.assignments))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "assignments": [a.to_dict() for a in self.assignments],
        }

    def to_json(self, path: PathLike) -> Path:
        return write_json(self.to_dict(), path)

    @classmethod
    def from_json(cls, path: PathLike) -> "EvalReport":
        data = read_json(path)
        return cls(
            tp=data["tp"],
            fp=data["fp"],
            fn=data["fn"],
            precision=data["precision"],
            recall=data["recall"],
            f1=data["f1"],
            assignments=tuple(Assignment(**a) for a in data.get("assignments", [])),
        )

    def to_frame(self) -> pd.DataFrame:
        """One-row summary table."""
        return pd.DataFrame([{c: getattr(self, c) for c in SUMMARY_COLUMNS}], columns=SUMMARY_COLUMNS)

    def table(self) -> str:
        """Summary table with scores at two decimals."""
        return self.to_frame().to_string(index=False, float_format=lambda v: f"{v:.2f}")


def report_from_counts(tp: int, fp: int, fn: int, assignments: Sequence[Assignment] = ()) -> EvalReport:
    """
    Precision, recall and F1 from raw counts.

    Examples
    --------
    >>> r = report_from_counts(11, 5, 8)
    >>> round(r.precision, 2), round(r.recall, 2), round(r.f1, 2)
    (0.69, 0.59, 0.63)
    """
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    return EvalReport(tp, fp, fn, precision, recall, f1_score(precision, recall), tuple(assignments))


def evaluate(
    matches: Sequence[MatchResult],
    truth: GroundTruth,
    d_match: Optional[float] = None,
) -> EvalReport:
    """
    Score detections against ground truth.

    Same-class (detection, truth) pairs are taken greedily by ascending
    centroid distance; a pair is a true positive when its distance is at
    most ``d_match``. Leftover detections are false positives, leftover
    truth entries false negatives.

    Parameters
    ----------
    matches : sequence of MatchResult
        Detections; ``centroid`` is the placed model centroid.
    truth : GroundTruth
        Reference objects.
    d_match : float, optional
        Meters. Defaults to ``rcParams["evalkit.d_match"]``.

    Returns
    -------
    EvalReport
    """
    d_match = float(resolve_param("evalkit.d_match", d_match))
    validate_positive(d_match, name="d_match")

    detections = sorted(matches, key=lambda m: m.cluster_id)
    entries = list(truth)
    pairs = []
    if detections and entries:
        distances = cdist(
            np.asarray([m.centroid for m in detections], dtype=np.float64),
            np.asarray([e.centroid for e in entries], dtype=np.float64),
        )
        for i, m in enumerate(detections):
            for j, e in enumerate(entries):
                if m.class_id == e.class_id and distances[i, j] <= d_match:
                    # ties broken on content so truth order does not matter
                    pairs.append((float(distances[i, j]), m.cluster_id, tuple(e.centroid), e.model_id, i, j))
    pairs.sort(key=lambda p: p[:4])

    used_det, used_truth, assignments = set(), set(), []
    for distance, cluster_id, _, _, i, j in pairs:
        if i in used_det or j in used_truth:
            continue
        used_det.add(i)
        used_truth.add(j)
        assignments.append(Assignment(TRUE_POSITIVE, cluster_id, j, distance))
    for i, m in enumerate(detections):
        if i not in used_det:
            assignments.append(Assignment(FALSE_POSITIVE, m.cluster_id))
    for j in range(len(entries)):
        if j not in used_truth:
            assignments.append(Assignment(FALSE_NEGATIVE, truth_index=j))

    tp = len(used_det)
    report = report_from_counts(tp, len(detections) - tp, len(entries) - tp, assignments)
    logger.info(
        "evaluated %d detections against %d objects: precision %.3f recall %.3f f1 %.3f",
        len(detections), len(entries), report.precision, report.recall, report.f1,
    )
    return report


def completion_error(placed: PointCloud, truth_model: PointCloud) -> Tuple[float, float]:
    """
    Mean nearest-neighbor distances between a placed model and the truth.

    Returns
    -------
    directed : float
        Mean distance from placed points to the truth, meters.
    symmetric : float
        Mean of both directions (chamfer distance).

    Raises
    ------
    EmptyCloudError
        If either cloud is empty.
    """
    if placed.is_empty or truth_model.is_empty:
        raise EmptyCloudError("completion_error needs two non-empty clouds")
    forward, _ = NeighborIndex(truth_model).query(placed.points)
    backward, _ = NeighborIndex(placed).query(truth_model.points)
    directed = float(forward.mean())
    return directed, 0.5 * (directed + float(backward.mean()))
