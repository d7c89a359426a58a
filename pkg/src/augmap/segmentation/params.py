"""
Parameters of instance extraction and shape filtering.
"""

from dataclasses import dataclass, fields
from typing import Optional, Tuple

from augmap.config.rcparams import resolve_param
from augmap.utils.validation import validate_positive, validate_range


@dataclass(frozen=True)
class SegmentationParams:
    """
    Instance extraction and filter thresholds.

    Attributes
    ----------
    r_small, r_large : float
        Difference-of-normals radii in meters, ``r_small < r_large``.
    don_threshold : float
        Minimum DoN magnitude ``|n_s - n_l| / 2`` in [0, 1] to keep a point.
    cluster_gap : float
        Single-linkage distance in meters.
    min_points : int
        Smallest cluster kept.
    lambda_range : (float, float)
        Accepted farthest-point distance [λ_min, λ_max], meters, inclusive.
    planarity_abs : float
        Absolute floor on λ3 (m²) below which a cluster is planar.
    planarity_ratio : float
        Floor on λ3/λ1 below which a cluster is planar.
    """

    r_small: float = 0.05
    r_large: float = 0.20
    don_threshold: float = 0.25
    cluster_gap: float = 0.05
    min_points: int = 100
    lambda_range: Tuple[float, float] = (0.1, 0.25)
    planarity_abs: float = 1e-4
    planarity_ratio: float = 0.01

    def __post_init__(self):
        validate_positive(self.r_small, name="r_small")
        validate_positive(self.r_large, name="r_large")
        if not self.r_small < self.r_large:
            raise ValueError(
                f"r_small must be < r_large, got {self.r_small} >= {self.r_large}"
            )
        validate_range(self.don_threshold, 0.0, 1.0, name="don_threshold")
        validate_positive(self.cluster_gap, name="cluster_gap")
        if int(self.min_points) != self.min_points or self.min_points < 1:
            raise ValueError(f"min_points must be a positive integer, got {self.min_points}")
        lam_min, lam_max = (float(v) for v in self.lambda_range)
        validate_positive(lam_max, name="lambda_max")
        validate_positive(lam_min, name="lambda_min", strict=False)
        if not lam_min < lam_max:
            raise ValueError(f"lambda_min must be < lambda_max, got {self.lambda_range}")
        object.__setattr__(self, "lambda_range", (lam_min, lam_max))
        validate_positive(self.planarity_abs, name="planarity_abs")
        validate_positive(self.planarity_ratio, name="planarity_ratio")

    @property
    def lambda_min(self) -> float:
        return self.lambda_range[0]

    @property
    def lambda_max(self) -> float:
        return self.lambda_range[1]

    @classmethod
    def from_rcparams(cls, **overrides) -> "SegmentationParams":
        """
        Build parameters from ``rcParams``; keyword arguments win.

        Examples
        --------
        >>> SegmentationParams.from_rcparams(cluster_gap=0.08).cluster_gap
        0.08
        """
        values = {}
        for f in fields(cls):
            if f.name == "lambda_range":
                continue
            values[f.name] = resolve_param(f"segmentation.{f.name}", overrides.get(f.name))
        lam = overrides.get("lambda_range")
        values["lambda_range"] = (
            tuple(lam) if lam is not None else (
                resolve_param("segmentation.lambda_min"),
                resolve_param("segmentation.lambda_max"),
            )
        )
        return cls(**values)

    def with_lambda_range(self, lambda_min: Optional[float], lambda_max: Optional[float]) -> "SegmentationParams":
        lam_min = self.lambda_min if lambda_min is None else lambda_min
        lam_max = self.lambda_max if lambda_max is None else lambda_max
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        values["lambda_range"] = (lam_min, lam_max)
        return SegmentationParams(**values)
