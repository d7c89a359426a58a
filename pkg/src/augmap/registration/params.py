"""
Registration parameters.
"""

from dataclasses import dataclass, fields

from augmap.config.rcparams import resolve_param
from augmap.utils.validation import validate_choice, validate_positive

GROUNDING_MODES = ("partial_extent", "floor")
SCALE_POLICIES = ("lambda", "height", "fixed")

# Short spellings accepted on the command line
_GROUNDING_ALIASES = {"partial": "partial_extent"}


def normalize_grounding(mode: str) -> str:
    """Map ``partial`` to ``partial_extent`` and validate the mode."""
    mode = _GROUNDING_ALIASES.get(mode, mode)
    return validate_choice(mode, GROUNDING_MODES, name="grounding")


@dataclass(frozen=True)
class RegistrationParams:
    """
    Coarse yaw sweep and ICP settings.

    Attributes
    ----------
    yaw_samples : int
        Number of yaw hypotheses ``2πk / yaw_samples``, at least 4.
    max_iterations : int
        ICP iteration cap, at least 1.
    convergence_tol : float
        ICP stops when the residual improves by less than this (meters).
    outlier_factor : float
        Correspondences farther than ``outlier_factor × median`` are ignored
        by the ICP update.
    grounding : str
        ``partial_extent`` (partial min z moved to 0) or ``floor`` (world z
        kept as height above the floor plane).
    scale_policy : str
        ``lambda`` (farthest-point distance ratio), ``height`` (z-extent
        ratio) or ``fixed`` (scale 1).
    scale_min, scale_max : float
        Clamp applied to estimated scales.
    tie_tolerance : float
        Coarse δ values within this of the minimum tie; the smallest yaw
        wins.
    """

    yaw_samples: int = 36
    max_iterations: int = 50
    convergence_tol: float = 1e-6
    outlier_factor: float = 2.5
    grounding: str = "partial_extent"
    scale_policy: str = "lambda"
    scale_min: float = 0.5
    scale_max: float = 2.0
    tie_tolerance: float = 1e-12

    def __post_init__(self):
        if int(self.yaw_samples) != self.yaw_samples or self.yaw_samples < 4:
            raise ValueError(f"yaw_samples must be an integer >= 4, got {self.yaw_samples}")
        if int(self.max_iterations) != self.max_iterations or self.max_iterations < 1:
            raise ValueError(
                f"max_iterations must be an integer >= 1, got {self.max_iterations}"
            )
        object.__setattr__(self, "yaw_samples", int(self.yaw_samples))
        object.__setattr__(self, "max_iterations", int(self.max_iterations))
        validate_positive(self.convergence_tol, name="convergence_tol")
        validate_positive(self.outlier_factor, name="outlier_factor")
        object.__setattr__(self, "grounding", normalize_grounding(self.grounding))
        validate_choice(self.scale_policy, SCALE_POLICIES, name="scale_policy")
        validate_positive(self.scale_min, name="scale_min")
        validate_positive(self.scale_max, name="scale_max")
        if self.scale_min > self.scale_max:
            raise ValueError(
                f"scale_min must be <= scale_max, got {self.scale_min} > {self.scale_max}"
            )
        validate_positive(self.tie_tolerance, name="tie_tolerance", strict=False)

    @classmethod
    def from_rcparams(cls, **overrides) -> "RegistrationParams":
        """Build parameters from ``rcParams``; keyword arguments win."""
        return cls(**{
            f.name: resolve_param(f"registration.{f.name}", overrides.get(f.name))
            for f in fields(cls)
        })
