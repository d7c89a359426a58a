"""
Default rcParams for augmap.

This module defines all default parameter values and provides the unified
rcParams interface used by every pipeline stage.

Main components:
- AUGMAP_RCPARAMS: Base parameter defaults, one dotted key per setting
- AugmapRcParams: Dict-like interface over the current values
- rcParams: Global instance for parameter access
- resolve_param(): Helper for parameter resolution
- rc_context(): Temporary overrides
"""

from contextlib import contextmanager
from typing import Any, Dict, Iterator, List, Mapping, Optional


# =============================================================================
# Base Default Dictionary
# =============================================================================

AUGMAP_RCPARAMS: Dict[str, Any] = {
    # Cloud files
    "cloud.precision": 6,  # decimal digits written to ASCII PLY
    "cloud.binary": False,  # write binary little-endian PLY instead of ASCII

    # Instance extraction (difference of normals + euclidean clustering)
    "segmentation.class_id": 1,
    "segmentation.r_small": 0.05,
    "segmentation.r_large": 0.20,
    "segmentation.don_threshold": 0.25,
    "segmentation.cluster_gap": 0.05,
    "segmentation.min_points": 100,

    # Shape filters
    "segmentation.lambda_min": 0.1,
    "segmentation.lambda_max": 0.25,
    "segmentation.planarity_abs": 1e-4,  # m^2, about 1 cm standard deviation
    "segmentation.planarity_ratio": 0.01,

    # Registration
    "registration.yaw_samples": 36,
    "registration.max_iterations": 50,
    "registration.convergence_tol": 1e-6,
    "registration.outlier_factor": 2.5,
    "registration.grounding": "partial_extent",
    "registration.scale_policy": "lambda",
    "registration.scale_min": 0.5,
    "registration.scale_max": 2.0,
    "registration.tie_tolerance": 1e-12,

    # Model database
    "modeldb.db_points": 2048,
    "modeldb.surface_samples": 16384,
    "modeldb.top_k": 5,
    "modeldb.shared_coarse": False,

    # Scene augmentation
    "augmentation.epsilon": 0.1,
    "augmentation.model_color": [160, 160, 160],  # RGB of placed points in colored scenes

    # Costmap projection
    "costmap.z_min": 0.1,
    "costmap.z_max": 1.0,  # robot height h
    "costmap.resolution": 0.05,
    "costmap.padding": 0.5,
    "costmap.occupied_thresh": 0.65,
    "costmap.free_thresh": 0.196,

    # Synthetic scenes and evaluation
    "evalkit.image_res": 256,
    "evalkit.fov": 90.0,  # degrees
    "evalkit.noise_sigma": 0.005,
    "evalkit.label_bleed": 0.05,
    "evalkit.bleed_radius": 0.1,
    "evalkit.d_match": 0.5,
    "evalkit.background_class": 0,
    "evalkit.clutter_spacing": 0.02,

    # Pipeline
    "pipeline.seed": 0,
    "pipeline.workers": None,  # None = available parallelism

    # Preview figures
    "plot.figsize": [4.0, 4.0],
    "plot.dpi": 300,
    "plot.point_size": 0.5,
    "plot.original_color": "0.65",
    "plot.palette": "tab10",
    "plot.free_color": "white",
    "plot.occupied_color": "0.15",
    "plot.unknown_color": "0.8",
}
"""
Base augmap parameter defaults.

Every documented default of the pipeline lives here. Parameter dataclasses
and CLI overrides read through this registry.
"""


# Module-level mutable storage for current values
# This gets updated by configuration files and user modifications
_AUGMAP_CURRENT: Dict[str, Any] = AUGMAP_RCPARAMS.copy()


# =============================================================================
# Helper Functions
# =============================================================================

def _get_default(key: str) -> Any:
    """
    Get a current parameter value (internal use only).

    Parameters
    ----------
    key : str
        Parameter name

    Returns
    -------
    Any
        Parameter value

    Raises
    ------
    KeyError
        If parameter not found in the registry
    """
    if key in _AUGMAP_CURRENT:
        return _AUGMAP_CURRENT[key]

    raise KeyError(f"Parameter '{key}' not found in augmap rcParams")


def resolve_param(key: str, value: Optional[Any] = None) -> Any:
    """
    Resolve a parameter value: use provided value if not None, otherwise get default.

    Parameters
    ----------
    key : str
        Parameter name
    value : Any, optional
        User-provided value. If None, the current registry value is used.

    Returns
    -------
    Any
        The resolved parameter value (user value or default)

    Examples
    --------
    >>> def augment_scene(G, layer, epsilon=None):
    ...     epsilon = resolve_param("augmentation.epsilon", epsilon)

    >>> resolve_param("augmentation.epsilon", 0.05)
    0.05
    >>> resolve_param("augmentation.epsilon")
    0.1
    """
    return value if value is not None else _get_default(key)


# =============================================================================
# augmap rcParams Wrapper
# =============================================================================

class AugmapRcParams:
    """
    Unified dict-like interface for augmap parameters.

    Unlike a plain dict, unknown keys are rejected on assignment so that a
    typo in a configuration file never passes silently.

    Examples
    --------
    >>> from augmap.config import rcParams
    >>> rcParams["augmentation.epsilon"]
    0.1
    >>> rcParams["registration.yaw_samples"] = 72
    """

    def __getitem__(self, key: str) -> Any:
        """Get parameter value."""
        return _get_default(key)

    def get(self, key: str, default: Any = None) -> Any:
        """Get parameter value with optional fallback."""
        try:
            return self[key]
        except KeyError:
            return default

    def __setitem__(self, key: str, value: Any) -> None:
        """Set parameter value."""
        if key not in AUGMAP_RCPARAMS:
            raise KeyError(f"Unknown augmap parameter '{key}'")
        _AUGMAP_CURRENT[key] = value

    def __contains__(self, key: str) -> bool:
        """Check if parameter exists."""
        return key in _AUGMAP_CURRENT

    def keys(self) -> List[str]:
        """Return all parameter keys."""
        return list(_AUGMAP_CURRENT.keys())

    def update(self, values: Mapping[str, Any]) -> None:
        """Set several parameters at once, rejecting unknown keys first."""
        unknown = sorted(k for k in values if k not in AUGMAP_RCPARAMS)
        if unknown:
            raise KeyError(f"Unknown augmap parameters: {unknown}")
        _AUGMAP_CURRENT.update(values)

    def snapshot(self) -> Dict[str, Any]:
        """Return a copy of the current values."""
        return dict(_AUGMAP_CURRENT)


# =============================================================================
# Global rcParams Instance
# =============================================================================

rcParams = AugmapRcParams()
"""
Global augmap rcParams instance.

>>> import augmap as am
>>> am.rcParams["costmap.z_max"] = 0.8
>>> am.rcParams["costmap.z_min"]
0.1
"""


def reset_params() -> None:
    """
    Restore every parameter to its documented default.

    Examples
    --------
    >>> import augmap as am
    >>> am.rcParams["augmentation.epsilon"] = 0.2
    >>> am.reset_params()
    >>> am.rcParams["augmentation.epsilon"]
    0.1
    """
    _AUGMAP_CURRENT.clear()
    _AUGMAP_CURRENT.update(AUGMAP_RCPARAMS)


@contextmanager
def rc_context(overrides: Optional[Mapping[str, Any]] = None) -> Iterator[None]:
    """
    Temporarily apply parameter overrides.

    Parameters
    ----------
    overrides : mapping, optional
        Dotted keys and values applied inside the ``with`` block.

    Examples
    --------
    >>> with rc_context({"registration.yaw_samples": 8}):
    ...     alignment = register(model, partial)
    """
    saved = dict(_AUGMAP_CURRENT)
    try:
        if overrides:
            rcParams.update(overrides)
        yield
    finally:
        _AUGMAP_CURRENT.clear()
        _AUGMAP_CURRENT.update(saved)
