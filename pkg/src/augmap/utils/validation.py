"""
Input validation utilities for augmap.

This module provides functions for validating and preprocessing inputs
to the pipeline stages, ensuring robust error handling.
"""

from typing import Optional, Sequence, Union, List, Any
import numpy as np


def validate_points(
    points: Union[np.ndarray, Sequence[Sequence[float]]],
    name: str = "points",
    allow_empty: bool = True,
) -> np.ndarray:
    """
    Validate an array of 3D points.

    Parameters
    ----------
    points : array-like
        Points of shape (N, 3). An empty sequence is accepted as shape (0, 3).
    name : str, default='points'
        Name of the parameter (for error messages).
    allow_empty : bool, default=True
        Whether zero points are acceptable.

    Returns
    -------
    ndarray
        float64 array of shape (N, 3).

    Raises
    ------
    ValueError
        If the shape is wrong, values are not finite, or the array is empty
        when not allowed.

    Examples
    --------
    >>> validate_points([[0, 0, 0], [1, 2, 3]]).shape
    (2, 3)
    """
    array = np.asarray(points, dtype=np.float64)
    if array.size == 0:
        array = array.reshape(0, 3)
    if array.ndim != 2 or array.shape[1] != 3:
        raise ValueError(f"{name} must have shape (N, 3), got {array.shape}")
    if not allow_empty and len(array) == 0:
        raise ValueError(f"{name} cannot be empty")
    if not np.all(np.isfinite(array)):
        bad = int(np.flatnonzero(~np.all(np.isfinite(array), axis=1))[0])
        raise ValueError(f"{name} contains non-finite coordinates (row {bad})")
    return array


def validate_numeric(
    values: Union[List, np.ndarray],
    name: str = "values",
    allow_nan: bool = False,
    allow_inf: bool = False
) -> np.ndarray:
    """
    Validate numeric data.

    Parameters
    ----------
    values : array-like
        Values to validate.
    name : str, default='values'
        Name of the parameter (for error messages).
    allow_nan : bool, default=False
        Whether to allow NaN values.
    allow_inf : bool, default=False
        Whether to allow infinite values.

    Returns
    -------
    ndarray
        Validated numeric array.

    Raises
    ------
    ValueError
        If values are not numeric or contain NaN/inf when not allowed.
    """
    values = np.asarray(values)

    if not np.issubdtype(values.dtype, np.number):
        raise ValueError(f"{name} must be numeric, got dtype {values.dtype}")

    if not allow_nan and np.any(np.isnan(values)):
        raise ValueError(f"{name} contains NaN values")

    if not allow_inf and np.any(np.isinf(values)):
        raise ValueError(f"{name} contains infinite values")

    return values


def validate_same_length(
    values: Optional[np.ndarray],
    expected: int,
    name: str = "values",
) -> Optional[np.ndarray]:
    """
    Validate that an optional per-point array has one entry per point.

    Parameters
    ----------
    values : ndarray or None
        Per-point array (first axis indexes points).
    expected : int
        Number of points.
    name : str, default='values'
        Name of the parameter (for error messages).

    Returns
    -------
    ndarray or None
        The array unchanged.

    Raises
    ------
    ValueError
        If the first dimension differs from ``expected``.
    """
    if values is None:
        return None
    if len(values) != expected:
        raise ValueError(
            f"{name} must have exactly {expected} entries, got {len(values)}"
        )
    return values


def validate_positive(
    value: Any,
    name: str = "value",
    strict: bool = True
) -> Any:
    """
    Validate that a value (or every value of an array) is positive.

    Parameters
    ----------
    value : float or array-like
        Value(s) to validate.
    name : str, default='value'
        Name of the parameter (for error messages).
    strict : bool, default=True
        If True, requires values > 0. If False, allows values >= 0.

    Returns
    -------
    Any
        The validated value, unchanged.

    Raises
    ------
    ValueError
        If values are not positive.

    Examples
    --------
    >>> validate_positive(0.05, name="radius")
    0.05
    """
    array = np.asarray(value, dtype=float)

    if np.any(~np.isfinite(array)):
        raise ValueError(f"{name} must be finite, got {value}")
    if strict:
        if not np.all(array > 0):
            raise ValueError(f"{name} must be strictly positive (> 0), got {value}")
    else:
        if not np.all(array >= 0):
            raise ValueError(f"{name} must be non-negative (>= 0), got {value}")

    return value


def validate_range(
    value: float,
    min_val: Optional[float] = None,
    max_val: Optional[float] = None,
    name: str = "value"
) -> float:
    """
    Validate that a value is within a specified range.

    Parameters
    ----------
    value : float
        Value to validate.
    min_val : float, optional
        Minimum allowed value (inclusive).
    max_val : float, optional
        Maximum allowed value (inclusive).
    name : str, default='value'
        Name of the parameter (for error messages).

    Returns
    -------
    float
        Validated value.

    Raises
    ------
    ValueError
        If value is outside the specified range.

    Examples
    --------
    >>> bleed = validate_range(0.05, min_val=0, max_val=1, name='label_bleed')
    """
    if min_val is not None and value < min_val:
        raise ValueError(f"{name} must be >= {min_val}, got {value}")

    if max_val is not None and value > max_val:
        raise ValueError(f"{name} must be <= {max_val}, got {value}")

    return value


def validate_choice(value: str, choices: Sequence[str], name: str = "value") -> str:
    """
    Validate that a string is one of the allowed options.

    Raises
    ------
    ValueError
        If ``value`` is not in ``choices``.
    """
    if value not in choices:
        raise ValueError(f"{name} must be one of {list(choices)}, got {value!r}")
    return value
