"""
Exception hierarchy for augmap.

Every error raised on bad data derives from :class:`AugmapError`. Errors that
describe invalid values also derive from ``ValueError`` so callers catching
the builtin keep working.
"""

from typing import Optional, Union
from pathlib import Path


class AugmapError(Exception):
    """Base class of all augmap errors."""


class ConfigError(AugmapError, ValueError):
    """Invalid or unknown configuration value."""


class CloudFormatError(AugmapError, ValueError):
    """
    Malformed point-cloud or mesh file.

    Parameters
    ----------
    message : str
        Description of the problem.
    path : str or Path, optional
        File being parsed.
    line : int, optional
        1-based line number of the offending line (ASCII formats).
    """

    def __init__(
        self,
        message: str,
        path: Optional[Union[str, Path]] = None,
        line: Optional[int] = None,
    ):
        self.path = None if path is None else str(path)
        self.line = line
        where = ""
        if self.path is not None:
            where = self.path
            if line is not None:
                where += f":{line}"
            where += ": "
        elif line is not None:
            where = f"line {line}: "
        super().__init__(where + message)


class EmptyCloudError(AugmapError, ValueError):
    """Operation requires a non-empty (or large enough) cloud."""


class DegenerateGeometryError(AugmapError, ValueError):
    """Geometry without extent: zero-area mesh, zero-size model, ..."""


class RegistrationError(AugmapError):
    """Registration could not produce an alignment."""


class DatabaseError(AugmapError):
    """Model database is missing, corrupt or has no usable entry."""


class ChecksumError(DatabaseError):
    """Model file content does not match the manifest checksum."""


class GridMismatchError(AugmapError, ValueError):
    """Occupancy grids with different resolution or lattice."""
