"""
Utility functions for augmap.

This module provides the exception hierarchy, input validation, file
helpers and the logging setup used by the command line.
"""

from augmap.utils.errors import (
    AugmapError,
    ConfigError,
    CloudFormatError,
    EmptyCloudError,
    DegenerateGeometryError,
    RegistrationError,
    DatabaseError,
    ChecksumError,
    GridMismatchError,
)

from augmap.utils.validation import (
    validate_points,
    validate_numeric,
    validate_same_length,
    validate_positive,
    validate_range,
    validate_choice,
)

from augmap.utils.io import (
    ensure_parent,
    file_checksum,
    write_json,
    read_json,
    write_jsonl,
    read_jsonl,
    savefig,
)

from augmap.utils.logs import setup_logging

__all__ = [
    # Errors
    "AugmapError",
    "ConfigError",
    "CloudFormatError",
    "EmptyCloudError",
    "DegenerateGeometryError",
    "RegistrationError",
    "DatabaseError",
    "ChecksumError",
    "GridMismatchError",
    # Validation
    "validate_points",
    "validate_numeric",
    "validate_same_length",
    "validate_positive",
    "validate_range",
    "validate_choice",
    # Files
    "ensure_parent",
    "file_checksum",
    "write_json",
    "read_json",
    "write_jsonl",
    "read_jsonl",
    "savefig",
    # Logging
    "setup_logging",
]
