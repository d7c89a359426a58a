"""
Configuration system for augmap.

This module provides the parameter registry shared by all pipeline stages
and the loader for configuration files.
"""

from augmap.config.rcparams import (
    AUGMAP_RCPARAMS,
    rcParams,
    resolve_param,
    rc_context,
    reset_params,
)

from augmap.config.loader import (
    load_config_file,
    parse_value,
)

__all__ = [
    # Parameter system
    "AUGMAP_RCPARAMS",
    "rcParams",
    "resolve_param",
    "rc_context",
    "reset_params",
    # Files
    "load_config_file",
    "parse_value",
]
