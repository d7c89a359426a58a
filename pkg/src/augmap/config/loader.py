"""
Configuration file loading.

Configuration files are flat YAML mappings of dotted rcParams keys::

    augmentation.epsilon: 0.1
    segmentation.lambda_min: 0.1
    registration.yaw_samples: 36
    pipeline.workers: 4

Nested mappings are flattened with dots, so ``segmentation: {r_small: 0.05}``
is equivalent to ``segmentation.r_small: 0.05``. Unknown keys are rejected.
"""

from pathlib import Path
from typing import Any, Dict, Mapping, Union

import yaml

from augmap.config.rcparams import AUGMAP_RCPARAMS
from augmap.utils.errors import ConfigError


def _flatten(mapping: Mapping[str, Any], prefix: str = "") -> Dict[str, Any]:
    flat: Dict[str, Any] = {}
    for key, value in mapping.items():
        name = f"{prefix}{key}"
        if isinstance(value, Mapping):
            flat.update(_flatten(value, prefix=name + "."))
        else:
            flat[name] = value
    return flat


def coerce_param(key: str, value: Any) -> Any:
    """
    Check a value against the type of the registry default.

    Parameters
    ----------
    key : str
        Dotted parameter name.
    value : Any
        Candidate value.

    Returns
    -------
    Any
        The value, with ints promoted to float where the default is a float.

    Raises
    ------
    ConfigError
        If the key is unknown or the value has the wrong type.
    """
    if key not in AUGMAP_RCPARAMS:
        raise ConfigError(f"Unknown configuration key '{key}'")
    default = AUGMAP_RCPARAMS[key]

    if default is None:
        # Optional integer (worker count)
        if value is None or (isinstance(value, int) and not isinstance(value, bool)):
            return value
        raise ConfigError(f"{key} must be an integer or null, got {value!r}")
    if isinstance(default, bool):
        if isinstance(value, bool):
            return value
        raise ConfigError(f"{key} must be true or false, got {value!r}")
    if isinstance(default, int):
        if isinstance(value, int) and not isinstance(value, bool):
            return value
        raise ConfigError(f"{key} must be an integer, got {value!r}")
    if isinstance(default, float):
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return float(value)
        raise ConfigError(f"{key} must be a number, got {value!r}")
    if isinstance(default, list):
        if isinstance(value, (list, tuple)):
            return list(value)
        raise ConfigError(f"{key} must be a list, got {value!r}")
    if isinstance(default, str):
        if isinstance(value, str):
            return value
        raise ConfigError(f"{key} must be a string, got {value!r}")
    return value


def parse_value(key: str, text: str) -> Any:
    """
    Parse a textual value (command-line override) for a registry key.

    Examples
    --------
    >>> parse_value("augmentation.epsilon", "0.05")
    0.05
    >>> parse_value("modeldb.shared_coarse", "true")
    True
    """
    try:
        value = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"Cannot parse value for {key}: {exc}") from exc
    return coerce_param(key, value)


def load_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    """
    Read a configuration file into a dict of validated overrides.

    Parameters
    ----------
    path : str or Path
        YAML file with a flat (or nested) mapping of parameter keys.

    Returns
    -------
    dict
        Dotted keys mapped to validated values.

    Raises
    ------
    ConfigError
        On YAML errors, non-mapping content or unknown keys.
    OSError
        If the file cannot be read.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise OSError(f"Cannot read configuration file {path}: {exc}") from exc

    try:
        content = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from exc

    if content is None:
        return {}
    if not isinstance(content, Mapping):
        raise ConfigError(f"{path}: configuration must be a mapping of keys")

    flat = _flatten(content)
    unknown = sorted(k for k in flat if k not in AUGMAP_RCPARAMS)
    if unknown:
        raise ConfigError(f"{path}: unknown configuration keys {unknown}")
    return {key: coerce_param(key, value) for key, value in flat.items()}
