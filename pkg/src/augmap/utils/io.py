"""
File I/O utilities for augmap.

This module provides helpers shared by every writer: parent-directory
creation, JSON / JSON-lines output, checksums, and saving preview figures.
"""

from typing import Any, Dict, Iterable, List, Optional, Union
from pathlib import Path
import hashlib
import json
import logging

import matplotlib.pyplot as plt
from matplotlib.figure import Figure

from augmap.config.rcparams import resolve_param

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def ensure_parent(filepath: PathLike) -> Path:
    """
    Create the parent directory of ``filepath`` if needed.

    Parameters
    ----------
    filepath : str or Path
        Destination file.

    Returns
    -------
    Path
        ``filepath`` as a Path.
    """
    path = Path(filepath)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def file_checksum(filepath: PathLike) -> str:
    """
    SHA-256 hex digest of a file's bytes.

    Examples
    --------
    >>> file_checksum("db/models/chair_01.ply")  # doctest: +SKIP
    'e3b0c442...'
    """
    digest = hashlib.sha256()
    with open(filepath, "rb") as handle:
        for block in iter(lambda: handle.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def write_json(data: Any, filepath: PathLike) -> Path:
    """
    Write ``data`` as indented JSON with sorted keys (byte-stable output).
    """
    path = ensure_parent(filepath)
    try:
        with open(path, "w") as handle:
            json.dump(data, handle, indent=2, sort_keys=True)
            handle.write("\n")
    except OSError as exc:
        raise OSError(f"Cannot write {path}: {exc}") from exc
    logger.debug("wrote %s", path)
    return path


def read_json(filepath: PathLike) -> Any:
    """Read a JSON document."""
    with open(filepath) as handle:
        return json.load(handle)


def write_jsonl(records: Iterable[Dict[str, Any]], filepath: PathLike) -> Path:
    """
    Write one JSON object per line, keys sorted.
    """
    path = ensure_parent(filepath)
    try:
        with open(path, "w") as handle:
            for record in records:
                handle.write(json.dumps(record, sort_keys=True) + "\n")
    except OSError as exc:
        raise OSError(f"Cannot write {path}: {exc}") from exc
    logger.debug("wrote %s", path)
    return path


def read_jsonl(filepath: PathLike) -> List[Dict[str, Any]]:
    """Read a JSON-lines file, skipping blank lines."""
    with open(filepath) as handle:
        return [json.loads(line) for line in handle if line.strip()]


def savefig(
    filepath: PathLike,
    fig: Optional[Figure] = None,
    dpi: Optional[int] = None,
    bbox_inches: str = "tight",
    **kwargs: Any,
) -> Path:
    """
    Save a preview figure, creating parent directories.

    Parameters
    ----------
    filepath : str or Path
        Output file path. The extension selects the format.
    fig : Figure, optional
        Figure to save. Defaults to the current figure.
    dpi : int, optional
        Dots per inch. Defaults to ``rcParams["plot.dpi"]``.
    bbox_inches : str, default='tight'
        Bounding box setting.
    **kwargs : Any
        Passed to ``Figure.savefig``.

    Returns
    -------
    Path
        The written file.
    """
    dpi = resolve_param("plot.dpi", dpi)
    path = ensure_parent(filepath)
    fig = fig if fig is not None else plt.gcf()
    fig.savefig(path, dpi=dpi, bbox_inches=bbox_inches, **kwargs)
    print(f"Figure saved to: {path}")
    return path
