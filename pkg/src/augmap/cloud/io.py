"""
Point-cloud file I/O.

Supported formats:
- PLY, ASCII and binary little-endian (read/write through plyfile). Vertex
  properties ``x y z`` (float or double), optional ``nx ny nz``, optional
  ``class_id`` (uchar), optional ``red green blue``.
- PCD, ASCII (read only), fields ``x y z`` and optional ``label``.

ASCII writers round floating-point values to a fixed number of decimals
(``rcParams["cloud.precision"]``, 6 by default) so that
``load_cloud(save_cloud(c))`` reproduces the rounded coordinates exactly.
"""

from pathlib import Path
from typing import Dict, List, Mapping, Optional, Tuple, Union
import logging

import numpy as np
from plyfile import PlyData, PlyElement, PlyElementParseError, PlyHeaderParseError

from augmap.cloud.core import PointCloud
from augmap.config.rcparams import resolve_param
from augmap.utils.errors import CloudFormatError
from augmap.utils.io import ensure_parent

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

# PLY scalar type names and their numpy dtypes
PLY_TYPES: Dict[str, str] = {
    "char": "i1", "uchar": "u1",
    "short": "i2", "ushort": "u2",
    "int": "i4", "uint": "u4",
    "float": "f4", "double": "f8",
}


# =============================================================================
# PLY reading
# =============================================================================

def _ascii_row_lines(path: Path) -> Optional[Dict[str, int]]:
    """
    Line number of the row before each element's first row in an ASCII PLY,
    or None for binary files.
    """
    starts: Dict[str, int] = {}
    counts: List[Tuple[str, int]] = []
    ascii_format = False
    with open(path, "rb") as handle:
        for number, raw in enumerate(handle, start=1):
            words = raw.decode("ascii", errors="replace").split()
            if words[:2] == ["format", "ascii"]:
                ascii_format = True
            elif words[:1] == ["element"] and len(words) == 3 and words[2].isdigit():
                counts.append((words[1], int(words[2])))
            elif words[:1] == ["end_header"]:
                if not ascii_format:
                    return None
                line = number
                for name, count in counts:
                    starts[name] = line
                    line += count
                return starts
    return None


def read_ply(path: PathLike) -> Dict[str, Dict[str, np.ndarray]]:
    """
    Read every element of a PLY file.

    Parameters
    ----------
    path : str or Path
        PLY file (ASCII or binary).

    Returns
    -------
    dict
        Element name -> property name -> values. Scalar properties are
        float64 arrays; list properties (faces) are lists of int lists.

    Raises
    ------
    CloudFormatError
        On malformed content or non-finite values, with the offending line
        number for ASCII files.
    """
    path = Path(path)
    if not path.is_file():
        raise OSError(f"Cannot read {path}: no such file")
    try:
        ply = PlyData.read(str(path))
    except PlyHeaderParseError as exc:
        raise CloudFormatError(f"bad PLY header: {exc.message}", path, exc.line) from exc
    except PlyElementParseError as exc:
        starts = _ascii_row_lines(path)
        line = None
        if starts is not None and exc.element is not None and exc.row is not None:
            line = starts.get(exc.element.name, 0) + exc.row + 1
        raise CloudFormatError(exc.message, path, line) from exc
    except (ValueError, TypeError, IndexError) as exc:
        raise CloudFormatError(f"cannot parse PLY: {exc}", path) from exc

    starts = _ascii_row_lines(path) if ply.text else None
    data: Dict[str, Dict[str, np.ndarray]] = {}
    for element in ply.elements:
        columns: Dict[str, np.ndarray] = {}
        for prop in element.properties:
            values = element.data[prop.name]
            if values.dtype == object:
                columns[prop.name] = [[int(i) for i in v] for v in values]
                continue
            values = np.asarray(values, dtype=np.float64)
            bad = np.flatnonzero(~np.isfinite(values))
            if len(bad):
                line = None if starts is None else starts[element.name] + int(bad[0]) + 1
                raise CloudFormatError(f"non-finite value in property '{prop.name}'", path, line)
            columns[prop.name] = values
        data[element.name] = columns
    return data


# =============================================================================
# PCD reading
# =============================================================================

def read_pcd(path: PathLike) -> Dict[str, np.ndarray]:
    """
    Read an ASCII PCD file into a dict of columns.

    Raises
    ------
    CloudFormatError
        On malformed headers, binary data sections or bad rows.
    """
    path = Path(path)
    try:
        lines = path.read_text(errors="replace").splitlines()
    except OSError as exc:
        raise OSError(f"Cannot read {path}: {exc}") from exc

    fields: Optional[List[str]] = None
    counts: Optional[List[int]] = None
    n_points: Optional[int] = None
    data_line = None
    for number, raw in enumerate(lines, start=1):
        words = raw.split()
        if not words or words[0].startswith("#"):
            continue
        keyword = words[0].upper()
        if keyword == "FIELDS":
            fields = words[1:]
        elif keyword == "COUNT":
            counts = [int(w) for w in words[1:]]
        elif keyword == "POINTS":
            n_points = int(words[1])
        elif keyword == "DATA":
            if len(words) < 2 or words[1].lower() != "ascii":
                raise CloudFormatError("only 'DATA ascii' PCD files are supported", path, number)
            data_line = number
            break
    if fields is None or data_line is None:
        raise CloudFormatError("incomplete PCD header", path)
    if counts is not None and any(c != 1 for c in counts):
        raise CloudFormatError("PCD fields with COUNT > 1 are not supported", path)

    rows = []
    for number in range(data_line + 1, len(lines) + 1):
        words = lines[number - 1].split()
        if not words:
            continue
        if len(words) != len(fields):
            raise CloudFormatError(
                f"expected {len(fields)} values, got {len(words)}", path, number
            )
        try:
            values = [float(w) for w in words]
        except ValueError:
            raise CloudFormatError("non-numeric value", path, number)
        if not np.all(np.isfinite(values)):
            raise CloudFormatError("non-finite value", path, number)
        rows.append(values)

    if n_points is not None and n_points != len(rows):
        raise CloudFormatError(
            f"header declares {n_points} points, found {len(rows)}", path
        )
    table = np.array(rows, dtype=np.float64).reshape(len(rows), len(fields))
    return {name: table[:, i] for i, name in enumerate(fields)}


# =============================================================================
# Cloud assembly
# =============================================================================

def _cloud_from_columns(columns: Mapping[str, np.ndarray], path: PathLike, label_key: str) -> PointCloud:
    missing = [axis for axis in ("x", "y", "z") if axis not in columns]
    if missing:
        raise CloudFormatError(f"missing vertex properties {missing}", path)
    points = np.column_stack([columns["x"], columns["y"], columns["z"]])
    if not np.all(np.isfinite(points)):
        raise CloudFormatError("non-finite coordinates", path)

    normals = None
    if all(k in columns for k in ("nx", "ny", "nz")):
        normals = np.column_stack([columns["nx"], columns["ny"], columns["nz"]])
        norms = np.linalg.norm(normals, axis=1, keepdims=True)
        # Renormalise what the fixed-precision text representation rounded
        normals = np.divide(normals, norms, out=np.zeros_like(normals), where=norms > 1e-3)

    labels = None
    if label_key in columns:
        labels = np.asarray(columns[label_key]).astype(np.int64)

    colors = None
    if all(k in columns for k in ("red", "green", "blue")):
        colors = np.column_stack([columns["red"], columns["green"], columns["blue"]])

    return PointCloud(points, normals, labels, colors)


def load_cloud(path: PathLike) -> PointCloud:
    """
    Load a point cloud from a PLY or PCD file.

    Parameters
    ----------
    path : str or Path
        ``.ply`` (ASCII or binary little-endian) or ``.pcd`` (ASCII).

    Returns
    -------
    PointCloud
        Points in file order; labels populated iff the file has a
        ``class_id`` (PLY) or ``label`` (PCD) property.

    Raises
    ------
    CloudFormatError
        On malformed input or non-finite coordinates, naming the line.

    Examples
    --------
    >>> cloud = load_cloud("scene.ply")  # doctest: +SKIP
    """
    path = Path(path)
    if path.suffix.lower() == ".pcd":
        cloud = _cloud_from_columns(read_pcd(path), path, label_key="label")
    else:
        elements = read_ply(path)
        if "vertex" not in elements:
            raise CloudFormatError("no 'vertex' element", path)
        cloud = _cloud_from_columns(elements["vertex"], path, label_key="class_id")
    logger.debug("loaded %d points from %s", len(cloud), path)
    return cloud


def read_vertex_property(path: PathLike, name: str) -> np.ndarray:
    """
    Read one extra per-vertex property (e.g. ``provenance``) of a PLY file.

    Raises
    ------
    CloudFormatError
        If the property does not exist.
    """
    vertex = read_ply(path).get("vertex", {})
    if name not in vertex:
        raise CloudFormatError(f"no vertex property '{name}'", path)
    return np.asarray(vertex[name])


# =============================================================================
# Writing
# =============================================================================

def _vertex_columns(
    cloud: PointCloud, extra: Optional[Mapping[str, Tuple[str, np.ndarray]]]
) -> List[Tuple[str, str, np.ndarray]]:
    columns = [
        ("x", "double", cloud.points[:, 0]),
        ("y", "double", cloud.points[:, 1]),
        ("z", "double", cloud.points[:, 2]),
    ]
    if cloud.normals is not None:
        columns += [(axis, "double", cloud.normals[:, i]) for i, axis in enumerate(("nx", "ny", "nz"))]
    if cloud.labels is not None:
        if len(cloud.labels) and cloud.labels.max() > 255:
            raise ValueError("class_id values must fit in uint8")
        columns.append(("class_id", "uchar", cloud.labels))
    if cloud.colors is not None:
        columns += [(c, "uchar", cloud.colors[:, i]) for i, c in enumerate(("red", "green", "blue"))]
    for name, (ply_type, values) in (extra or {}).items():
        values = np.asarray(values)
        if len(values) != len(cloud):
            raise ValueError(f"extra property '{name}' must have {len(cloud)} entries")
        columns.append((name, ply_type, values))
    return columns


def save_cloud(
    cloud: PointCloud,
    path: PathLike,
    binary: Optional[bool] = None,
    precision: Optional[int] = None,
    extra: Optional[Mapping[str, Tuple[str, np.ndarray]]] = None,
) -> Path:
    """
    Write a cloud as PLY.

    Parameters
    ----------
    cloud : PointCloud
        Cloud to write; normals, labels and colors are written when present.
    path : str or Path
        Destination file; parent directories are created.
    binary : bool, optional
        Binary little-endian instead of ASCII. Default from
        ``rcParams["cloud.binary"]`` (False).
    precision : int, optional
        Decimal digits kept for floating-point values in ASCII files.
        Default from ``rcParams["cloud.precision"]`` (6).
    extra : dict, optional
        Additional vertex properties, ``name -> (ply_type, values)``, e.g.
        ``{"provenance": ("ushort", tags)}``.

    Returns
    -------
    Path
        The written file.

    Raises
    ------
    OSError
        If the destination cannot be written (message names the path).
    """
    binary = resolve_param("cloud.binary", binary)
    precision = resolve_param("cloud.precision", precision)
    path = ensure_parent(path)
    columns = _vertex_columns(cloud, extra)

    table = np.empty(len(cloud), dtype=[(name, "<" + PLY_TYPES[t]) for name, t, _ in columns])
    for name, ply_type, values in columns:
        values = np.asarray(values)
        if not binary and PLY_TYPES[ply_type].startswith("f"):
            values = np.round(values.astype(np.float64), precision)
        table[name] = values
    ply = PlyData(
        [PlyElement.describe(table, "vertex")],
        text=not binary,
        byte_order="<",
        comments=["augmap"],
    )
    try:
        ply.write(str(path))
    except OSError as exc:
        raise OSError(f"Cannot write {path}: {exc}") from exc

    logger.debug("saved %d points to %s", len(cloud), path)
    return path
