"""
The synthetic model database.

Each entry is a fixed-size cloud in the canonical model frame sampled from a
mesh. On disk a database is a directory::

    <dir>/manifest.json
    <dir>/models/<model_id>.ply

The manifest records the sampling parameters and, per entry, the model
file, λ, height and a SHA-256 checksum of the model file. Model files are
binary PLY so coordinates survive a save/load round trip exactly.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple, Union
import hashlib
import json
import logging

import numpy as np
from joblib import Parallel, delayed

from augmap.cloud.core import PointCloud, farthest_point_distance
from augmap.cloud.io import load_cloud, save_cloud
from augmap.config.rcparams import resolve_param
from augmap.modeldb.mesh import (
    canonicalize,
    farthest_point_subsample,
    find_meshes,
    read_mesh,
    sample_mesh_surface,
)
from augmap.utils.errors import AugmapError, ChecksumError, DatabaseError
from augmap.utils.io import file_checksum, write_json

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
MANIFEST_NAME = "manifest.json"
MANIFEST_VERSION = 1
MODELS_DIR = "models"
_FRAME_TOLERANCE = 1e-9


def model_seed(seed: int, model_id: str) -> int:
    """
    Per-model sampling seed derived from the database seed and the id.

    The result does not depend on the order models are ingested in.
    """
    digest = hashlib.sha256(f"{int(seed)}:{model_id}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


@dataclass(frozen=True, eq=False)
class ModelEntry:
    """
    One database model in its canonical frame.

    Attributes
    ----------
    model_id : str
        Stable, sortable identifier (mesh path relative to the mesh
        directory).
    class_id : int
        Semantic class.
    cloud : PointCloud
        Canonical cloud: min z = 0, xy-centroid at the origin.
    lambda_ : float
        Farthest-point distance of ``cloud``.
    height : float
        z-extent of ``cloud``.
    source : str
        Mesh the model was sampled from.
    """

    model_id: str
    class_id: int
    cloud: PointCloud
    lambda_: float
    height: float
    source: str = ""

    def __post_init__(self):
        if not self.model_id:
            raise ValueError("model_id cannot be empty")
        points = self.cloud.points
        if len(points) == 0:
            raise ValueError(f"model {self.model_id}: empty cloud")
        if abs(points[:, 2].min()) > _FRAME_TOLERANCE:
            raise ValueError(f"model {self.model_id}: min z must be 0")
        if np.any(np.abs(points[:, :2].mean(axis=0)) > _FRAME_TOLERANCE):
            raise ValueError(f"model {self.model_id}: xy-centroid must be the origin")
        if abs(farthest_point_distance(self.cloud) - self.lambda_) > _FRAME_TOLERANCE:
            raise ValueError(f"model {self.model_id}: lambda inconsistent with cloud")
        if abs(float(np.ptp(points[:, 2])) - self.height) > _FRAME_TOLERANCE:
            raise ValueError(f"model {self.model_id}: height inconsistent with cloud")

    @classmethod
    def from_cloud(cls, model_id: str, class_id: int, cloud: PointCloud, source: str = "") -> "ModelEntry":
        """Canonicalize ``cloud`` and measure λ and height."""
        canonical, _ = canonicalize(cloud)
        canonical = PointCloud(canonical.points)
        return cls(
            model_id=model_id,
            class_id=int(class_id),
            cloud=canonical,
            lambda_=farthest_point_distance(canonical),
            height=float(np.ptp(canonical.points[:, 2])),
            source=source,
        )

    def __len__(self) -> int:
        return len(self.cloud)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ModelEntry):
            return NotImplemented
        return (
            self.model_id == other.model_id
            and self.class_id == other.class_id
            and np.array_equal(self.cloud.points, other.cloud.points)
            and self.lambda_ == other.lambda_
            and self.height == other.height
            and self.source == other.source
        )

    def __hash__(self) -> int:
        return hash(self.model_id)


@dataclass(frozen=True)
class IngestFailure:
    """A mesh that could not be turned into a model."""

    source: str
    error: str


@dataclass(frozen=True, eq=False)
class ModelDatabase:
    """
    Immutable set of models, keyed and ordered by ``model_id``.

    Attributes
    ----------
    entries : dict
        model_id -> ModelEntry.
    db_points : int
        Points per model cloud.
    surface_samples : int
        Surface samples drawn per mesh before subsampling.
    seed : int
        Database sampling seed.
    failures : tuple of IngestFailure
        Meshes skipped at build time.
    """

    entries: Dict[str, ModelEntry]
    db_points: int
    surface_samples: int = 16384
    seed: int = 0
    failures: Tuple[IngestFailure, ...] = field(default=())

    def __post_init__(self):
        entries = dict(sorted(self.entries.items()))
        for model_id, entry in entries.items():
            if entry.model_id != model_id:
                raise ValueError(f"entry key {model_id!r} != model_id {entry.model_id!r}")
            if len(entry) != self.db_points:
                raise ValueError(
                    f"model {model_id} has {len(entry)} points, database expects {self.db_points}"
                )
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "failures", tuple(self.failures))

    @classmethod
    def from_entries(cls, entries: Iterable[ModelEntry], **metadata) -> "ModelDatabase":
        entries = list(entries)
        by_id = {e.model_id: e for e in entries}
        if len(by_id) != len(entries):
            raise ValueError("model_ids must be unique")
        if "db_points" not in metadata:
            metadata["db_points"] = len(entries[0]) if entries else 0
        return cls(entries=by_id, **metadata)

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, model_id: str) -> bool:
        return model_id in self.entries

    def __getitem__(self, model_id: str) -> ModelEntry:
        try:
            return self.entries[model_id]
        except KeyError:
            raise KeyError(f"unknown model_id {model_id!r}") from None

    def __iter__(self):
        return iter(self.entries.values())

    def __eq__(self, other) -> bool:
        if not isinstance(other, ModelDatabase):
            return NotImplemented
        return (
            self.db_points == other.db_points
            and self.surface_samples == other.surface_samples
            and self.seed == other.seed
            and self.entries == other.entries
        )

    @property
    def model_ids(self) -> List[str]:
        return list(self.entries)

    @property
    def classes(self) -> Dict[int, List[str]]:
        """class_id -> sorted model ids."""
        table: Dict[int, List[str]] = {}
        for entry in self.entries.values():
            table.setdefault(entry.class_id, []).append(entry.model_id)
        return dict(sorted(table.items()))

    def by_class(self, class_id: int) -> List[ModelEntry]:
        """Entries of one class, ordered by model_id."""
        return [e for e in self.entries.values() if e.class_id == class_id]


# =============================================================================
# Building
# =============================================================================

def ingest_model(
    mesh_path: PathLike,
    class_id: int,
    surface_samples: Optional[int] = None,
    db_points: Optional[int] = None,
    seed: int = 0,
    model_id: Optional[str] = None,
) -> ModelEntry:
    """
    Turn one mesh into a database entry.

    The surface is sampled uniformly by area with ``surface_samples``
    points, reduced to ``db_points`` by farthest-point subsampling, then
    canonicalized.

    Parameters
    ----------
    mesh_path : str or Path
        OBJ or PLY triangle soup.
    class_id : int
        Semantic class of the model.
    surface_samples : int, optional
        Defaults to ``rcParams["modeldb.surface_samples"]``.
    db_points : int, optional
        Defaults to ``rcParams["modeldb.db_points"]``.
    seed : int, default=0
        Sampling seed; the same seed gives the same entry.
    model_id : str, optional
        Defaults to the file name.

    Returns
    -------
    ModelEntry

    Raises
    ------
    DegenerateGeometryError
        If the mesh has no triangle or zero area.
    """
    surface_samples = int(resolve_param("modeldb.surface_samples", surface_samples))
    db_points = int(resolve_param("modeldb.db_points", db_points))
    if db_points > surface_samples:
        raise ValueError(
            f"db_points ({db_points}) cannot exceed surface_samples ({surface_samples})"
        )
    mesh_path = Path(mesh_path)
    vertices, faces = read_mesh(mesh_path)
    samples = sample_mesh_surface(vertices, faces, surface_samples, seed=seed)
    keep = farthest_point_subsample(samples, db_points, seed=seed)
    entry = ModelEntry.from_cloud(
        model_id or mesh_path.name, class_id, PointCloud(samples[keep]), source=str(mesh_path)
    )
    logger.debug("ingested %s: lambda=%.3f height=%.3f", entry.model_id, entry.lambda_, entry.height)
    return entry


def build_database(
    mesh_dir: PathLike,
    class_id: int,
    surface_samples: Optional[int] = None,
    db_points: Optional[int] = None,
    seed: Optional[int] = None,
    workers: Optional[int] = None,
    out_dir: Optional[PathLike] = None,
) -> ModelDatabase:
    """
    Ingest every OBJ/PLY mesh below ``mesh_dir``.

    Model ids are the mesh paths relative to ``mesh_dir``. Meshes that fail
    are recorded in ``failures`` and skipped.

    Parameters
    ----------
    mesh_dir : str or Path
        Directory searched recursively.
    class_id : int
        Class of every model.
    surface_samples, db_points : int, optional
        Sampling sizes, defaults from ``rcParams``.
    seed : int, optional
        Database seed, default ``rcParams["pipeline.seed"]``. Each model is
        sampled with :func:`model_seed`.
    workers : int, optional
        Parallel jobs; None uses all cores.
    out_dir : str or Path, optional
        When given, the database is saved there.

    Returns
    -------
    ModelDatabase

    Raises
    ------
    DatabaseError
        If no mesh could be ingested.
    """
    mesh_dir = Path(mesh_dir)
    surface_samples = int(resolve_param("modeldb.surface_samples", surface_samples))
    db_points = int(resolve_param("modeldb.db_points", db_points))
    seed = int(resolve_param("pipeline.seed", seed))
    workers = resolve_param("pipeline.workers", workers)
    meshes = find_meshes(mesh_dir)
    if not meshes:
        raise DatabaseError(f"no OBJ/PLY meshes found in {mesh_dir}")

    def ingest(path: Path):
        model_id = path.relative_to(mesh_dir).as_posix()
        try:
            return ingest_model(
                path, class_id, surface_samples, db_points,
                seed=model_seed(seed, model_id), model_id=model_id,
            )
        except (AugmapError, ValueError, OSError) as exc:
            logger.warning("skipping %s: %s", path, exc)
            return IngestFailure(source=str(path), error=str(exc))

    results = Parallel(n_jobs=_n_jobs(workers), prefer="threads")(
        delayed(ingest)(path) for path in meshes
    )
    entries = [r for r in results if isinstance(r, ModelEntry)]
    failures = [r for r in results if isinstance(r, IngestFailure)]
    if not entries:
        raise DatabaseError(f"all {len(meshes)} meshes in {mesh_dir} failed to ingest")
    logger.info("database: %d models, %d failures", len(entries), len(failures))

    db = ModelDatabase.from_entries(
        entries,
        db_points=db_points,
        surface_samples=surface_samples,
        seed=seed,
        failures=tuple(failures),
    )
    if out_dir is not None:
        save_database(db, out_dir)
    return db


def _n_jobs(workers: Optional[int]) -> int:
    return -1 if workers is None else int(workers)


def merge_databases(databases: Iterable[ModelDatabase]) -> ModelDatabase:
    """
    Union of databases sharing ``db_points``; model ids must be disjoint.
    """
    databases = list(databases)
    if not databases:
        raise DatabaseError("nothing to merge")
    first = databases[0]
    if any(db.db_points != first.db_points for db in databases):
        raise DatabaseError("cannot merge databases with different db_points")
    entries = [e for db in databases for e in db]
    return ModelDatabase.from_entries(
        entries,
        db_points=first.db_points,
        surface_samples=first.surface_samples,
        seed=first.seed,
        failures=tuple(f for db in databases for f in db.failures),
    )


# =============================================================================
# Persistence
# =============================================================================

def model_file(model_id: str) -> str:
    """Path of a model file relative to the database directory."""
    return f"{MODELS_DIR}/{model_id}.ply"


def save_database(db: ModelDatabase, directory: PathLike) -> Path:
    """
    Write the manifest and one binary PLY per model.

    Returns
    -------
    Path
        The manifest path.
    """
    directory = Path(directory)
    manifest_entries = {}
    for entry in db:
        relative = model_file(entry.model_id)
        path = save_cloud(entry.cloud, directory / relative, binary=True)
        manifest_entries[entry.model_id] = {
            "file": relative,
            "class_id": entry.class_id,
            "lambda": entry.lambda_,
            "height": entry.height,
            "source": entry.source,
            "checksum": file_checksum(path),
        }
    manifest = {
        "version": MANIFEST_VERSION,
        "db_points": db.db_points,
        "surface_samples": db.surface_samples,
        "seed": db.seed,
        "classes": {str(k): v for k, v in db.classes.items()},
        "entries": manifest_entries,
        "failures": [{"source": f.source, "error": f.error} for f in db.failures],
    }
    manifest_path = write_json(manifest, directory / MANIFEST_NAME)
    logger.info("saved database (%d models) to %s", len(db), directory)
    return manifest_path


def load_database(directory: PathLike) -> ModelDatabase:
    """
    Load a database written by :func:`save_database`.

    Raises
    ------
    DatabaseError
        If the manifest is missing or malformed, a model file is missing,
        or a model has the wrong number of points. The message names the
        file.
    ChecksumError
        If a model file does not match its recorded checksum.
    """
    directory = Path(directory)
    manifest_path = directory / MANIFEST_NAME
    if not manifest_path.is_file():
        raise DatabaseError(f"{manifest_path}: manifest not found")
    try:
        manifest = json.loads(manifest_path.read_text())
        version = manifest["version"]
        db_points = int(manifest["db_points"])
        records = manifest["entries"]
    except (ValueError, KeyError, TypeError) as exc:
        raise DatabaseError(f"{manifest_path}: corrupt manifest ({exc})") from exc
    if version != MANIFEST_VERSION:
        raise DatabaseError(f"{manifest_path}: unsupported version {version}")

    entries = []
    for model_id, record in sorted(records.items()):
        try:
            path = directory / record["file"]
            checksum = record["checksum"]
            class_id = int(record["class_id"])
        except (KeyError, TypeError, ValueError) as exc:
            raise DatabaseError(f"{manifest_path}: bad entry {model_id!r} ({exc})") from exc
        if not path.is_file():
            raise DatabaseError(f"{path}: model file missing")
        if file_checksum(path) != checksum:
            raise ChecksumError(f"{path}: checksum mismatch")
        cloud = load_cloud(path)
        if len(cloud) != db_points:
            raise DatabaseError(f"{path}: expected {db_points} points, found {len(cloud)}")
        try:
            entry = ModelEntry(
                model_id=model_id,
                class_id=class_id,
                cloud=PointCloud(cloud.points),
                lambda_=float(record["lambda"]),
                height=float(record["height"]),
                source=record.get("source", ""),
            )
        except (KeyError, ValueError) as exc:
            raise DatabaseError(f"{path}: {exc}") from exc
        entries.append(entry)

    failures = tuple(
        IngestFailure(f["source"], f["error"]) for f in manifest.get("failures", [])
    )
    return ModelDatabase.from_entries(
        entries,
        db_points=db_points,
        surface_samples=int(manifest.get("surface_samples", db_points)),
        seed=int(manifest.get("seed", 0)),
        failures=failures,
    )
