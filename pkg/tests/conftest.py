"""Shared fixtures: parameter reset, procedural meshes and a small model database."""

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import numpy as np
import pytest

from augmap.cloud.core import PointCloud, apply_transform, concatenate
from augmap.cloud.io import save_cloud
from augmap.config.rcparams import reset_params
from augmap.evalkit.scenes import GroundTruth, Placement, TruthEntry
from augmap.evalkit.shapes import write_chair_set
from augmap.modeldb.database import build_database, save_database

CHAIR_CLASS = 1
FLOOR_CLASS = 0

# Two chairs far apart, yaws on the default 36-step lattice
SCENE_PLACEMENTS = (
    (0, 0.0, 0.0, math.pi / 2),
    (2, 3.0, 0.5, 0.0),
)

# Loosened thresholds so whole database chairs survive segmentation
E2E_CONFIG = """\
segmentation.don_threshold: 0.0
segmentation.cluster_gap: 0.2
segmentation.lambda_min: 0.05
segmentation.lambda_max: 2.0
"""


@pytest.fixture(autouse=True)
def _reset_params():
    reset_params()
    yield
    reset_params()


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture(scope="session")
def chair_meshes(tmp_path_factory) -> Path:
    """Five procedural chairs as OBJ files."""
    directory = tmp_path_factory.mktemp("meshes")
    write_chair_set(directory, 5, seed=3)
    return directory


@pytest.fixture(scope="session")
def small_db(chair_meshes):
    return build_database(
        chair_meshes, CHAIR_CLASS, surface_samples=4096, db_points=512, seed=0, workers=1
    )


@pytest.fixture(scope="session")
def db_dir(small_db, tmp_path_factory) -> Path:
    directory = tmp_path_factory.mktemp("db")
    save_database(small_db, directory)
    return directory


def floor_patch(xmin, ymin, xmax, ymax, spacing=0.05) -> PointCloud:
    xs = np.arange(xmin, xmax + spacing / 2, spacing)
    ys = np.arange(ymin, ymax + spacing / 2, spacing)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    points = np.column_stack([X.ravel(), Y.ravel(), np.zeros(X.size)])
    return PointCloud(points, labels=np.full(len(points), FLOOR_CLASS))


@pytest.fixture(scope="session")
def completion_scene(small_db, tmp_path_factory):
    """
    A labeled scene built from complete database chairs on a floor.

    Returns a dict with the scene files, the placed clouds and the truth.
    """
    directory = tmp_path_factory.mktemp("scene")
    ids = small_db.model_ids
    placed, entries = [], []
    for model_index, x, y, yaw in SCENE_PLACEMENTS:
        placement = Placement(ids[model_index], x, y, yaw)
        cloud = apply_transform(small_db[placement.model_id].cloud, placement.transform)
        cloud = cloud.with_labels(np.full(len(cloud), CHAIR_CLASS))
        placed.append(cloud)
        entries.append(TruthEntry(CHAIR_CLASS, cloud.centroid(), placement.model_id, placement))

    semantic = concatenate(placed + [floor_patch(-1.0, -1.0, 4.0, 1.5)])
    geometry = PointCloud(semantic.points)
    truth = GroundTruth(tuple(entries))

    config = directory / "config.yaml"
    config.write_text(E2E_CONFIG)
    return {
        "dir": directory,
        "semantic": semantic,
        "geometry": geometry,
        "placed": placed,
        "truth": truth,
        "S": save_cloud(semantic, directory / "S.ply", binary=True),
        "G": save_cloud(geometry, directory / "G.ply", binary=True),
        "truth_path": truth.to_json(directory / "truth.json"),
        "config": config,
    }
