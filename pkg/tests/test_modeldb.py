"""Tests for mesh sampling, the model database and the exhaustive search."""

import math
import shutil

import numpy as np
import pytest

from augmap.cloud import GroundedTransform, PointCloud, angle_difference, apply_transform
from augmap.evalkit import Camera, Placement, render_partial, write_chair_set
from augmap.modeldb import (
    MatchResult,
    ModelDatabase,
    ModelEntry,
    build_database,
    canonicalize,
    farthest_point_subsample,
    ingest_model,
    load_database,
    match,
    match_clusters,
    merge_databases,
    model_seed,
    read_match_report,
    sample_mesh_surface,
    save_database,
    write_match_report,
)
from augmap.modeldb.search import _prepare_partial
from augmap.registration import RegistrationParams
from augmap.segmentation import Cluster
from augmap.utils.errors import ChecksumError, DatabaseError, DegenerateGeometryError

from conftest import CHAIR_CLASS

# Unit square split in two triangles
SQUARE_V = np.array([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]], dtype=float)
SQUARE_F = np.array([[0, 1, 2], [0, 2, 3]])


def placed_cluster(db, model_index, x, y, yaw, cluster_id=0):
    """A database model placed in the world as a labeled cluster."""
    placement = Placement(db.model_ids[model_index], x, y, yaw)
    cloud = apply_transform(db[placement.model_id].cloud, placement.transform)
    cloud = cloud.with_labels(np.full(len(cloud), CHAIR_CLASS))
    return Cluster(cloud, class_id=CHAIR_CLASS, cluster_id=cluster_id), placement


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------

class TestSampling:
    def test_samples_lie_on_the_surface(self):
        samples = sample_mesh_surface(SQUARE_V, SQUARE_F, 500, seed=1)
        assert samples.shape == (500, 3)
        assert np.all(samples[:, 2] == 0.0)
        assert np.all((samples[:, :2] >= -1e-12) & (samples[:, :2] <= 1.0 + 1e-12))

    def test_density_follows_area(self):
        # areas 0.5 and 1.5, far apart in x
        vertices = np.array(
            [[0, 0, 0], [1, 0, 0], [0, 1, 0], [10, 0, 0], [13, 0, 0], [10, 1, 0]], dtype=float
        )
        faces = np.array([[0, 1, 2], [3, 4, 5]])
        samples = sample_mesh_surface(vertices, faces, 20000, seed=2)
        assert np.mean(samples[:, 0] >= 10) == pytest.approx(0.75, abs=0.02)

    def test_seeded(self):
        a = sample_mesh_surface(SQUARE_V, SQUARE_F, 50, seed=4)
        b = sample_mesh_surface(SQUARE_V, SQUARE_F, 50, seed=4)
        np.testing.assert_array_equal(a, b)

    def test_seed_changes_samples(self):
        a = sample_mesh_surface(SQUARE_V, SQUARE_F, 50, seed=4)
        b = sample_mesh_surface(SQUARE_V, SQUARE_F, 50, seed=5)
        assert not np.array_equal(a, b)

    def test_zero_area(self):
        vertices = np.array([[0, 0, 0], [1, 0, 0], [2, 0, 0]], dtype=float)
        with pytest.raises(DegenerateGeometryError):
            sample_mesh_surface(vertices, np.array([[0, 1, 2]]), 10)

    def test_no_triangles(self):
        with pytest.raises(DegenerateGeometryError):
            sample_mesh_surface(SQUARE_V, np.zeros((0, 3), dtype=int), 10)


class TestFarthestPointSubsample:
    def test_second_pick_is_farthest(self):
        points = np.column_stack([np.arange(10.0), np.zeros(10), np.zeros(10)])
        chosen = farthest_point_subsample(points, 2, seed=0)
        first = points[chosen[0], 0]
        assert points[chosen[1], 0] == (0.0 if first >= 4.5 else 9.0)

    def test_unique_indices(self, rng):
        chosen = farthest_point_subsample(rng.uniform(size=(200, 3)), 50, seed=1)
        assert len(np.unique(chosen)) == 50

    def test_count_at_least_size(self):
        np.testing.assert_array_equal(farthest_point_subsample(np.zeros((4, 3)), 9), np.arange(4))

    def test_spreads_points(self, rng):
        points = rng.uniform(size=(400, 3))
        fps = points[farthest_point_subsample(points, 20, seed=0)]
        rand = points[rng.choice(400, 20, replace=False)]

        def min_gap(p):
            d = np.linalg.norm(p[:, None] - p[None], axis=2)
            return d[~np.eye(len(p), dtype=bool)].min()

        assert min_gap(fps) > min_gap(rand)


class TestCanonicalize:
    def test_frame(self, rng):
        cloud = PointCloud(rng.uniform([2, 3, 1], [4, 5, 2], size=(100, 3)))
        canonical, shift = canonicalize(cloud)
        assert canonical.points[:, 2].min() == 0.0
        np.testing.assert_allclose(canonical.points[:, :2].mean(axis=0), 0.0, atol=1e-12)
        np.testing.assert_allclose(shift.apply(cloud.points), canonical.points, atol=1e-12)


# ---------------------------------------------------------------------------
# Database
# ---------------------------------------------------------------------------

class TestModelEntry:
    def test_model_seed(self):
        assert model_seed(0, "a.obj") == model_seed(0, "a.obj")
        assert model_seed(0, "a.obj") != model_seed(0, "b.obj")
        assert model_seed(0, "a.obj") != model_seed(1, "a.obj")

    def test_ingest_is_deterministic(self, chair_meshes):
        mesh = sorted(chair_meshes.glob("*.obj"))[0]
        a = ingest_model(mesh, CHAIR_CLASS, surface_samples=1024, db_points=128, seed=7)
        b = ingest_model(mesh, CHAIR_CLASS, surface_samples=1024, db_points=128, seed=7)
        assert a == b
        assert len(a) == 128
        assert a.model_id == mesh.name

    def test_db_points_bounded_by_samples(self, chair_meshes):
        mesh = sorted(chair_meshes.glob("*.obj"))[0]
        with pytest.raises(ValueError):
            ingest_model(mesh, CHAIR_CLASS, surface_samples=100, db_points=200)

    def test_canonical_frame_required(self):
        cloud = PointCloud([[0.0, 0.0, 1.0], [1.0, 0.0, 1.0]])
        with pytest.raises(ValueError):
            ModelEntry("m", 1, cloud, lambda_=0.5, height=0.0)

    def test_from_cloud(self):
        entry = ModelEntry.from_cloud("m", 1, PointCloud([[1.0, 0.0, 2.0], [3.0, 0.0, 2.0]]))
        assert entry.lambda_ == 1.0
        assert entry.height == 0.0


class TestBuildDatabase:
    def test_small_database(self, small_db):
        assert len(small_db) == 5
        assert small_db.model_ids == sorted(small_db.model_ids)
        assert small_db.model_ids[0] == "chair_00.obj"
        assert small_db.db_points == 512
        assert small_db.classes == {CHAIR_CLASS: small_db.model_ids}
        assert small_db.failures == ()

    def test_failing_mesh_is_recorded(self, chair_meshes, tmp_path):
        shutil.copy(sorted(chair_meshes.glob("*.obj"))[0], tmp_path / "good.obj")
        (tmp_path / "flat.obj").write_text("v 0 0 0\nv 1 0 0\nv 2 0 0\nf 1 2 3\n")
        db = build_database(tmp_path, CHAIR_CLASS, surface_samples=512, db_points=64, workers=1)
        assert db.model_ids == ["good.obj"]
        assert len(db.failures) == 1
        assert db.failures[0].source.endswith("flat.obj")

    def test_nested_ids(self, chair_meshes, tmp_path):
        shutil.copy(sorted(chair_meshes.glob("*.obj"))[0], tmp_path / "a.obj")
        (tmp_path / "sub").mkdir()
        shutil.copy(sorted(chair_meshes.glob("*.obj"))[1], tmp_path / "sub" / "b.obj")
        db = build_database(tmp_path, CHAIR_CLASS, surface_samples=512, db_points=64, workers=1)
        assert db.model_ids == ["a.obj", "sub/b.obj"]

    def test_no_meshes(self, tmp_path):
        with pytest.raises(DatabaseError):
            build_database(tmp_path, CHAIR_CLASS)

    def test_workers_do_not_change_the_result(self, chair_meshes):
        kwargs = dict(surface_samples=1024, db_points=128, seed=5)
        serial = build_database(chair_meshes, CHAIR_CLASS, workers=1, **kwargs)
        threaded = build_database(chair_meshes, CHAIR_CLASS, workers=3, **kwargs)
        assert serial == threaded

    def test_merge(self, small_db):
        ids = small_db.model_ids
        left = ModelDatabase.from_entries([small_db[i] for i in ids[:2]], db_points=512,
                                          surface_samples=4096, seed=0)
        right = ModelDatabase.from_entries([small_db[i] for i in ids[2:]], db_points=512,
                                           surface_samples=4096, seed=0)
        assert merge_databases([right, left]) == small_db

    def test_merge_rejects_duplicates(self, small_db):
        with pytest.raises(ValueError):
            merge_databases([small_db, small_db])

    def test_merge_nothing(self):
        with pytest.raises(DatabaseError):
            merge_databases([])


class TestPersistence:
    def test_round_trip(self, small_db, db_dir):
        assert load_database(db_dir) == small_db
        assert (db_dir / "manifest.json").is_file()
        assert (db_dir / "models" / "chair_00.obj.ply").is_file()

    def test_tampered_model(self, db_dir, tmp_path):
        copy = shutil.copytree(db_dir, tmp_path / "db")
        target = copy / "models" / "chair_01.obj.ply"
        target.write_bytes(target.read_bytes() + b"\0")
        with pytest.raises(ChecksumError, match="chair_01"):
            load_database(copy)

    def test_missing_model(self, db_dir, tmp_path):
        copy = shutil.copytree(db_dir, tmp_path / "db")
        (copy / "models" / "chair_02.obj.ply").unlink()
        with pytest.raises(DatabaseError, match="missing"):
            load_database(copy)

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(DatabaseError, match="manifest"):
            load_database(tmp_path)

    def test_corrupt_manifest(self, db_dir, tmp_path):
        copy = shutil.copytree(db_dir, tmp_path / "db")
        (copy / "manifest.json").write_text("{not json")
        with pytest.raises(DatabaseError):
            load_database(copy)

    def test_save_is_byte_stable(self, small_db, tmp_path):
        a = save_database(small_db, tmp_path / "a")
        b = save_database(small_db, tmp_path / "b")
        assert a.read_bytes() == b.read_bytes()


# ---------------------------------------------------------------------------
# Search
# ---------------------------------------------------------------------------

class TestMatch:
    def test_finds_the_placed_model(self, small_db):
        cluster, placement = placed_cluster(small_db, 1, 2.0, 1.0, math.pi / 2)
        result = match(cluster, small_db, workers=1)

        assert result.model_id == placement.model_id
        assert result.delta < 1e-6
        assert result.world_transform.yaw == pytest.approx(math.pi / 2, abs=1e-6)
        np.testing.assert_allclose(result.world_transform.translation, (2.0, 1.0, 0.0), atol=1e-6)
        np.testing.assert_allclose(result.centroid, cluster.cloud.centroid(), atol=1e-6)

    def test_ranking(self, small_db):
        cluster, _ = placed_cluster(small_db, 3, -1.0, 0.5, 0.0)
        result = match(cluster, small_db, top_k=5, workers=1)
        assert len(result.ranking) == 5
        assert sorted(m for m, _ in result.ranking) == small_db.model_ids
        keys = [(d, m) for m, d in result.ranking]
        assert keys == sorted(keys)
        assert result.ranking[0] == (result.model_id, result.delta)
        assert all(d > result.delta for _, d in result.ranking[1:])

    def test_top_k_truncates(self, small_db):
        cluster, _ = placed_cluster(small_db, 0, 0.0, 0.0, 0.0)
        assert len(match(cluster, small_db, top_k=2, workers=1).ranking) == 2

    def test_workers_do_not_change_the_result(self, small_db):
        cluster, _ = placed_cluster(small_db, 2, 1.0, 1.0, math.pi)
        serial = match(cluster, small_db, workers=1)
        threaded = match(cluster, small_db, workers=3)
        assert serial.to_record() == threaded.to_record()

    def test_shared_coarse_yaw(self, small_db):
        cluster, _ = placed_cluster(small_db, 4, 0.0, 0.0, 0.0)
        result = match(cluster, small_db, workers=1, shared_coarse=True)
        assert result.model_id in small_db
        assert len(result.ranking) == 5

    def test_pose_equivariance(self, small_db):
        model_id = small_db.model_ids[1]
        cluster, _ = placed_cluster(small_db, 1, 0.4, -0.3, 0.3)
        keep = small_db[model_id].cloud.points[:, 0] < 0.1
        cropped = Cluster(cluster.cloud.subset(keep), class_id=CHAIR_CLASS, cluster_id=0)

        moved = GroundedTransform(2.0 * math.pi * 7 / 36, (0.7, -0.4, 0.0), 1.0)
        rotated = Cluster(apply_transform(cropped.cloud, moved), class_id=CHAIR_CLASS, cluster_id=0)

        before = match(cropped, small_db, workers=1)
        after = match(rotated, small_db, workers=1)
        assert after.model_id == before.model_id
        assert after.delta == pytest.approx(before.delta, abs=1e-6)
        turned = angle_difference(after.world_transform.yaw, before.world_transform.yaw)
        assert turned == pytest.approx(moved.yaw, abs=1e-5)
        points = small_db[before.model_id].cloud.points
        np.testing.assert_allclose(
            after.world_transform.apply(points),
            moved.apply(before.world_transform.apply(points)),
            atol=1e-5,
        )

    def test_missing_class(self, small_db):
        cloud = PointCloud([[0, 0, 0], [0, 0, 1], [1, 0, 0]], labels=[7, 7, 7])
        with pytest.raises(DatabaseError, match="class 7"):
            match(Cluster(cloud, class_id=7, cluster_id=0), small_db)

    def test_large_partials_are_subsampled(self, rng):
        local = PointCloud(rng.uniform(size=(300, 3)))
        sample = _prepare_partial(local, 100, seed=0)
        assert len(sample) == 100
        assert set(map(tuple, sample.points)) <= set(map(tuple, local.points))
        np.testing.assert_array_equal(_prepare_partial(local, 500, seed=0).points, local.points)

    @pytest.mark.slow
    @pytest.mark.parametrize("k", [5, 13, 22, 31])
    def test_every_model_identified(self, small_db, k):
        yaw = 2.0 * math.pi * k / 36
        for index, model_id in enumerate(small_db.model_ids):
            cluster, _ = placed_cluster(small_db, index, 0.5 * index, -1.0, yaw, cluster_id=index)
            result = match(cluster, small_db, workers=1)
            assert result.model_id == model_id
            assert result.delta < 1e-6


class TestMatchReport:
    def test_round_trip(self, small_db, tmp_path):
        clusters = [
            placed_cluster(small_db, 1, 5.0, 0.0, 0.0, cluster_id=4)[0],
            placed_cluster(small_db, 0, 0.0, 0.0, math.pi / 2, cluster_id=2)[0],
        ]
        results = match_clusters(clusters, small_db, workers=1)
        path = write_match_report(results, tmp_path / "matches.jsonl")
        loaded = read_match_report(path)
        assert [r.cluster_id for r in loaded] == [2, 4]
        assert loaded == sorted(results, key=lambda r: r.cluster_id)

    def test_ranking_order_is_checked(self, small_db):
        cluster, _ = placed_cluster(small_db, 0, 0.0, 0.0, 0.0)
        record = match(cluster, small_db, workers=1).to_record()
        record["ranking"] = list(reversed(record["ranking"]))
        with pytest.raises(ValueError):
            MatchResult.from_record(record)


# ---------------------------------------------------------------------------
# Identification rates
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def twenty_chairs(tmp_path_factory):
    directory = tmp_path_factory.mktemp("twenty")
    write_chair_set(directory, 20, seed=11)
    return build_database(
        directory, CHAIR_CLASS, surface_samples=4096, db_points=384, seed=0, workers=None
    )


class TestIdentification:
    @pytest.mark.slow
    def test_identity_and_yaw_rates(self, twenty_chairs):
        rng = np.random.default_rng(5)
        params = RegistrationParams(scale_policy="fixed")
        ids = twenty_chairs.model_ids
        identified = yaw_recovered = 0
        for index, model_id in enumerate(ids):
            yaw = float(rng.uniform(0.0, 2.0 * math.pi))
            placed = apply_transform(twenty_chairs[model_id].cloud, Placement(model_id, 0.0, 0.0, yaw).transform)
            azimuth = float(rng.uniform(0.0, 2.0 * math.pi))
            camera = Camera((2.0 * math.cos(azimuth), 2.0 * math.sin(azimuth), 1.5), (0.0, 0.0, 0.4))
            view = render_partial(placed, camera, image_res=512, noise_sigma=0.005, seed=index)

            # floor points around the legs that took the chair label
            n_bleed = max(1, len(view) // 20)
            angle = rng.uniform(0.0, 2.0 * math.pi, n_bleed)
            radius = rng.uniform(0.3, 0.4, n_bleed)
            bleed = np.column_stack([radius * np.cos(angle), radius * np.sin(angle), np.zeros(n_bleed)])
            points = np.vstack([view.points, bleed])
            cluster = Cluster(
                PointCloud(points, labels=np.full(len(points), CHAIR_CLASS)),
                class_id=CHAIR_CLASS, cluster_id=index,
            )

            result = match(cluster, twenty_chairs, params, workers=1)
            identified += result.model_id == model_id
            yaw_recovered += angle_difference(result.world_transform.yaw, yaw) <= math.radians(10.0)

        assert identified / len(ids) >= 0.5
        assert yaw_recovered / len(ids) >= 0.7
