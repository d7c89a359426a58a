"""Tests for scene synthesis, rendering, procedural chairs and detection metrics."""

import math

import numpy as np
import pytest

from augmap.cloud import GroundedTransform, PointCloud, apply_transform
from augmap.evalkit import (
    Camera,
    ChairShape,
    EvalReport,
    GroundTruth,
    Placement,
    Room,
    SceneSpec,
    TruthEntry,
    chair_variants,
    completion_error,
    evaluate,
    f1_score,
    procedural_chair,
    random_placements,
    render_partial,
    report_from_counts,
    room_clutter,
    synthesize_scene,
    visible_indices,
    write_chair_set,
)
from augmap.modeldb import MatchResult, match_clusters
from augmap.registration import Alignment, RegistrationParams
from augmap.segmentation import SegmentationParams, extract_instances, filter_clusters
from augmap.utils.errors import EmptyCloudError

from conftest import CHAIR_CLASS, FLOOR_CLASS


def detection(cluster_id, centroid, class_id=CHAIR_CLASS, model_id="m.obj"):
    return MatchResult(
        cluster_id=cluster_id,
        class_id=class_id,
        model_id=model_id,
        alignment=Alignment(GroundedTransform(), 0.0, (0.0,), 0),
        world_transform=GroundedTransform(),
        delta=0.0,
        ranking=((model_id, 0.0),),
        centroid=centroid,
    )


def truth_of(*centroids, class_id=CHAIR_CLASS):
    return GroundTruth(tuple(
        TruthEntry(class_id, c, "m.obj", Placement("m.obj", c[0], c[1])) for c in centroids
    ))


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------

class TestCounts:
    def test_reported_counts(self):
        report = report_from_counts(11, 5, 8)
        assert (round(report.precision, 2), round(report.recall, 2), round(report.f1, 2)) == (
            0.69, 0.59, 0.63,
        )

    def test_perfect_recall(self):
        report = report_from_counts(4, 1, 0)
        assert report.precision == 0.8
        assert report.recall == 1.0
        assert report.f1 == pytest.approx(0.8889, abs=1e-4)

    def test_equal_precision_and_recall(self):
        report = report_from_counts(3, 2, 2)
        assert report.f1 == pytest.approx(report.precision)

    def test_empty(self):
        report = report_from_counts(0, 0, 0)
        assert (report.precision, report.recall, report.f1) == (0.0, 0.0, 0.0)

    def test_f1_zero(self):
        assert f1_score(0.0, 0.0) == 0.0

    def test_negative_count(self):
        with pytest.raises(ValueError):
            EvalReport(-1, 0, 0, 0.0, 0.0, 0.0)

    def test_table(self):
        table = report_from_counts(11, 5, 8).table()
        assert "precision" in table.splitlines()[0]
        assert "0.69" in table and "0.59" in table and "0.63" in table

    def test_json_round_trip(self, tmp_path):
        report = evaluate([detection(0, (0.1, 0.0, 0.4))], truth_of((0.0, 0.0, 0.4)))
        loaded = EvalReport.from_json(report.to_json(tmp_path / "eval.json"))
        assert loaded == report
        assert loaded.assignments == report.assignments


class TestEvaluate:
    def test_mixed_outcomes(self):
        truth = truth_of((0.0, 0.0, 0.4), (3.0, 0.0, 0.4))
        report = evaluate([detection(0, (0.1, 0.0, 0.4)), detection(1, (5.0, 0.0, 0.4))], truth)
        assert (report.tp, report.fp, report.fn) == (1, 1, 1)
        outcomes = {(a.outcome, a.cluster_id, a.truth_index) for a in report.assignments}
        assert outcomes == {("tp", 0, 0), ("fp", 1, None), ("fn", None, 1)}

    def test_threshold_inclusive(self):
        report = evaluate([detection(0, (0.5, 0.0, 0.0))], truth_of((0.0, 0.0, 0.0)), d_match=0.5)
        assert report.tp == 1

    def test_class_must_agree(self):
        report = evaluate([detection(0, (0.0, 0.0, 0.0), class_id=2)], truth_of((0.0, 0.0, 0.0)))
        assert (report.tp, report.fp, report.fn) == (0, 1, 1)

    def test_one_to_one(self):
        detections = [detection(0, (0.3, 0.0, 0.0)), detection(1, (0.1, 0.0, 0.0))]
        report = evaluate(detections, truth_of((0.0, 0.0, 0.0)))
        assert (report.tp, report.fp, report.fn) == (1, 1, 0)
        (tp,) = [a for a in report.assignments if a.outcome == "tp"]
        assert tp.cluster_id == 1

    def test_truth_order_does_not_matter(self, rng):
        centroids = [tuple(c) for c in rng.uniform(0, 4, size=(8, 3))]
        detections = [
            detection(i, tuple(np.asarray(c) + rng.normal(0, 0.2, 3)))
            for i, c in enumerate(centroids[:6])
        ]
        reference = evaluate(detections, truth_of(*centroids))
        for _ in range(5):
            shuffled = [centroids[i] for i in rng.permutation(len(centroids))]
            report = evaluate(detections, truth_of(*shuffled))
            assert (report.tp, report.fp, report.fn) == (reference.tp, reference.fp, reference.fn)
            tps = sorted(a.cluster_id for a in report.assignments if a.outcome == "tp")
            assert tps == sorted(a.cluster_id for a in reference.assignments if a.outcome == "tp")

    def test_detection_order_does_not_matter(self, rng):
        centroids = [tuple(c) for c in rng.uniform(0, 4, size=(8, 3))]
        detections = [
            detection(i, tuple(np.asarray(c) + rng.normal(0, 0.2, 3)))
            for i, c in enumerate(centroids[:6])
        ] + [detection(6, (9.0, 9.0, 0.4)), detection(7, (-5.0, 2.0, 0.4))]
        truth = truth_of(*centroids)
        reference = evaluate(detections, truth)
        for _ in range(5):
            shuffled = [detections[i] for i in rng.permutation(len(detections))]
            report = evaluate(shuffled, truth)
            assert (report.tp, report.fp, report.fn) == (reference.tp, reference.fp, reference.fn)
            assert report.assignments == reference.assignments

    def test_no_detections(self):
        report = evaluate([], truth_of((0.0, 0.0, 0.0), (1.0, 0.0, 0.0)))
        assert (report.tp, report.fp, report.fn) == (0, 0, 2)
        assert report.recall == 0.0


class TestCompletionError:
    def test_matches_brute_force(self, rng):
        a = PointCloud(rng.uniform(size=(40, 3)))
        b = PointCloud(rng.uniform(size=(30, 3)) + 0.1)
        d = np.linalg.norm(a.points[:, None] - b.points[None], axis=2)
        directed, symmetric = completion_error(a, b)
        assert directed == pytest.approx(d.min(axis=1).mean())
        assert symmetric == pytest.approx(0.5 * (d.min(axis=1).mean() + d.min(axis=0).mean()))

    def test_identical(self, small_db):
        cloud = small_db[small_db.model_ids[0]].cloud
        assert completion_error(cloud, cloud) == (0.0, 0.0)

    def test_empty(self):
        with pytest.raises(EmptyCloudError):
            completion_error(PointCloud(np.zeros((0, 3))), PointCloud([[0, 0, 0]]))


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------

def front_grid():
    axis = np.linspace(-0.5, 0.5, 5)
    Y, Z = np.meshgrid(axis, axis, indexing="ij")
    return np.column_stack([np.full(Y.size, 2.0), Y.ravel(), Z.ravel()])


class TestVisibility:
    def test_camera_basis(self):
        forward, right, up = Camera((0, 0, 0), (1, 0, 0)).basis()
        np.testing.assert_allclose(forward, [1, 0, 0])
        np.testing.assert_allclose(np.cross(right, forward), up, atol=1e-12)
        assert up[2] > 0.99

    def test_camera_needs_direction(self):
        with pytest.raises(ValueError):
            Camera((1, 1, 1), (1, 1, 1))

    def test_front_plane_hides_the_back_plane(self):
        front = front_grid()
        points = np.vstack([front, front * 1.5])
        seen = visible_indices(points, Camera((0, 0, 0), (1, 0, 0)), image_res=64, fov=60.0)
        np.testing.assert_array_equal(seen, np.arange(25))

    def test_points_behind_are_invisible(self):
        points = np.vstack([front_grid(), -front_grid()])
        seen = visible_indices(points, Camera((0, 0, 0), (1, 0, 0)), image_res=64, fov=60.0)
        assert seen.max() < 25

    def test_outside_the_field_of_view(self):
        points = np.array([[1.0, 0.0, 0.0], [1.0, 5.0, 0.0]])
        seen = visible_indices(points, Camera((0, 0, 0), (1, 0, 0)), fov=60.0)
        assert seen.tolist() == [0]


@pytest.fixture
def chair(small_db):
    return small_db[small_db.model_ids[0]].cloud


class TestRenderPartial:
    CAMERA = Camera((3.0, 0.0, 1.0), (0.0, 0.0, 0.4))

    def test_partial_is_part_of_the_model(self, chair):
        partial = render_partial(chair, self.CAMERA, image_res=128, noise_sigma=0.0)
        assert 0 < len(partial) < len(chair)
        model_rows = {tuple(p) for p in chair.points}
        assert all(tuple(p) in model_rows for p in partial.points)

    def test_noise_moves_points_along_rays(self, chair):
        clean = render_partial(chair, self.CAMERA, image_res=128, noise_sigma=0.0)
        noisy = render_partial(chair, self.CAMERA, image_res=128, noise_sigma=0.01, seed=3)
        assert len(clean) == len(noisy)
        shift = noisy.points - clean.points
        rays = clean.points - np.asarray(self.CAMERA.position)
        cross = np.linalg.norm(np.cross(shift, rays), axis=1)
        assert np.all(cross < 1e-9)
        assert np.abs(shift).max() > 0

    def test_deterministic(self, chair):
        a = render_partial(chair, self.CAMERA, image_res=128, noise_sigma=0.01, seed=7)
        b = render_partial(chair, self.CAMERA, image_res=128, noise_sigma=0.01, seed=7)
        np.testing.assert_array_equal(a.points, b.points)

    def test_camera_inside_bounding_box(self, chair):
        with pytest.raises(ValueError, match="inside"):
            render_partial(chair, Camera((0.0, 0.0, 0.3), (3.0, 0.0, 0.3)))

    def test_nothing_visible(self, chair):
        with pytest.raises(EmptyCloudError):
            render_partial(chair, Camera((3.0, 0.0, 1.0), (6.0, 0.0, 1.0)))

    def test_labels_follow_points(self, chair):
        labeled = chair.with_labels(np.full(len(chair), 4))
        partial = render_partial(labeled, self.CAMERA, image_res=64)
        assert np.all(partial.labels == 4)


# ---------------------------------------------------------------------------
# Scene synthesis
# ---------------------------------------------------------------------------

class TestRoomAndPlacements:
    def test_clutter_counts(self):
        room = Room(0.0, 0.0, 1.0, 1.0, wall_height=0.5)
        assert len(room_clutter(room, 0.1)) == 121 + 2 * 11 * 5 + 2 * 9 * 5
        assert len(room_clutter(Room(0.0, 0.0, 1.0, 1.0, walls=False), 0.1)) == 121

    def test_room_extent(self):
        with pytest.raises(ValueError):
            Room(1.0, 0.0, 0.0, 1.0)

    def test_nineteen_placements(self):
        room = Room(0.0, 0.0, 10.0, 10.0)
        placements = random_placements(["a.obj", "b.obj"], 19, room, seed=2)
        assert len(placements) == 19
        xy = np.array([(p.x, p.y) for p in placements])
        gaps = np.linalg.norm(xy[:, None] - xy[None], axis=2) + np.eye(19) * 99
        assert gaps.min() >= 1.0
        assert np.all((xy >= 0.6) & (xy <= 9.4))
        assert random_placements(["a.obj", "b.obj"], 19, room, seed=2) == placements

    def test_room_too_small(self):
        with pytest.raises(ValueError):
            random_placements(["a.obj"], 19, Room(0.0, 0.0, 2.0, 2.0), max_tries=500)

    def test_placement_must_be_finite(self):
        with pytest.raises(ValueError):
            Placement("a.obj", math.nan, 0.0)


@pytest.fixture
def scene_spec(small_db):
    ids = small_db.model_ids
    return SceneSpec(
        placements=(Placement(ids[0], 0.0, 0.0, 0.3), Placement(ids[1], 2.0, 1.0, 2.0)),
        cameras=(Camera((-1.5, -1.5, 1.5), (1.0, 0.5, 0.3)), Camera((3.5, 2.5, 1.5), (1.0, 0.5, 0.3))),
        room=Room(-2.0, -2.0, 4.0, 3.0, wall_height=1.0),
        noise_sigma=0.0,
        label_bleed=0.0,
        image_res=128,
        seed=1,
    )


class TestSynthesizeScene:
    def test_layers_agree(self, scene_spec, small_db):
        G, S, truth = synthesize_scene(scene_spec, small_db, clutter_spacing=0.1, workers=1)
        np.testing.assert_array_equal(G.points, S.points)
        assert G.labels is None
        assert set(np.unique(S.labels)) <= {FLOOR_CLASS, CHAIR_CLASS}
        assert 0 < np.sum(S.labels == CHAIR_CLASS) < 2 * small_db.db_points

    def test_truth(self, scene_spec, small_db, tmp_path):
        _, _, truth = synthesize_scene(scene_spec, small_db, clutter_spacing=0.1, workers=1)
        assert len(truth) == 2
        first = scene_spec.placements[0]
        placed = apply_transform(small_db[first.model_id].cloud, first.transform)
        np.testing.assert_allclose(truth.entries[0].centroid, placed.centroid())
        assert truth.entries[0].pose == first
        assert GroundTruth.from_json(truth.to_json(tmp_path / "truth.json")) == truth

    def test_object_points_without_noise_come_from_models(self, scene_spec, small_db):
        _, S, _ = synthesize_scene(scene_spec, small_db, clutter_spacing=0.1, workers=1)
        placed = np.vstack([
            apply_transform(small_db[p.model_id].cloud, p.transform).points
            for p in scene_spec.placements
        ])
        rows = {tuple(p) for p in placed}
        assert all(tuple(p) in rows for p in S.points[S.labels == CHAIR_CLASS])

    def test_label_bleed(self, scene_spec, small_db):
        _, clean, _ = synthesize_scene(scene_spec, small_db, clutter_spacing=0.1, workers=1)
        bleeding = SceneSpec.from_dict({**scene_spec.to_dict(), "label_bleed": 1.0})
        _, bled, _ = synthesize_scene(
            bleeding, small_db, bleed_radius=0.1, clutter_spacing=0.1, workers=1
        )
        np.testing.assert_array_equal(clean.points, bled.points)
        assert np.sum(bled.labels == CHAIR_CLASS) >= np.sum(clean.labels == CHAIR_CLASS)

    def test_workers_do_not_change_the_scene(self, scene_spec, small_db):
        a = synthesize_scene(scene_spec, small_db, clutter_spacing=0.1, workers=1)
        b = synthesize_scene(scene_spec, small_db, clutter_spacing=0.1, workers=2)
        np.testing.assert_array_equal(a[1].points, b[1].points)
        np.testing.assert_array_equal(a[1].labels, b[1].labels)

    def test_missing_model(self, scene_spec, small_db):
        spec = SceneSpec(
            placements=(Placement("nope.obj", 0.0, 0.0),), cameras=scene_spec.cameras
        )
        with pytest.raises(KeyError, match="nope.obj"):
            synthesize_scene(spec, small_db)

    def test_spec_json_round_trip(self, scene_spec, tmp_path):
        assert SceneSpec.from_json(scene_spec.to_json(tmp_path / "scene.json")) == scene_spec

    def test_spec_needs_camera(self):
        with pytest.raises(ValueError):
            SceneSpec(placements=(), cameras=())


# ---------------------------------------------------------------------------
# Procedural chairs
# ---------------------------------------------------------------------------

class TestShapes:
    def test_chair_mesh(self):
        vertices, faces = procedural_chair(ChairShape())
        assert faces.min() >= 0 and faces.max() < len(vertices)
        assert vertices[:, 2].min() == 0.0
        assert vertices[:, 2].max() == pytest.approx(0.85)

    def test_armrests_add_parts(self):
        plain = procedural_chair(ChairShape())[1]
        armed = procedural_chair(ChairShape(armrests=True))[1]
        assert len(armed) > len(plain)

    def test_variants(self):
        shapes = chair_variants(6, seed=1)
        assert len(set(shapes)) == 6
        assert chair_variants(6, seed=1) == shapes

    def test_chair_set_names(self, tmp_path):
        paths = write_chair_set(tmp_path, 3, seed=0)
        assert [p.name for p in paths] == ["chair_00.obj", "chair_01.obj", "chair_02.obj"]


# ---------------------------------------------------------------------------
# End to end
# ---------------------------------------------------------------------------

class TestEndToEnd:
    @pytest.mark.slow
    def test_five_chairs_three_cameras(self, small_db):
        ids = small_db.model_ids
        target = (1.6, 1.0, 0.3)
        spec = SceneSpec(
            placements=(
                Placement(ids[0], 0.0, 0.0, 0.4),
                Placement(ids[1], 1.6, 0.2, 2.1),
                Placement(ids[2], 3.2, 0.0, 4.0),
                Placement(ids[3], 0.8, 1.8, 5.5),
                Placement(ids[4], 2.6, 1.9, 1.2),
            ),
            cameras=(
                Camera((-1.2, -1.2, 2.0), target),
                Camera((4.4, -1.2, 2.0), target),
                Camera((1.6, 3.4, 2.0), target),
            ),
            room=Room(-1.5, -1.5, 4.7, 3.7, wall_height=1.0),
            noise_sigma=0.005,
            label_bleed=0.05,
            image_res=256,
            seed=2,
        )
        _, S, truth = synthesize_scene(spec, small_db, clutter_spacing=0.05, workers=1)

        params = SegmentationParams(
            don_threshold=0.0, cluster_gap=0.15, min_points=50, lambda_range=(0.05, 2.0)
        )
        kept, _ = filter_clusters(extract_instances(S, CHAIR_CLASS, params), params)
        results = match_clusters(kept, small_db, RegistrationParams(scale_policy="fixed"), workers=1)
        report = evaluate(results, truth)
        assert report.f1 >= 0.8
