"""Tests for cloud, mesh and helper file formats."""

import numpy as np
import pytest

from augmap.cloud import PointCloud, load_cloud, read_vertex_property, save_cloud
from augmap.modeldb.mesh import read_mesh, triangle_areas
from augmap.utils.errors import CloudFormatError
from augmap.utils.io import file_checksum, read_json, read_jsonl, write_json, write_jsonl


@pytest.fixture
def labeled_cloud(rng):
    n = 25
    normals = rng.normal(size=(n, 3))
    normals /= np.linalg.norm(normals, axis=1, keepdims=True)
    return PointCloud(
        rng.uniform(-3, 3, size=(n, 3)),
        normals=normals,
        labels=rng.integers(0, 5, size=n),
        colors=rng.integers(0, 256, size=(n, 3)),
    )


# ---------------------------------------------------------------------------
# PLY
# ---------------------------------------------------------------------------

class TestPly:
    def test_ascii_round_trip_at_six_decimals(self, tmp_path, labeled_cloud):
        path = save_cloud(labeled_cloud, tmp_path / "c.ply")
        loaded = load_cloud(path)
        np.testing.assert_allclose(loaded.points, labeled_cloud.points, atol=5.1e-7)
        np.testing.assert_array_equal(loaded.labels, labeled_cloud.labels)
        np.testing.assert_array_equal(loaded.colors, labeled_cloud.colors)
        np.testing.assert_allclose(np.linalg.norm(loaded.normals, axis=1), 1.0)

    def test_ascii_keeps_six_decimals(self, tmp_path):
        path = save_cloud(PointCloud([[1.0, 0.1234567891, -0.125]]), tmp_path / "c.ply")
        assert path.read_text().startswith("ply\nformat ascii 1.0\n")
        assert load_cloud(path).points.tolist() == [[1.0, 0.123457, -0.125]]

    def test_random_round_trip_is_exact_at_declared_precision(self, tmp_path, rng):
        n = 1000
        normals = rng.normal(size=(n, 3))
        normals /= np.linalg.norm(normals, axis=1, keepdims=True)
        cloud = PointCloud(
            rng.uniform(-50, 50, size=(n, 3)),
            normals=normals,
            labels=rng.integers(0, 256, size=n),
            colors=rng.integers(0, 256, size=(n, 3)),
        )
        loaded = load_cloud(save_cloud(cloud, tmp_path / "big.ply"))
        np.testing.assert_array_equal(loaded.points, np.round(cloud.points, 6))
        np.testing.assert_allclose(loaded.normals, cloud.normals, atol=2e-6)
        np.testing.assert_array_equal(loaded.labels, cloud.labels)
        np.testing.assert_array_equal(loaded.colors, cloud.colors)

    def test_header_declares_all_properties(self, tmp_path, labeled_cloud):
        text = save_cloud(labeled_cloud, tmp_path / "c.ply").read_text()
        header = text[: text.index("end_header")]
        for name in ("x", "y", "z", "nx", "ny", "nz", "class_id", "red", "green", "blue"):
            assert f" {name}\n" in header

    def test_binary_round_trip_is_exact(self, tmp_path, labeled_cloud):
        path = save_cloud(labeled_cloud, tmp_path / "c.ply", binary=True)
        loaded = load_cloud(path)
        np.testing.assert_array_equal(loaded.points, labeled_cloud.points)
        np.testing.assert_array_equal(loaded.labels, labeled_cloud.labels)

    def test_unlabeled_cloud_loads_without_labels(self, tmp_path):
        path = save_cloud(PointCloud([[0.0, 0.0, 0.0]]), tmp_path / "c.ply")
        assert load_cloud(path).labels is None

    def test_empty_cloud(self, tmp_path):
        path = save_cloud(PointCloud(np.zeros((0, 3))), tmp_path / "empty.ply")
        assert load_cloud(path).is_empty

    def test_labels_must_fit_uchar(self, tmp_path):
        with pytest.raises(ValueError):
            save_cloud(PointCloud([[0, 0, 0]], labels=[300]), tmp_path / "c.ply")

    def test_extra_property(self, tmp_path):
        cloud = PointCloud([[0, 0, 0], [1, 1, 1]])
        path = save_cloud(cloud, tmp_path / "c.ply", extra={"provenance": ("ushort", [0, 3])})
        assert read_vertex_property(path, "provenance").tolist() == [0, 3]
        with pytest.raises(CloudFormatError):
            read_vertex_property(path, "intensity")

    def test_parent_directories_created(self, tmp_path):
        path = save_cloud(PointCloud([[0, 0, 0]]), tmp_path / "a" / "b" / "c.ply")
        assert path.is_file()

    def test_bad_row_names_line(self, tmp_path):
        path = tmp_path / "bad.ply"
        path.write_text(
            "ply\nformat ascii 1.0\nelement vertex 2\n"
            "property float x\nproperty float y\nproperty float z\nend_header\n"
            "0 0 0\n1 oops 1\n"
        )
        with pytest.raises(CloudFormatError) as info:
            load_cloud(path)
        assert info.value.line == 9
        assert ":9:" in str(info.value)

    def test_missing_magic(self, tmp_path):
        path = tmp_path / "bad.ply"
        path.write_text("not a ply\nend_header\n")
        with pytest.raises(CloudFormatError):
            load_cloud(path)

    def test_non_finite_coordinates(self, tmp_path):
        path = tmp_path / "nan.ply"
        path.write_text(
            "ply\nformat ascii 1.0\nelement vertex 1\n"
            "property float x\nproperty float y\nproperty float z\nend_header\n"
            "0 nan 0\n"
        )
        with pytest.raises(CloudFormatError) as info:
            load_cloud(path)
        assert info.value.line == 8

    def test_truncated_file_names_line(self, tmp_path):
        path = tmp_path / "short.ply"
        path.write_text(
            "ply\nformat ascii 1.0\ncomment two rows declared\nelement vertex 2\n"
            "property float x\nproperty float y\nproperty float z\nend_header\n"
            "0 0 0\n1 2\n"
        )
        with pytest.raises(CloudFormatError) as info:
            load_cloud(path)
        assert info.value.line == 10

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            load_cloud(tmp_path / "absent.ply")


# ---------------------------------------------------------------------------
# PCD
# ---------------------------------------------------------------------------

PCD_HEADER = (
    "# .PCD v0.7\nVERSION 0.7\nFIELDS x y z label\nSIZE 4 4 4 4\nTYPE F F F U\n"
    "COUNT 1 1 1 1\nWIDTH 2\nHEIGHT 1\nPOINTS 2\nDATA ascii\n"
)


class TestPcd:
    def test_labels_read(self, tmp_path):
        path = tmp_path / "s.pcd"
        path.write_text(PCD_HEADER + "0.5 1.5 2.5 3\n1 2 3 1\n")
        cloud = load_cloud(path)
        assert cloud.points.tolist() == [[0.5, 1.5, 2.5], [1.0, 2.0, 3.0]]
        assert cloud.labels.tolist() == [3, 1]

    def test_point_count_mismatch(self, tmp_path):
        path = tmp_path / "s.pcd"
        path.write_text(PCD_HEADER + "0.5 1.5 2.5 3\n")
        with pytest.raises(CloudFormatError):
            load_cloud(path)

    def test_binary_data_rejected(self, tmp_path):
        path = tmp_path / "s.pcd"
        path.write_text(PCD_HEADER.replace("DATA ascii", "DATA binary"))
        with pytest.raises(CloudFormatError):
            load_cloud(path)

    def test_short_row(self, tmp_path):
        path = tmp_path / "s.pcd"
        path.write_text(PCD_HEADER + "0.5 1.5 2.5 3\n1 2\n")
        with pytest.raises(CloudFormatError) as info:
            load_cloud(path)
        assert info.value.line == 12


# ---------------------------------------------------------------------------
# Meshes
# ---------------------------------------------------------------------------

class TestMeshes:
    def test_obj_quads_are_triangulated(self, tmp_path):
        path = tmp_path / "quad.obj"
        path.write_text("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n")
        vertices, faces = read_mesh(path)
        assert vertices.shape == (4, 3)
        assert faces.shape == (2, 3)
        assert triangle_areas(vertices, faces).sum() == pytest.approx(1.0)

    def test_ply_mesh(self, tmp_path):
        path = tmp_path / "quad.ply"
        path.write_text(
            "ply\nformat ascii 1.0\nelement vertex 4\n"
            "property float x\nproperty float y\nproperty float z\n"
            "element face 1\nproperty list uchar int vertex_indices\nend_header\n"
            "0 0 0\n2 0 0\n2 1 0\n0 1 0\n4 0 1 2 3\n"
        )
        vertices, faces = read_mesh(path)
        assert vertices.shape == (4, 3)
        assert triangle_areas(vertices, faces).sum() == pytest.approx(2.0)

    def test_obj_index_out_of_range(self, tmp_path):
        path = tmp_path / "bad.obj"
        path.write_text("v 0 0 0\nv 1 0 0\nf 1 2 7\n")
        with pytest.raises(CloudFormatError):
            read_mesh(path)

    def test_obj_without_faces(self, tmp_path):
        path = tmp_path / "points.obj"
        path.write_text("# chair\nv 0 0 0\nv 1 0 0\n")
        with pytest.raises(CloudFormatError):
            read_mesh(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            read_mesh(tmp_path / "absent.obj")

    def test_unsupported_suffix(self, tmp_path):
        path = tmp_path / "mesh.stl"
        path.write_text("solid")
        with pytest.raises(CloudFormatError):
            read_mesh(path)


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

class TestHelpers:
    def test_json_is_byte_stable(self, tmp_path):
        a = write_json({"b": 1, "a": [1, 2]}, tmp_path / "a.json")
        b = write_json({"a": [1, 2], "b": 1}, tmp_path / "b.json")
        assert a.read_bytes() == b.read_bytes()
        assert read_json(a) == {"a": [1, 2], "b": 1}

    def test_jsonl(self, tmp_path):
        path = write_jsonl([{"x": 1}, {"x": 2}], tmp_path / "r.jsonl")
        assert read_jsonl(path) == [{"x": 1}, {"x": 2}]

    def test_checksum_changes_with_content(self, tmp_path):
        path = tmp_path / "f.bin"
        path.write_bytes(b"abc")
        before = file_checksum(path)
        assert before == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        path.write_bytes(b"abd")
        assert file_checksum(path) != before
