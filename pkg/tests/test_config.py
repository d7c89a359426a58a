"""Tests for the parameter registry and configuration files."""

import pytest

from augmap.config import (
    AUGMAP_RCPARAMS,
    load_config_file,
    parse_value,
    rc_context,
    rcParams,
    reset_params,
    resolve_param,
)
from augmap.config.loader import coerce_param
from augmap.utils.errors import ConfigError


# ---------------------------------------------------------------------------
# Registry
# ---------------------------------------------------------------------------

class TestRegistry:
    def test_documented_defaults(self):
        assert rcParams["segmentation.r_small"] == 0.05
        assert rcParams["segmentation.r_large"] == 0.20
        assert rcParams["segmentation.cluster_gap"] == 0.05
        assert rcParams["segmentation.lambda_min"] == 0.1
        assert rcParams["segmentation.lambda_max"] == 0.25
        assert rcParams["registration.yaw_samples"] == 36
        assert rcParams["augmentation.epsilon"] == 0.1
        assert rcParams["costmap.z_min"] == 0.1
        assert rcParams["costmap.z_max"] == 1.0
        assert rcParams["costmap.resolution"] == 0.05
        assert rcParams["evalkit.d_match"] == 0.5
        assert rcParams["pipeline.workers"] is None

    def test_resolve_prefers_explicit_value(self):
        assert resolve_param("augmentation.epsilon", 0.05) == 0.05
        assert resolve_param("augmentation.epsilon") == 0.1

    def test_resolve_unknown_key(self):
        with pytest.raises(KeyError):
            resolve_param("augmentation.nope")

    def test_set_unknown_key_rejected(self):
        with pytest.raises(KeyError):
            rcParams["segmentation.radius"] = 0.1

    def test_update_is_all_or_nothing(self):
        with pytest.raises(KeyError):
            rcParams.update({"augmentation.epsilon": 0.3, "bogus.key": 1})
        assert rcParams["augmentation.epsilon"] == 0.1

    def test_reset(self):
        rcParams["registration.yaw_samples"] = 72
        reset_params()
        assert rcParams["registration.yaw_samples"] == 36

    def test_rc_context_restores(self):
        with rc_context({"costmap.z_max": 0.8}):
            assert rcParams["costmap.z_max"] == 0.8
        assert rcParams["costmap.z_max"] == 1.0

    def test_rc_context_restores_after_error(self):
        with pytest.raises(RuntimeError):
            with rc_context({"costmap.z_max": 0.8}):
                raise RuntimeError("boom")
        assert rcParams["costmap.z_max"] == 1.0

    def test_snapshot_is_a_copy(self):
        snapshot = rcParams.snapshot()
        snapshot["augmentation.epsilon"] = 9.0
        assert rcParams["augmentation.epsilon"] == 0.1
        assert set(snapshot) == set(AUGMAP_RCPARAMS)


# ---------------------------------------------------------------------------
# Coercion
# ---------------------------------------------------------------------------

class TestCoercion:
    def test_int_promoted_to_float(self):
        value = coerce_param("augmentation.epsilon", 1)
        assert value == 1.0 and isinstance(value, float)

    def test_bool_is_not_an_int(self):
        with pytest.raises(ConfigError):
            coerce_param("registration.yaw_samples", True)

    def test_string_for_number_rejected(self):
        with pytest.raises(ConfigError):
            coerce_param("costmap.resolution", "fine")

    def test_optional_workers(self):
        assert coerce_param("pipeline.workers", None) is None
        assert coerce_param("pipeline.workers", 4) == 4
        with pytest.raises(ConfigError):
            coerce_param("pipeline.workers", 2.5)

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="Unknown"):
            coerce_param("costmap.robot_height", 1.0)

    def test_parse_value(self):
        assert parse_value("augmentation.epsilon", "0.05") == 0.05
        assert parse_value("modeldb.shared_coarse", "true") is True
        assert parse_value("registration.grounding", "floor") == "floor"


# ---------------------------------------------------------------------------
# Files
# ---------------------------------------------------------------------------

class TestConfigFile:
    def test_flat_keys(self, tmp_path):
        path = tmp_path / "run.yaml"
        path.write_text("augmentation.epsilon: 0.2\nregistration.yaw_samples: 72\n")
        assert load_config_file(path) == {
            "augmentation.epsilon": 0.2,
            "registration.yaw_samples": 72,
        }

    def test_nested_keys_flattened(self, tmp_path):
        path = tmp_path / "run.yaml"
        path.write_text("segmentation:\n  r_small: 0.04\n  min_points: 50\n")
        assert load_config_file(path) == {
            "segmentation.r_small": 0.04,
            "segmentation.min_points": 50,
        }

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.yaml"
        path.write_text("")
        assert load_config_file(path) == {}

    def test_unknown_key(self, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text("segmentation.radius: 0.1\n")
        with pytest.raises(ConfigError):
            load_config_file(path)

    def test_not_a_mapping(self, tmp_path):
        path = tmp_path / "list.yaml"
        path.write_text("- 1\n- 2\n")
        with pytest.raises(ConfigError):
            load_config_file(path)

    def test_invalid_yaml(self, tmp_path):
        path = tmp_path / "broken.yaml"
        path.write_text("augmentation.epsilon: [0.1\n")
        with pytest.raises(ConfigError):
            load_config_file(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            load_config_file(tmp_path / "absent.yaml")
