import json

import numpy as np
import pytest

from rocapkit.config import CONFIG_VERSION, default_config, derive_seed, load_config, parse_config
from rocapkit.errors import ConfigError
from rocapkit.kinematics import reference_chain


def test_defaults():
    cfg = load_config()
    assert cfg.chain.n_joints == 6
    assert np.array_equal(cfg.chain.joint_limits, reference_chain().joint_limits)
    assert cfg.sampler["threshold"] == 0.35 and cfg.sampler["step_deg"] == 20.0
    assert cfg.object().name == "clamp"
    assert np.array_equal(cfg.tool_offset, np.eye(4))
    assert parse_config(default_config()).raw == cfg.raw


def test_partial_override_keeps_other_defaults():
    cfg = parse_config({"version": CONFIG_VERSION, "sampler": {"step_deg": 45}, "seed": 7})
    assert cfg.sampler["step_deg"] == 45 and cfg.sampler["threshold"] == 0.35
    assert cfg.seed == 7


@pytest.mark.parametrize("raw", [
    {},
    {"version": 99},
    {"version": CONFIG_VERSION, "colour": "blue"},
    {"version": CONFIG_VERSION, "sampler": {"stepdeg": 20}},
    {"version": CONFIG_VERSION, "intrinsics": {"fx": 1}},
    {"version": CONFIG_VERSION, "object": "teapot"},
    {"version": CONFIG_VERSION, "home": [0.0, 0.0]},
    {"version": CONFIG_VERSION, "objects": [
        {"name": "x", "category": "deformable", "states": [{"id": "a"}]},
        {"name": "x", "category": "deformable", "states": [{"id": "b"}]}]},
])
def test_bad_configs_are_rejected(raw):
    with pytest.raises(ConfigError):
        parse_config(raw)


def test_unknown_object_lookup():
    with pytest.raises(ConfigError):
        load_config().object("teapot")


def test_custom_objects_set_default():
    cfg = parse_config({"version": CONFIG_VERSION, "objects": [
        {"name": "mug", "category": "deformable", "states": [{"id": "a"}]}]})
    assert cfg.object().name == "mug" and list(cfg.objects) == ["mug"]


def test_load_from_file(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"version": CONFIG_VERSION, "seed": 3}))
    assert load_config(p).seed == 3
    p.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(p)


def test_stage_seeds():
    assert derive_seed(0, "augment") == derive_seed(0, "augment")
    assert derive_seed(0, "augment") != derive_seed(0, "capture")
    assert derive_seed(0, "augment") != derive_seed(1, "augment")
    assert 0 <= derive_seed(123, "x") < 2**32
    assert load_config().stage_seed("sampler") == derive_seed(0, "sampler")
