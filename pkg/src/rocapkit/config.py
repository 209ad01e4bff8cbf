"""Toolkit configuration (JSON).

A config holds the arm model, camera, checkerboard, sampler settings, object
specs, augmentation ranges, default file paths and one master seed. Unknown
keys are rejected and ``version`` is mandatory. Stage seeds are derived from
the master seed by hashing the stage name, so adding a stage never shifts the
randomness of another.
"""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from .camera import CameraIntrinsics, Checkerboard, default_checkerboard, default_intrinsics
from .capture import ObjectSpec, example_objects
from .errors import ConfigError
from .kinematics import DHChain, reference_chain
from .transforms import transform_from_list, transform_to_list

CONFIG_VERSION = 1

_num = {"type": "number"}
_vec3 = {"type": "array", "items": _num, "minItems": 3, "maxItems": 3}
_mat16 = {"type": "array", "items": _num, "minItems": 16, "maxItems": 16}
_range = {"type": "array", "items": _num, "minItems": 2, "maxItems": 2}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["version"],
    "properties": {
        "version": {"const": CONFIG_VERSION},
        "seed": {"type": "integer"},
        "chain": {
            "type": "array", "minItems": 1,
            "items": {
                "type": "object", "additionalProperties": False,
                "required": ["a", "alpha", "d"],
                "properties": {k: _num for k in
                               ("a", "alpha", "d", "theta_offset", "limit_min", "limit_max")},
            },
        },
        "home": {"type": "array", "items": _num},
        "intrinsics": {
            "type": "object", "additionalProperties": False,
            "required": ["fx", "fy", "cx", "cy", "width", "height"],
            "properties": {"fx": _num, "fy": _num, "cx": _num, "cy": _num,
                           "width": {"type": "integer"}, "height": {"type": "integer"}},
        },
        "checkerboard": {
            "type": "object", "additionalProperties": False,
            "required": ["inner_rows", "inner_cols", "square_size"],
            "properties": {"inner_rows": {"type": "integer"}, "inner_cols": {"type": "integer"},
                           "square_size": _num},
        },
        "sampler": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "step_deg": _num, "threshold": _num, "capture_position": _vec3,
                "tool_offset": _mat16, "ordering": {"enum": ["grid", "nearest"]},
                "position_jitter": _num,
            },
        },
        "objects": {
            "type": "array", "minItems": 1,
            "items": {
                "type": "object", "additionalProperties": False,
                "required": ["name", "category", "states"],
                "properties": {
                    "name": {"type": "string"},
                    "category": {"enum": ["deformable", "viewing_angle_dependent", "articulated"]},
                    "gripper_to_object": _mat16,
                    "states": {
                        "type": "array", "minItems": 1,
                        "items": {
                            "type": "object", "additionalProperties": False,
                            "required": ["id"],
                            "properties": {"id": {"type": "string"}, "name": {"type": "string"},
                                           "change": {"enum": ["automatic", "manual"]},
                                           "grip_force": _num},
                        },
                    },
                },
            },
        },
        "object": {"type": "string"},
        "augmentation": {
            "type": "object", "additionalProperties": False,
            "properties": {"exposure_gain": _range, "contrast": _range, "saturation": _range},
        },
        "annotate": {
            "type": "object", "additionalProperties": False,
            "properties": {"cube_size": _num, "min_inside_ratio": _num, "hue_range": _range,
                           "min_sat": _num, "min_val": _num, "min_count": {"type": "integer"}},
        },
        "render": {
            "type": "object", "additionalProperties": False,
            "properties": {"object_extent": _num, "image_ext": {"enum": [".png", ".ppm"]}},
        },
        "paths": {
            "type": "object", "additionalProperties": False,
            "properties": {k: {"type": "string"} for k in (
                "stations", "calibration", "plan", "coverage", "manifest", "frames",
                "prompts", "masks", "predictions", "report")},
        },
    },
}


def default_config() -> dict:
    objs = example_objects()
    return {
        "version": CONFIG_VERSION,
        "seed": 0,
        "chain": reference_chain().to_list(),
        "intrinsics": default_intrinsics().to_dict(),
        "checkerboard": default_checkerboard().to_dict(),
        "sampler": {
            "step_deg": 20.0,
            "threshold": 0.35,
            "capture_position": [-0.4, 0.1, 0.4],
            "tool_offset": transform_to_list(np.eye(4)),
            "ordering": "grid",
            "position_jitter": 0.0,
        },
        "objects": [o.to_dict() for o in objs.values()],
        "object": "clamp",
        "augmentation": {"exposure_gain": [0.7, 1.3], "contrast": [0.7, 1.3],
                         "saturation": [0.5, 1.5]},
        "annotate": {"cube_size": 0.15, "min_inside_ratio": 0.8, "hue_range": [90.0, 150.0],
                     "min_sat": 0.4, "min_val": 0.2, "min_count": 25},
        "render": {"object_extent": 0.1, "image_ext": ".png"},
        "paths": {},
    }


@dataclass
class ToolkitConfig:
    raw: dict
    chain: DHChain
    intrinsics: CameraIntrinsics
    checkerboard: Checkerboard
    objects: dict[str, ObjectSpec]
    seed: int = 0
    sampler: dict = field(default_factory=dict)
    augmentation: dict = field(default_factory=dict)
    annotate: dict = field(default_factory=dict)
    render: dict = field(default_factory=dict)
    paths: dict = field(default_factory=dict)
    home: np.ndarray | None = None
    default_object: str | None = None

    def object(self, name: str | None = None) -> ObjectSpec:
        name = name or self.default_object or next(iter(self.objects))
        if name not in self.objects:
            raise ConfigError(f"unknown object {name!r}; known: {sorted(self.objects)}")
        return self.objects[name]

    def stage_seed(self, stage: str) -> int:
        return derive_seed(self.seed, stage)

    @property
    def tool_offset(self) -> np.ndarray:
        return transform_from_list(self.sampler["tool_offset"])


def derive_seed(seed: int, stage: str) -> int:
    h = hashlib.sha256(f"{int(seed)}/{stage}".encode()).digest()
    return int.from_bytes(h[:4], "little")


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def parse_config(raw: dict) -> ToolkitConfig:
    """Validate ``raw`` against the schema, fill defaults and build typed fields."""
    try:
        jsonschema.validate(raw, SCHEMA)
    except jsonschema.ValidationError as e:
        where = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise ConfigError(f"config error at {where}: {e.message}") from None
    full = _merge(default_config(), raw)
    if "objects" in raw and "object" not in raw:
        full["object"] = raw["objects"][0]["name"]
    try:
        chain = DHChain.from_list(full["chain"])
        intr = CameraIntrinsics.from_dict(full["intrinsics"])
        board = Checkerboard.from_dict(full["checkerboard"])
        objects = {}
        for o in full["objects"]:
            spec = ObjectSpec.from_dict(o)
            if spec.name in objects:
                raise ValueError(f"duplicate object name {spec.name!r}")
            objects[spec.name] = spec
        transform_from_list(full["sampler"]["tool_offset"])
    except (ValueError, KeyError) as e:
        raise ConfigError(f"invalid config: {e}") from None
    home = None
    if "home" in full:
        home = np.asarray(full["home"], dtype=float)
        if home.size != chain.n_joints:
            raise ConfigError("home has the wrong number of joints")
    default_obj = full.get("object")
    if default_obj is not None and default_obj not in objects:
        raise ConfigError(f"default object {default_obj!r} is not defined")
    return ToolkitConfig(full, chain, intr, board, objects, int(full.get("seed", 0)),
                         full["sampler"], full["augmentation"], full["annotate"],
                         full["render"], full.get("paths", {}), home, default_obj)


def load_config(path=None) -> ToolkitConfig:
    if path is None:
        return parse_config({"version": CONFIG_VERSION})
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: not valid JSON ({e})") from None
    return parse_config(raw)
