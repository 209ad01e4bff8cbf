"""Simulated capture sessions and pose labeling.

Every captured frame is labeled with the camera-to-object transform::

    ^cT_o = ^cT_b  ^bT_g  ^gT_o

where ``^cT_b`` comes from eye-to-hand calibration, ``^bT_g`` from forward
kinematics of the logged joint angles and ``^gT_o`` is the grasp offset
(identity when the object shares the gripper frame).
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .camera import CameraIntrinsics, project_point, project_points
from .errors import BehindCamera, CalibrationMissing, DataError, PlanChainMismatch
from .kinematics import DHChain, forward_kinematics
from .transforms import (compose, quat_from_matrix, transform_from_list,
                         transform_to_list)

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
CATEGORIES = ("deformable", "viewing_angle_dependent", "articulated")
PLAN_TOLERANCE = 1e-9


@dataclass(frozen=True)
class StateSpec:
    id: str
    name: str = ""
    change: str = "automatic"          # "automatic" or "manual"
    grip_force: float | None = None    # N, automatic changes only

    def __post_init__(self):
        if self.change not in ("automatic", "manual"):
            raise ValueError(f"state change must be automatic or manual, got {self.change!r}")

    @property
    def manual(self) -> bool:
        return self.change == "manual"

    def to_dict(self) -> dict:
        d = {"id": self.id, "name": self.name, "change": self.change}
        if self.grip_force is not None:
            d["grip_force"] = self.grip_force
        return d

    @classmethod
    def from_dict(cls, d) -> "StateSpec":
        gf = d.get("grip_force")
        return cls(str(d["id"]), str(d.get("name", "")), str(d.get("change", "automatic")),
                   None if gf is None else float(gf))


@dataclass(frozen=True)
class ObjectSpec:
    name: str
    category: str
    states: tuple[StateSpec, ...]
    gripper_to_object: np.ndarray = field(default_factory=lambda: np.eye(4))

    def __post_init__(self):
        if self.category not in CATEGORIES:
            raise ValueError(f"unknown object category {self.category!r}")
        states = tuple(self.states)
        if not states:
            raise ValueError("an object needs at least one state")
        ids = [s.id for s in states]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate state ids in {ids}")
        object.__setattr__(self, "states", states)

    def to_dict(self) -> dict:
        return {"name": self.name, "category": self.category,
                "states": [s.to_dict() for s in self.states],
                "gripper_to_object": transform_to_list(self.gripper_to_object)}

    @classmethod
    def from_dict(cls, d) -> "ObjectSpec":
        g_o = d.get("gripper_to_object")
        return cls(str(d["name"]), str(d["category"]),
                   tuple(StateSpec.from_dict(s) for s in d["states"]),
                   np.eye(4) if g_o is None else transform_from_list(g_o))


def example_objects() -> dict[str, ObjectSpec]:
    """A few object specs covering each appearance-change category."""
    return {
        "plush": ObjectSpec("plush", "deformable", (StateSpec("default"),)),
        "flask": ObjectSpec("flask", "viewing_angle_dependent", (StateSpec("default"),)),
        "clamp": ObjectSpec("clamp", "articulated", (
            StateSpec("closed", "closed", "automatic", 40.0),
            StateSpec("mid", "mid-open", "automatic", 20.0),
            StateSpec("open", "open", "automatic", 5.0),
        )),
        "scissors": ObjectSpec("scissors", "articulated", (
            StateSpec("closed", "closed", "manual"),
            StateSpec("open", "open", "manual"),
        )),
    }


@dataclass(frozen=True)
class CaptureRecord:
    record_id: str
    base_to_gripper: np.ndarray
    camera_to_object: np.ndarray
    label_quaternion: np.ndarray
    label_pixel_center: tuple[float, float] | None
    state_id: str
    joint_state: np.ndarray
    image_path: str | None = None

    def to_dict(self) -> dict:
        return {
            "record_id": self.record_id,
            "image_path": self.image_path,
            "base_to_gripper": transform_to_list(self.base_to_gripper),
            "camera_to_object": transform_to_list(self.camera_to_object),
            "label_quaternion": [float(v) for v in self.label_quaternion],
            "label_pixel_center": (None if self.label_pixel_center is None
                                   else [float(v) for v in self.label_pixel_center]),
            "state_id": self.state_id,
            "joint_state": [float(v) for v in self.joint_state],
        }

    @classmethod
    def from_dict(cls, d) -> "CaptureRecord":
        px = d.get("label_pixel_center")
        return cls(
            str(d["record_id"]),
            transform_from_list(d["base_to_gripper"]),
            transform_from_list(d["camera_to_object"]),
            np.asarray(d["label_quaternion"], dtype=float),
            None if px is None else (float(px[0]), float(px[1])),
            str(d["state_id"]),
            np.asarray(d["joint_state"], dtype=float),
            d.get("image_path"),
        )


@dataclass
class Manifest:
    object: ObjectSpec
    camera_to_base: np.ndarray          # ^cT_b used for labeling
    intrinsics: CameraIntrinsics
    records: list[CaptureRecord]
    events: list[dict] = field(default_factory=list)
    calibration_ref: str | None = None
    seed: int = 0
    mode: str = "sim"
    toolkit_version: str = __version__
    schema_version: int = SCHEMA_VERSION
    augmentations: list[dict] = field(default_factory=list)

    def record(self, record_id: str) -> CaptureRecord:
        for r in self.records:
            if r.record_id == record_id:
                return r
        raise KeyError(record_id)

    def by_id(self) -> dict[str, CaptureRecord]:
        return {r.record_id: r for r in self.records}

    def to_dict(self) -> dict:
        d = {
            "schema_version": self.schema_version,
            "toolkit_version": self.toolkit_version,
            "mode": self.mode,
            "seed": self.seed,
            "object": self.object.to_dict(),
            "calibration": {"ref": self.calibration_ref,
                            "camera_to_base": transform_to_list(self.camera_to_base)},
            "intrinsics": self.intrinsics.to_dict(),
            "events": list(self.events),
            "records": [r.to_dict() for r in self.records],
        }
        if self.augmentations:
            d["augmentations"] = list(self.augmentations)
        return d

    @classmethod
    def from_dict(cls, d) -> "Manifest":
        if "schema_version" not in d:
            raise DataError("manifest has no schema_version")
        if int(d["schema_version"]) != SCHEMA_VERSION:
            raise DataError(f"unsupported manifest schema {d['schema_version']}")
        records = [CaptureRecord.from_dict(r) for r in d["records"]]
        ids = [r.record_id for r in records]
        if len(set(ids)) != len(ids):
            raise DataError("manifest record ids are not unique")
        cal = d["calibration"]
        return cls(ObjectSpec.from_dict(d["object"]), transform_from_list(cal["camera_to_base"]),
                   CameraIntrinsics.from_dict(d["intrinsics"]), records, list(d.get("events", [])),
                   cal.get("ref"), int(d.get("seed", 0)), d.get("mode", "sim"),
                   d.get("toolkit_version", __version__), int(d["schema_version"]),
                   list(d.get("augmentations", [])))


def validate_manifest(manifest: Manifest, root=".") -> list[str]:
    """Problems found in ``manifest``; an empty list means it is consistent.

    Checks id uniqueness, label-chain consistency and that referenced image
    files exist (relative paths resolve against ``root``).
    """
    problems = []
    ids = [r.record_id for r in manifest.records]
    if len(set(ids)) != len(ids):
        problems.append("duplicate record ids")
    g_o = manifest.object.gripper_to_object
    for r in manifest.records:
        expected = label_pose(manifest.camera_to_base, r.base_to_gripper, g_o)
        if not np.array_equal(expected, r.camera_to_object):
            problems.append(f"{r.record_id}: label does not match the calibration chain")
        if r.image_path and not (Path(root) / r.image_path).exists():
            problems.append(f"{r.record_id}: missing image {r.image_path}")
    return problems


def label_pose(base_to_camera_inv, base_to_gripper, gripper_to_object=None) -> np.ndarray:
    """``^cT_o = ^cT_b ^bT_g ^gT_o``."""
    c_g = compose(base_to_camera_inv, base_to_gripper)
    if gripper_to_object is None:
        return c_g
    return compose(c_g, gripper_to_object)


def run_capture(plan, calibration, intrinsics: CameraIntrinsics, obj: ObjectSpec,
                mode: str = "sim", seed: int = 0, chain: DHChain | None = None,
                frame_dir=None, image_ext: str = ".png", relative_to=None,
                object_extent: float = 0.1, acknowledge=None,
                calibration_ref: str | None = None) -> Manifest:
    """Replay ``plan`` on the simulated arm and label every capture waypoint.

    ``calibration`` is a :class:`~rocapkit.handeye.CalibrationResult` or a 4x4
    ``^cT_b``. In ``"sim"`` mode with ``frame_dir`` set, a synthetic frame is
    rendered per record. Manual state changes produce an ``operator_pause``
    event; ``acknowledge(event)`` is called for each one when given, otherwise
    the pause is acknowledged automatically.
    """
    if mode not in ("sim", "dry_run"):
        raise ValueError(f"unknown capture mode {mode!r}")
    if calibration is None:
        raise CalibrationMissing("a calibration is required to label captures")
    c_b = getattr(calibration, "base_to_camera_inv", calibration)
    c_b = np.asarray(c_b, dtype=float)
    chain = chain or plan.chain
    if chain is None:
        raise PlanChainMismatch("plan carries no kinematic chain and none was given")
    if plan.chain is not None and plan.chain != chain:
        raise PlanChainMismatch("plan was built for a different kinematic chain")

    rng = np.random.default_rng(seed)
    if frame_dir is not None and mode == "sim":
        Path(frame_dir).mkdir(parents=True, exist_ok=True)
    g_o = obj.gripper_to_object
    records, events = [], []
    for n, wp in enumerate(plan.waypoints):
        b_g = forward_kinematics(chain, wp.joint_state)
        if np.max(np.abs(b_g - wp.base_to_gripper)) > PLAN_TOLERANCE:
            raise PlanChainMismatch(f"waypoint {n}: joint state does not reproduce its pose")
        if wp.operator_pause:
            event = {"type": "operator_pause", "waypoint": n, "state_id": wp.state_id,
                     "acknowledged": "auto" if acknowledge is None else "operator"}
            log.info("operator pause before state %r (waypoint %d)", wp.state_id, n)
            if acknowledge is not None:
                acknowledge(event)
            events.append(event)
            continue
        c_o = label_pose(c_b, b_g, g_o)
        try:
            px = tuple(float(v) for v in project_point(intrinsics, c_o[:3, 3]))
        except BehindCamera:
            px = None
        record_id = f"{obj.name}-{len(records):05d}"
        image_path = None
        if frame_dir is not None and mode == "sim":
            bg = tuple(int(v) for v in np.clip(40 + rng.integers(-8, 9, 3), 0, 255))
            try:
                img = render_synthetic_frame(intrinsics, c_o, object_extent, True, bg)
            except BehindCamera:
                img = None
            if img is not None:
                path = Path(frame_dir) / f"{record_id}{image_ext}"
                write_image(path, img)
                image_path = str(path if relative_to is None
                                 else os.path.relpath(path, relative_to))
        records.append(CaptureRecord(record_id, b_g, c_o, quat_from_matrix(c_o[:3, :3]), px,
                                     wp.state_id, np.asarray(wp.joint_state, dtype=float),
                                     image_path))
    return Manifest(obj, c_b, intrinsics, records, events, calibration_ref, seed, mode)


# --------------------------------------------------------------------------
# synthetic frames

_FACES = (  # corner indices, outward normal in the object frame
    ((0, 1, 3, 2), (-1, 0, 0)), ((4, 6, 7, 5), (1, 0, 0)),
    ((0, 4, 5, 1), (0, -1, 0)), ((2, 3, 7, 6), (0, 1, 0)),
    ((0, 2, 6, 4), (0, 0, -1)), ((1, 5, 7, 3), (0, 0, 1)),
)
_FACE_COLOR = np.array([200.0, 110.0, 70.0])
GREEN = (0, 255, 0)


def cuboid_corners(extent) -> np.ndarray:
    """8 corners of a box centered at the origin; index bits are (x, y, z)."""
    half = 0.5 * np.broadcast_to(np.asarray(extent, dtype=float), (3,))
    bits = np.array([[(i >> 2) & 1, (i >> 1) & 1, i & 1] for i in range(8)], dtype=float)
    return (2.0 * bits - 1.0) * half


def _fill_convex(img: np.ndarray, poly: np.ndarray, color) -> None:
    h, w = img.shape[:2]
    u0 = max(int(np.floor(poly[:, 0].min())), 0)
    u1 = min(int(np.ceil(poly[:, 0].max())), w - 1)
    v0 = max(int(np.floor(poly[:, 1].min())), 0)
    v1 = min(int(np.ceil(poly[:, 1].max())), h - 1)
    if u0 > u1 or v0 > v1:
        return
    vv, uu = np.mgrid[v0:v1 + 1, u0:u1 + 1]
    x = poly[:, 0]
    y = poly[:, 1]
    area = np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)
    if abs(area) < 1e-12:
        return
    sign = 1.0 if area > 0 else -1.0
    inside = np.ones(uu.shape, dtype=bool)
    for k in range(len(poly)):
        ax, ay = poly[k]
        bx, by = poly[(k + 1) % len(poly)]
        cross = (bx - ax) * (vv - ay) - (by - ay) * (uu - ax)
        inside &= sign * cross >= -1e-9
    img[vv[inside], uu[inside]] = color


def silhouette_box(intrinsics: CameraIntrinsics, camera_to_object, object_extent=0.1):
    """Unclipped ``(u0, v0, u1, v1)`` of the projected cuboid corners."""
    T = np.asarray(camera_to_object, dtype=float)
    P = cuboid_corners(object_extent) @ T[:3, :3].T + T[:3, 3]
    uv = project_points(intrinsics, P)
    return (*uv.min(axis=0), *uv.max(axis=0))


def gripper_patch_rect(intrinsics: CameraIntrinsics, camera_to_object, object_extent=0.1):
    """Inclusive integer ``(x0, y0, x1, y1)`` of the green patch, or ``None`` if off-image.

    The patch sits just below the cuboid silhouette, half its width and a third
    of its height (at least 3 px).
    """
    u0, v0, u1, v1 = silhouette_box(intrinsics, camera_to_object, object_extent)
    cu = 0.5 * (u0 + u1)
    half_w = max(0.25 * (u1 - u0), 1.5)
    height = max((v1 - v0) / 3.0, 3.0)
    x0 = int(np.round(cu - half_w))
    x1 = int(np.round(cu + half_w))
    y0 = int(np.ceil(v1)) + 2
    y1 = int(np.round(y0 + height))
    x0, x1 = max(x0, 0), min(x1, intrinsics.width - 1)
    y0, y1 = max(y0, 0), min(y1, intrinsics.height - 1)
    if x0 > x1 or y0 > y1:
        return None
    return x0, y0, x1, y1


def render_synthetic_frame(intrinsics: CameraIntrinsics, camera_to_object, object_extent=0.1,
                           gripper_patch: bool = True, background_color=(40, 40, 40)) -> np.ndarray:
    """Flat-shaded cuboid proxy of the object on a uniform background.

    Visible faces are painted far to near. With ``gripper_patch`` a pure green
    rectangle (see :func:`gripper_patch_rect`) stands in for the taped gripper.
    Raises :class:`BehindCamera` if any cuboid corner is behind the camera.
    """
    T = np.asarray(camera_to_object, dtype=float)
    img = np.empty((intrinsics.height, intrinsics.width, 3), dtype=np.uint8)
    img[:] = np.asarray(background_color, dtype=np.uint8)
    corners = cuboid_corners(object_extent) @ T[:3, :3].T + T[:3, 3]
    uv = project_points(intrinsics, corners)
    if gripper_patch:
        rect = gripper_patch_rect(intrinsics, T, object_extent)
        if rect is not None:
            x0, y0, x1, y1 = rect
            img[y0:y1 + 1, x0:x1 + 1] = GREEN
    faces = []
    for idx, normal in _FACES:
        n_cam = T[:3, :3] @ np.asarray(normal, dtype=float)
        center = corners[list(idx)].mean(axis=0)
        facing = -float(n_cam @ center) / np.linalg.norm(center)
        if facing > 1e-12:
            faces.append((center[2], idx, facing))
    for _, idx, facing in sorted(faces, key=lambda f: -f[0]):
        shade = np.clip(_FACE_COLOR * (0.35 + 0.65 * facing), 0, 255).astype(np.uint8)
        _fill_convex(img, uv[list(idx)], shade)
    return img


# --------------------------------------------------------------------------
# image files: format chosen by extension (.ppm/.pgm/.png)

def write_image(path, img) -> None:
    from PIL import Image

    arr = np.asarray(img)
    if arr.dtype != np.uint8:
        raise ValueError("images must be 8-bit")
    Image.fromarray(arr).save(str(path))


def read_image(path) -> np.ndarray:
    from PIL import Image

    with Image.open(str(path)) as im:
        if im.mode not in ("RGB", "L"):
            im = im.convert("RGB")
        return np.array(im)
