"""Segmentation prompts, mask validation and photometric augmentation.

Prompts for an external prompt-driven segmenter are derived from the pose
label: a bounding box from a virtual cube around the object origin, the
projected origin as a positive point, and the centroid of green (taped
gripper) pixels as a negative point.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from matplotlib.colors import rgb_to_hsv

from .camera import CameraIntrinsics, MIN_DEPTH, project_point
from .capture import cuboid_corners, read_image
from .errors import (DimensionMismatch, FullyBehind, InvalidRange, NotFound,
                     OutsideImage)

CUBE_SIZE = 0.15  # m
GREEN_HUE = (90.0, 150.0)  # degrees
GREEN_MIN_SAT = 0.4
GREEN_MIN_VAL = 0.2
GREEN_MIN_COUNT = 25
MIN_INSIDE_RATIO = 0.8
REC601 = np.array([0.299, 0.587, 0.114])
DEFAULT_AUGMENT_RANGES = {"exposure_gain": (0.7, 1.3), "contrast": (0.7, 1.3),
                          "saturation": (0.5, 1.5)}


@dataclass
class PromptSet:
    record_id: str
    bbox: tuple[float, float, float, float]
    positive_points: list[tuple[float, float]] = field(default_factory=list)
    negative_points: list[tuple[float, float]] = field(default_factory=list)
    image_path: str | None = None

    def to_dict(self) -> dict:
        return {"record_id": self.record_id, "image_path": self.image_path,
                "bbox": [float(v) for v in self.bbox],
                "positive_points": [[float(u), float(v)] for u, v in self.positive_points],
                "negative_points": [[float(u), float(v)] for u, v in self.negative_points]}

    @classmethod
    def from_dict(cls, d) -> "PromptSet":
        return cls(str(d["record_id"]), tuple(float(v) for v in d["bbox"]),
                   [tuple(p) for p in d.get("positive_points", [])],
                   [tuple(p) for p in d.get("negative_points", [])],
                   d.get("image_path"))


@dataclass(frozen=True)
class AugmentParams:
    exposure_gain: float = 1.0
    contrast: float = 1.0
    saturation: float = 1.0
    seed: int | None = None

    def __post_init__(self):
        vals = (self.exposure_gain, self.contrast, self.saturation)
        if not all(np.isfinite(vals)):
            raise ValueError("augmentation parameters must be finite")
        if self.exposure_gain <= 0 or self.contrast <= 0 or self.saturation < 0:
            raise ValueError("gain and contrast must be > 0, saturation >= 0")


@dataclass(frozen=True)
class MaskReport:
    record_id: str
    mask_area_px: int
    inside_bbox_ratio: float | None
    verdict: str  # "accept" or "discard"


# --------------------------------------------------------------------------
# prompts

def bbox_from_cube(intrinsics: CameraIntrinsics, camera_to_object, cube_size: float = CUBE_SIZE):
    """Image-clipped ``(x0, y0, x1, y1)`` of a cube centered on the object origin.

    Only corners in front of the camera contribute. Raises :class:`FullyBehind`
    when no corner is in front, :class:`OutsideImage` when the box misses the
    image entirely.
    """
    T = np.asarray(camera_to_object, dtype=float)
    P = cuboid_corners(cube_size) @ T[:3, :3].T + T[:3, 3]
    front = P[:, 2] > MIN_DEPTH
    if not np.any(front):
        raise FullyBehind("every cube corner is behind the camera")
    P = P[front]
    u = intrinsics.fx * P[:, 0] / P[:, 2] + intrinsics.cx
    v = intrinsics.fy * P[:, 1] / P[:, 2] + intrinsics.cy
    x0 = max(u.min(), 0.0)
    y0 = max(v.min(), 0.0)
    x1 = min(u.max(), intrinsics.width - 1.0)
    y1 = min(v.max(), intrinsics.height - 1.0)
    if not (x0 < x1 and y0 < y1):
        raise OutsideImage("projected cube does not overlap the image")
    return (float(x0), float(y0), float(x1), float(y1))


def center_point_prompt(intrinsics: CameraIntrinsics, camera_to_object):
    t = np.asarray(camera_to_object, dtype=float)[:3, 3]
    return tuple(float(c) for c in project_point(intrinsics, t))


def detect_green_region(image, hue_range=GREEN_HUE, min_sat: float = GREEN_MIN_SAT,
                        min_val: float = GREEN_MIN_VAL, min_count: int = GREEN_MIN_COUNT):
    """Centroid ``(u, v)`` and pixel count of green pixels in an RGB image."""
    img = np.asarray(image)
    if img.ndim != 3 or img.shape[2] != 3:
        raise DimensionMismatch("expected an RGB image")
    hsv = rgb_to_hsv(img.astype(float) / 255.0)
    hue = hsv[..., 0] * 360.0
    mask = ((hue >= hue_range[0]) & (hue <= hue_range[1])
            & (hsv[..., 1] >= min_sat) & (hsv[..., 2] >= min_val))
    count = int(mask.sum())
    if count < min_count:
        raise NotFound(f"only {count} green pixels (need {min_count})")
    rows, cols = np.nonzero(mask)
    return (float(cols.mean()), float(rows.mean())), count


def make_prompts(record, intrinsics: CameraIntrinsics, image=None,
                 cube_size: float = CUBE_SIZE, **green_kw) -> PromptSet:
    """Prompt set for one capture record; green detection runs only with an image."""
    T = record.camera_to_object
    bbox = bbox_from_cube(intrinsics, T, cube_size)
    positive = []
    try:
        positive.append(center_point_prompt(intrinsics, T))
    except Exception:  # BehindCamera
        pass
    positive = [p for p in positive if _inside(p, bbox)]
    negative = []
    if image is not None:
        try:
            negative.append(detect_green_region(image, **green_kw)[0])
        except NotFound:
            pass
    return PromptSet(record.record_id, bbox, positive, negative, record.image_path)


def _inside(p, bbox) -> bool:
    return bbox[0] <= p[0] <= bbox[2] and bbox[1] <= p[1] <= bbox[3]


def prompts_for_manifest(manifest, root=".", cube_size: float = CUBE_SIZE) -> list[PromptSet]:
    """Prompts for every record whose cube is visible; other records are skipped."""
    out = []
    for r in manifest.records:
        image = None
        if r.image_path and (Path(root) / r.image_path).exists():
            image = read_image(Path(root) / r.image_path)
            if image.ndim != 3:
                image = None
        try:
            out.append(make_prompts(r, manifest.intrinsics, image, cube_size))
        except (FullyBehind, OutsideImage):
            continue
    return out


def write_prompts(path, prompts) -> None:
    Path(path).write_text(json.dumps([p.to_dict() for p in prompts], indent=1) + "\n")


def read_prompts(path) -> list[PromptSet]:
    return [PromptSet.from_dict(d) for d in json.loads(Path(path).read_text())]


# --------------------------------------------------------------------------
# masks

def validate_mask(mask, prompt: PromptSet, min_inside_ratio: float = MIN_INSIDE_RATIO,
                  image_shape=None) -> MaskReport:
    """Accept iff the mask is non-empty and enough of it lies inside the bbox."""
    m = np.asarray(mask)
    if m.ndim != 2:
        raise DimensionMismatch(f"mask must be single-channel, got shape {m.shape}")
    if image_shape is not None and tuple(m.shape) != tuple(image_shape[:2]):
        raise DimensionMismatch(f"mask {m.shape} does not match image {tuple(image_shape[:2])}")
    fg = m != 0
    area = int(fg.sum())
    if area == 0:
        return MaskReport(prompt.record_id, 0, None, "discard")
    rows, cols = np.nonzero(fg)
    x0, y0, x1, y1 = prompt.bbox
    inside = (cols >= x0) & (cols <= x1) & (rows >= y0) & (rows <= y1)
    ratio = float(inside.sum()) / area
    verdict = "accept" if ratio >= min_inside_ratio else "discard"
    return MaskReport(prompt.record_id, area, ratio, verdict)


def find_mask(mask_dir, record_id: str) -> Path | None:
    for ext in (".png", ".pgm"):
        p = Path(mask_dir) / f"{record_id}_mask{ext}"
        if p.exists():
            return p
    return None


def mask_report_to_dict(r: MaskReport) -> dict:
    return asdict(r)


# --------------------------------------------------------------------------
# augmentation

def augment(image, params: AugmentParams) -> np.ndarray:
    """Exposure, then contrast, then saturation; each stage clamped to [0, 255].

    Contrast pulls pixels toward the mean Rec.601 luminance of the image;
    saturation scales each pixel's chroma around its own luminance.
    """
    img = np.asarray(image)
    if img.dtype != np.uint8 or img.ndim != 3 or img.shape[2] != 3:
        raise DimensionMismatch("augment expects an 8-bit RGB image")
    x = img.astype(np.float64)
    if params.exposure_gain != 1.0:
        x = np.clip(x * params.exposure_gain, 0.0, 255.0)
    if params.contrast != 1.0:
        mu = float(np.mean(x @ REC601))
        x = np.clip(params.contrast * (x - mu) + mu, 0.0, 255.0)
    if params.saturation != 1.0:
        lum = (x @ REC601)[..., None]
        x = np.clip(lum + params.saturation * (x - lum), 0.0, 255.0)
    return np.rint(x).astype(np.uint8)


def sample_augment_params(ranges=None, seed: int = 0, n: int = 1) -> list[AugmentParams]:
    """``n`` seeded uniform draws; each result carries its own derived seed."""
    ranges = dict(DEFAULT_AUGMENT_RANGES if ranges is None else ranges)
    keys = ("exposure_gain", "contrast", "saturation")
    bounds = []
    for k in keys:
        try:
            lo, hi = (float(v) for v in ranges[k])
        except (KeyError, TypeError, ValueError):
            raise InvalidRange(f"missing or malformed range for {k}") from None
        if not (np.isfinite(lo) and np.isfinite(hi)) or lo > hi:
            raise InvalidRange(f"bad range for {k}: [{lo}, {hi}]")
        if (k == "saturation" and lo < 0) or (k != "saturation" and lo <= 0):
            raise InvalidRange(f"range for {k} leaves the valid domain: [{lo}, {hi}]")
        bounds.append((lo, hi))
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        vals = [rng.uniform(lo, hi) if hi > lo else lo for lo, hi in bounds]
        out.append(AugmentParams(*vals, seed=int(rng.integers(2**31))))
    return out
