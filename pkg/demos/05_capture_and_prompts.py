"""
Simulated capture, labels and segmentation prompts
==================================================

Every frame's label is the chain camera <- base <- gripper <- object, so the
label comes for free once the camera is calibrated. The synthetic frames
carry a green patch standing in for the taped gripper; it becomes the
negative prompt.
"""

import tempfile
from pathlib import Path

import numpy as np

from rocapkit.annotate import AugmentParams, augment, prompts_for_manifest
from rocapkit.camera import default_intrinsics, look_at
from rocapkit.capture import example_objects, read_image, run_capture
from rocapkit.kinematics import reference_chain
from rocapkit.sampler import build_capture_plan, dedup_by_arc, filter_reachable, sample_euler_grid
from rocapkit.transforms import invert

chain = reference_chain()
obj = example_objects()["clamp"]
samples = filter_reachable(dedup_by_arc(sample_euler_grid(90)), chain, [-0.4, 0.1, 0.4])
plan = build_capture_plan(samples, obj, chain)
camera = look_at([0.4, 0.1, 0.5], [-0.4, 0.1, 0.4])

work = Path(tempfile.mkdtemp())
m = run_capture(plan, invert(camera), default_intrinsics(), obj, mode="sim",
                frame_dir=work / "frames", relative_to=work)
print(f"{len(m.records)} frames written to {work / 'frames'}")

r = m.records[0]
print("first label quaternion:", np.round(r.label_quaternion, 4))
print("object center in pixels:", np.round(r.label_pixel_center, 1))

prompts = prompts_for_manifest(m, work)
p = prompts[0]
print("bbox:", [round(float(v), 1) for v in p.bbox])
print("positive point:", [(round(u, 1), round(v, 1)) for u, v in p.positive_points])
print("negative point:", [(round(float(u), 1), round(float(v), 1)) for u, v in p.negative_points])

img = read_image(work / r.image_path)
darker = augment(img, AugmentParams(exposure_gain=0.7, contrast=1.2, saturation=0.8))
print("mean intensity before/after augmentation:", img.mean().round(1), darker.mean().round(1))
