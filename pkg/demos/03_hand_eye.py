"""
Eye-to-hand calibration from simulated stations
===============================================

A fixed camera watches a checkerboard held by the gripper. Each station
pairs the flange pose with the board pose seen by the camera; solving
AX = XB over station pairs recovers where the camera sits in the base frame.
"""

import numpy as np

from rocapkit.camera import look_at
from rocapkit.handeye import calibrate, simulate_stations
from rocapkit.kinematics import reference_chain
from rocapkit.transforms import make_transform, rotation_angle

rng = np.random.default_rng(1)
chain = reference_chain()
camera = look_at([0.4, 0.1, 0.5], [-0.4, 0.1, 0.4])  # the truth we try to recover
board = make_transform(None, [0.0, 0.0, 0.1])

lo, hi = chain.joint_limits.T
noise = {"rot_deg": 0.5, "trans_m": 0.002}
print("exact stations recover the camera exactly:")
configs = [rng.uniform(0.6 * lo, 0.6 * hi) for _ in range(10)]
X = calibrate(simulate_stations(camera, board, chain, configs)).base_to_camera
print(f"   max entry error {np.abs(X - camera).max():.1e}")

# with noise, more stations help; medians over 30 sessions each
for n in (5, 10, 20, 40):
    rot, trans = [], []
    for trial in range(30):
        configs = [rng.uniform(0.6 * lo, 0.6 * hi) for _ in range(n)]
        X = calibrate(simulate_stations(camera, board, chain, configs, noise, seed=trial))
        X = X.base_to_camera
        rot.append(np.degrees(rotation_angle(X[:3, :3].T @ camera[:3, :3])))
        trans.append(1000 * np.linalg.norm(X[:3, 3] - camera[:3, 3]))
    print(f"{n:2d} stations: median rotation error {np.median(rot):.3f} deg, "
          f"translation {np.median(trans):.2f} mm")
