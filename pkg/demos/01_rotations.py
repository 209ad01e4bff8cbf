"""
Rotations, quaternions and the arc distance
===========================================

Walks through the representations used everywhere else: 4x4 transforms,
w-first unit quaternions and ZYX Euler angles in degrees.
"""

import numpy as np

from rocapkit.transforms import (arc_distance, geodesic_angle, invert, make_transform,
                                 quat_from_axis_angle, quat_from_euler, quat_to_matrix, so3_exp,
                                 so3_log)

# a 30 degree turn about z, as a quaternion and as a matrix
q = quat_from_axis_angle([0, 0, 1], np.radians(30))
R = quat_to_matrix(quat_from_euler(30, 0, 0))
print("quaternion (w, x, y, z):", np.round(q, 4))
print("same rotation from Euler angles:", np.allclose(quat_from_euler(30, 0, 0), q))

# q and -q are the same rotation, so their distance is zero
print("arc distance q vs -q:", arc_distance(q, -q))

# 20 degrees apart: below the 0.35 rad dedup threshold
q20 = quat_from_axis_angle([0, 0, 1], np.radians(50))
print(f"arc distance 30 vs 50 deg about z: {arc_distance(q, q20):.4f} rad")
print(f"matrix geodesic angle agrees: {geodesic_angle(R, quat_to_matrix(q20)):.4f} rad")

# log/exp round trip, including a half turn
for angle in (0.1, 2.0, np.pi):
    w = np.array([0.0, angle, 0.0])
    print(f"log(exp(w)) for |w| = {angle:.3f}:", np.round(so3_log(so3_exp(w)), 6))

# rigid transforms compose and invert
T = make_transform(R, [0.1, 0.2, 0.3])
print("T @ inv(T) is identity:", np.allclose(T @ invert(T), np.eye(4)))
