"""
Forward and inverse kinematics of the reference arm
===================================================
"""

import numpy as np

from rocapkit.errors import Unreachable
from rocapkit.kinematics import forward_kinematics, max_reach, reference_chain, solve_ik
from rocapkit.transforms import make_transform, quat_from_euler, quat_to_matrix, rotation_angle

chain = reference_chain()
print(f"{chain.n_joints} joints, reach at most {max_reach(chain):.3f} m")
print("joint limits (rad):\n", np.round(chain.joint_limits, 3))

# all joints at zero
print("flange at zero:\n", np.round(forward_kinematics(chain, np.zeros(6)), 4))

# ask for a pose in front of the arm and check where the solution lands
target = make_transform(quat_to_matrix(quat_from_euler(0, 90, 0)), [-0.4, 0.1, 0.4])
q = solve_ik(chain, target, np.zeros(6), rng=np.random.default_rng(0))
reached = forward_kinematics(chain, q)
print("joint solution:", np.round(q, 4))
print("position error (m):", np.linalg.norm(reached[:3, 3] - target[:3, 3]))
print("rotation error (rad):", rotation_angle(reached[:3, :3].T @ target[:3, :3]))

# a point well outside the workspace fails fast
try:
    solve_ik(chain, make_transform(None, [3.0, 0, 0]), np.zeros(6))
except Unreachable as e:
    print("unreachable:", e)
