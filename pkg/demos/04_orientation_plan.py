"""
From an Euler grid to a capture plan
====================================

Sample orientations on a grid, drop near-duplicates, keep the ones the arm
can actually reach at the capture position, then expand them over the
object's states. A plot of the surviving viewing directions goes to the
temp directory.
"""

import tempfile
from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from rocapkit.capture import example_objects  # noqa: E402
from rocapkit.kinematics import reference_chain  # noqa: E402
from rocapkit.sampler import (build_capture_plan, dedup_by_arc, filter_reachable,  # noqa: E402
                              sample_euler_grid)

chain = reference_chain()
grid = sample_euler_grid(45)
kept = dedup_by_arc(grid, 0.35)
reach = filter_reachable(kept, chain, [-0.4, 0.1, 0.4], workers=1)
print(f"{len(grid)} grid samples, {sum(s.retained for s in kept)} after dedup, "
      f"{sum(s.reachable for s in reach)} reachable")

plan = build_capture_plan(reach, example_objects()["scissors"], chain)
print(f"{len(plan.waypoints)} waypoints, {plan.n_pauses} operator pause(s)")

z = np.array([s.rotation[:, 2] for s in reach if s.reachable])
ax = plt.figure(figsize=(5, 5)).add_subplot(projection="3d")
ax.scatter(*z.T, s=8)
ax.set_title("reachable object z axes")
out = Path(tempfile.gettempdir()) / "coverage.png"
plt.savefig(out, dpi=80)
print("saved", out)
