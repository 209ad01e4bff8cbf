"""Orientation coverage planning.

An Euler grid is converted to quaternions, thinned by quaternion arc
distance, filtered by IK reachability at a fixed capture position, and
expanded into a capture plan with one group of waypoints per object state.
"""

from __future__ import annotations

import csv
import hashlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import EmptyPlan, InvalidStep, Unreachable
from .kinematics import DHChain, forward_kinematics, solve_ik
from .transforms import compose, invert, make_transform, quat_from_euler, quat_to_matrix

DEDUP_THRESHOLD = 0.35  # rad, about 20 degrees


@dataclass(frozen=True)
class OrientationSample:
    quaternion: np.ndarray               # (w, x, y, z)
    source_euler: tuple[float, float, float]  # yaw, pitch, roll in degrees
    retained: bool = True
    reachable: bool = False
    joint_solution: np.ndarray | None = None

    @property
    def rotation(self) -> np.ndarray:
        return quat_to_matrix(self.quaternion)


@dataclass(frozen=True)
class Waypoint:
    joint_state: np.ndarray
    base_to_gripper: np.ndarray
    state_id: str
    operator_pause: bool = False
    orientation_index: int = -1


@dataclass(frozen=True)
class CapturePlan:
    waypoints: tuple[Waypoint, ...]
    object_ref: str
    capture_position: np.ndarray
    chain: DHChain | None = None
    metadata: dict = field(default_factory=dict)

    @property
    def n_pauses(self) -> int:
        return sum(w.operator_pause for w in self.waypoints)

    @property
    def capture_waypoints(self) -> list[Waypoint]:
        return [w for w in self.waypoints if not w.operator_pause]


def sample_euler_grid(step_deg: float) -> list[OrientationSample]:
    """Every ``(yaw, pitch, roll)`` in ``{0, step, ..., 360 - step}``, lexicographic."""
    try:
        step = float(step_deg)
    except (TypeError, ValueError):
        raise InvalidStep(f"step {step_deg!r} is not a number") from None
    if not 0.0 < step <= 360.0:
        raise InvalidStep(f"step must be in (0, 360], got {step}")
    n = round(360.0 / step)
    if abs(n * step - 360.0) > 1e-9:
        raise InvalidStep(f"step {step} does not divide 360")
    angles = [i * step for i in range(n)]
    return [OrientationSample(quat_from_euler(y, p, r), (y, p, r))
            for y in angles for p in angles for r in angles]


def dedup_by_arc(samples, threshold: float = DEDUP_THRESHOLD) -> list[OrientationSample]:
    """Greedy first-come thinning in input order.

    A sample is kept iff its arc distance to every previously kept sample is at
    least ``threshold``. The result depends on input order by design.
    """
    if threshold < 0:
        raise ValueError("threshold must be non-negative")
    kept: list[np.ndarray] = []
    out = []
    # |<q1,q2>| >= cos(threshold/2)  <=>  arc distance <= threshold
    for s in samples:
        q = np.asarray(s.quaternion, dtype=float)
        retain = True
        if kept and threshold > 0:
            dots = np.minimum(1.0, np.abs(np.asarray(kept) @ q))
            retain = bool(np.all(2.0 * np.arccos(dots) >= threshold))
        if retain:
            kept.append(q)
        out.append(replace(s, retained=retain, reachable=False, joint_solution=None))
    return out


def _stable_seed(*parts) -> int:
    h = hashlib.sha256(":".join(str(p) for p in parts).encode()).digest()
    return int.from_bytes(h[:8], "little")


def target_for(rotation, capture_position, tool_offset) -> np.ndarray:
    """Gripper pose putting the object frame at ``capture_position`` with ``rotation``."""
    obj = make_transform(rotation, capture_position)
    return compose(obj, invert(tool_offset))


def _solve_one(args):
    chain, target, seed_q, rng_seed = args
    try:
        return solve_ik(chain, target, seed_q, rng=np.random.default_rng(rng_seed))
    except Unreachable:
        return None


def filter_reachable(samples, chain: DHChain, capture_position, tool_offset=None,
                     home=None, seed: int = 0, workers: int = 1,
                     position_jitter: float = 0.0) -> list[OrientationSample]:
    """Mark retained samples whose gripper target is reachable by IK.

    Every sample gets its own RNG stream derived from ``seed`` and its index,
    so the result does not depend on ``workers``. ``position_jitter`` (m) moves
    each sample's capture point uniformly within a cube of that half-width.
    """
    tool_offset = np.eye(4) if tool_offset is None else np.asarray(tool_offset, dtype=float)
    capture_position = np.asarray(capture_position, dtype=float)
    home = np.zeros(chain.n_joints) if home is None else np.asarray(home, dtype=float)
    samples = list(samples)
    jobs, idx = [], []
    for i, s in enumerate(samples):
        if s.retained:
            pos = capture_position
            if position_jitter > 0.0:
                jit = np.random.default_rng(_stable_seed(seed, "jitter", i))
                pos = pos + jit.uniform(-position_jitter, position_jitter, 3)
            target = target_for(s.rotation, pos, tool_offset)
            jobs.append((chain, target, home, _stable_seed(seed, "ik", i)))
            idx.append(i)
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_solve_one, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        results = [_solve_one(j) for j in jobs]
    out = [replace(s, reachable=False, joint_solution=None) for s in samples]
    for i, q in zip(idx, results):
        if q is not None:
            out[i] = replace(out[i], reachable=True, joint_solution=q)
    return out


def _nearest_neighbour_order(solutions: list[np.ndarray]) -> list[int]:
    remaining = list(range(1, len(solutions)))
    order = [0]
    while remaining:
        cur = solutions[order[-1]]
        d = [np.max(np.abs(solutions[j] - cur)) for j in remaining]
        order.append(remaining.pop(int(np.argmin(d))))
    return order


def build_capture_plan(samples, obj, chain: DHChain, capture_position=None,
                       ordering: str = "grid") -> CapturePlan:
    """Waypoints = states x reachable orientations, grouped by state.

    ``ordering`` is ``"grid"`` (sample order) or ``"nearest"`` (greedy
    nearest-neighbour chaining in joint space, max-norm). A manual state change
    is announced by an ``operator_pause`` waypoint at the group boundary, which
    holds the arm at the last pose of the previous group.
    """
    reach = [s for s in samples if s.reachable]
    if not reach:
        raise EmptyPlan("no reachable orientation to capture")
    if not obj.states:
        raise EmptyPlan(f"object {obj.name!r} has no states")
    if ordering == "nearest":
        order = _nearest_neighbour_order([s.joint_solution for s in reach])
    elif ordering == "grid":
        order = list(range(len(reach)))
    else:
        raise ValueError(f"unknown ordering {ordering!r}")
    fk = [forward_kinematics(chain, reach[i].joint_solution) for i in order]
    waypoints: list[Waypoint] = []
    for g, state in enumerate(obj.states):
        if g > 0 and state.manual:
            last = waypoints[-1]
            waypoints.append(Waypoint(last.joint_state, last.base_to_gripper, state.id,
                                      operator_pause=True))
        for k, i in enumerate(order):
            waypoints.append(Waypoint(reach[i].joint_solution, fk[k], state.id,
                                      orientation_index=i))
    if capture_position is None:
        capture_position = np.zeros(3)
    return CapturePlan(tuple(waypoints), obj.name, np.asarray(capture_position, dtype=float),
                       chain, {"ordering": ordering, "n_orientations": len(reach)})


COVERAGE_COLUMNS = ["qw", "qx", "qy", "qz", "zx", "zy", "zz", "retained", "reachable"]


def export_coverage(samples, path) -> None:
    """CSV of quaternion, object z-axis direction and flags, one row per sample."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COVERAGE_COLUMNS)
        for s in samples:
            z = s.rotation[:, 2]
            w.writerow([repr(float(v)) for v in s.quaternion]
                       + [repr(float(v)) for v in z]
                       + [int(bool(s.retained)), int(bool(s.reachable))])


def read_coverage(path) -> list[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    out = []
    for r in rows:
        out.append({
            "quaternion": np.array([float(r[c]) for c in ("qw", "qx", "qy", "qz")]),
            "z_axis": np.array([float(r[c]) for c in ("zx", "zy", "zz")]),
            "retained": r["retained"] == "1",
            "reachable": r["reachable"] == "1",
        })
    return out


def plan_to_dict(plan: CapturePlan) -> dict:
    from .transforms import transform_to_list

    return {
        "object_ref": plan.object_ref,
        "capture_position": [float(v) for v in plan.capture_position],
        "chain": None if plan.chain is None else plan.chain.to_list(),
        "metadata": dict(plan.metadata),
        "waypoints": [
            {"joint_state": [float(v) for v in w.joint_state],
             "base_to_gripper": transform_to_list(w.base_to_gripper),
             "state_id": w.state_id,
             "operator_pause": bool(w.operator_pause),
             "orientation_index": int(w.orientation_index)}
            for w in plan.waypoints
        ],
    }


def plan_from_dict(d) -> CapturePlan:
    from .transforms import transform_from_list

    chain = None if d.get("chain") is None else DHChain.from_list(d["chain"])
    wps = tuple(
        Waypoint(np.asarray(w["joint_state"], dtype=float),
                 transform_from_list(w["base_to_gripper"]), str(w["state_id"]),
                 bool(w.get("operator_pause", False)), int(w.get("orientation_index", -1)))
        for w in d["waypoints"]
    )
    if not wps:
        raise EmptyPlan("plan has no waypoints")
    return CapturePlan(wps, str(d["object_ref"]), np.asarray(d["capture_position"], dtype=float),
                       chain, dict(d.get("metadata", {})))
