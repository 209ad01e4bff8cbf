"""Denavit-Hartenberg forward kinematics, geometric Jacobian and a damped
least-squares IK solver for serial revolute arms.

Link ``i`` uses the standard DH convention::

    T_i = Rz(q_i + theta_offset_i) Tz(d_i) Tx(a_i) Rx(alpha_i)
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import LengthMismatch, Unreachable
from .transforms import so3_log

IK_DAMPING = 0.05
IK_MAX_STEP = 0.2
IK_MAX_ITER = 200
IK_RESTARTS = 8
IK_BATCH = 32  # random starts per restart round, iterated together
# below this pose error the damping shrinks in proportion to the error
IK_POLISH_RADIUS = 1e-2


@dataclass(frozen=True)
class DHLink:
    a: float
    alpha: float
    d: float
    theta_offset: float = 0.0


@dataclass(frozen=True)
class DHChain:
    links: tuple[DHLink, ...]
    joint_limits: np.ndarray = field(default=None)  # (n, 2) radians

    def __post_init__(self):
        links = tuple(self.links)
        if not links:
            raise ValueError("a chain needs at least one link")
        params = np.array([[l.a, l.alpha, l.d, l.theta_offset] for l in links], dtype=float)
        if not np.all(np.isfinite(params)):
            raise ValueError("DH parameters must be finite")
        limits = self.joint_limits
        if limits is None:
            limits = np.tile([-np.pi, np.pi], (len(links), 1))
        limits = np.array(limits, dtype=float).reshape(len(links), 2)
        if not np.all(np.isfinite(limits)) or np.any(limits[:, 0] > limits[:, 1]):
            # min == max is allowed and means a locked joint
            raise ValueError("joint limits must be finite with min <= max")
        limits.setflags(write=False)
        params.setflags(write=False)
        object.__setattr__(self, "links", links)
        object.__setattr__(self, "joint_limits", limits)
        object.__setattr__(self, "_params", params)

    @property
    def n_joints(self) -> int:
        return len(self.links)

    @property
    def params(self) -> np.ndarray:
        """``(n, 4)`` array of ``a, alpha, d, theta_offset``."""
        return self._params

    def __eq__(self, other):
        if not isinstance(other, DHChain):
            return NotImplemented
        return (np.array_equal(self.params, other.params)
                and np.array_equal(self.joint_limits, other.joint_limits))

    def __hash__(self):
        return hash((self.params.tobytes(), self.joint_limits.tobytes()))

    def to_list(self) -> list[dict]:
        return [
            {"a": l.a, "alpha": l.alpha, "d": l.d, "theta_offset": l.theta_offset,
             "limit_min": float(lo), "limit_max": float(hi)}
            for l, (lo, hi) in zip(self.links, self.joint_limits)
        ]

    @classmethod
    def from_list(cls, rows) -> "DHChain":
        links = [DHLink(float(r["a"]), float(r["alpha"]), float(r["d"]),
                        float(r.get("theta_offset", 0.0))) for r in rows]
        limits = [(float(r.get("limit_min", -np.pi)), float(r.get("limit_max", np.pi)))
                  for r in rows]
        return cls(tuple(links), np.array(limits))

    def with_limits(self, limits) -> "DHChain":
        return DHChain(self.links, np.asarray(limits, dtype=float))


def reference_chain() -> DHChain:
    """A generic 6R arm with UR5-like proportions.

    Joints 1, 4 and 6 move within +-170 degrees, joints 2, 3 and 5 within
    +-120 degrees.
    """
    half_pi = np.pi / 2
    links = (
        DHLink(0.0, half_pi, 0.089159),
        DHLink(-0.425, 0.0, 0.0),
        DHLink(-0.39225, 0.0, 0.0),
        DHLink(0.0, half_pi, 0.10915),
        DHLink(0.0, -half_pi, 0.09465),
        DHLink(0.0, 0.0, 0.0823),
    )
    wide, narrow = np.radians(170.0), np.radians(120.0)
    limits = np.array([[-wide, wide], [-narrow, narrow], [-narrow, narrow],
                       [-wide, wide], [-narrow, narrow], [-wide, wide]])
    return DHChain(links, limits)


def _check_length(chain: DHChain, q) -> np.ndarray:
    q = np.asarray(q, dtype=float).reshape(-1)
    if q.size != chain.n_joints:
        raise LengthMismatch(f"chain has {chain.n_joints} joints, got {q.size} angles")
    return q


def dh_matrix(a: float, alpha: float, d: float, theta: float) -> np.ndarray:
    ct, st = np.cos(theta), np.sin(theta)
    ca, sa = np.cos(alpha), np.sin(alpha)
    return np.array([
        [ct, -st * ca, st * sa, a * ct],
        [st, ct * ca, -ct * sa, a * st],
        [0.0, sa, ca, d],
        [0.0, 0.0, 0.0, 1.0],
    ])


def _link_frames(chain: DHChain, q: np.ndarray) -> list[np.ndarray]:
    """Base-frame poses of frames 0..n (frame 0 is the base)."""
    frames = [np.eye(4)]
    T = frames[0]
    for (a, alpha, d, off), qi in zip(chain.params, q):
        T = T @ dh_matrix(a, alpha, d, qi + off)
        frames.append(T)
    return frames


def forward_kinematics(chain: DHChain, q) -> np.ndarray:
    """Base-to-end-effector transform ``^bT_g`` for joint angles ``q``."""
    q = _check_length(chain, q)
    return _link_frames(chain, q)[-1]


def _jacobian_from_frames(frames: list[np.ndarray]) -> np.ndarray:
    n = len(frames) - 1
    p_end = frames[-1][:3, 3]
    J = np.empty((6, n))
    for i in range(n):
        z = frames[i][:3, 2]
        J[:3, i] = np.cross(z, p_end - frames[i][:3, 3])
        J[3:, i] = z
    return J


def jacobian(chain: DHChain, q) -> np.ndarray:
    """Geometric Jacobian in the base frame.

    Rows 0-2 give end-effector linear velocity (m/rad), rows 3-5 angular
    velocity (rad/rad). Columns of locked joints are still filled in.
    """
    q = _check_length(chain, q)
    return _jacobian_from_frames(_link_frames(chain, q))


def _batch_frames(chain: DHChain, Q: np.ndarray) -> np.ndarray:
    """Frames 0..n for a batch of joint vectors; shape ``(n + 1, N, 4, 4)``."""
    N = Q.shape[0]
    out = np.empty((chain.n_joints + 1, N, 4, 4))
    out[0] = np.eye(4)
    for i, (a, alpha, d, off) in enumerate(chain.params):
        th = Q[:, i] + off
        ct, st = np.cos(th), np.sin(th)
        ca, sa = np.cos(alpha), np.sin(alpha)
        L = np.zeros((N, 4, 4))
        L[:, 0, 0], L[:, 0, 1], L[:, 0, 2], L[:, 0, 3] = ct, -st * ca, st * sa, a * ct
        L[:, 1, 0], L[:, 1, 1], L[:, 1, 2], L[:, 1, 3] = st, ct * ca, -ct * sa, a * st
        L[:, 2, 1], L[:, 2, 2], L[:, 2, 3] = sa, ca, d
        L[:, 3, 3] = 1.0
        out[i + 1] = out[i] @ L
    return out


def _batch_jacobian(frames: np.ndarray) -> np.ndarray:
    z = frames[:-1, :, :3, 2]
    p = frames[:-1, :, :3, 3]
    p_end = frames[-1, :, :3, 3]
    J = np.concatenate([np.cross(z, p_end[None] - p), z], axis=2)  # (n, N, 6)
    return J.transpose(1, 2, 0)


def _batch_pose_error(current: np.ndarray, target: np.ndarray) -> np.ndarray:
    err = np.empty((current.shape[0], 6))
    err[:, :3] = target[:3, 3] - current[:, :3, 3]
    M = target[:3, :3] @ current[:, :3, :3].transpose(0, 2, 1)
    w = np.stack([M[:, 2, 1] - M[:, 1, 2], M[:, 0, 2] - M[:, 2, 0], M[:, 1, 0] - M[:, 0, 1]], 1)
    s = 0.5 * np.linalg.norm(w, axis=1)
    c = 0.5 * (np.trace(M, axis1=1, axis2=2) - 1.0)
    theta = np.arctan2(s, c)
    scale = np.where(theta < 1e-8, 0.5, theta / (2.0 * np.maximum(np.sin(theta), 1e-300)))
    err[:, 3:] = scale[:, None] * w
    for k in np.nonzero(theta >= np.pi - 1e-3)[0]:
        err[k, 3:] = so3_log(M[k])
    return err


def check_limits(chain: DHChain, q) -> bool:
    q = _check_length(chain, q)
    lo, hi = chain.joint_limits[:, 0], chain.joint_limits[:, 1]
    return bool(np.all((q >= lo) & (q <= hi)))


def _wrapping_joints(chain: DHChain) -> np.ndarray:
    span = chain.joint_limits[:, 1] - chain.joint_limits[:, 0]
    return span >= 2.0 * np.pi - 1e-12


def _project_to_limits(chain: DHChain, q: np.ndarray, wrap: np.ndarray) -> np.ndarray:
    lo, hi = chain.joint_limits[:, 0], chain.joint_limits[:, 1]
    out = q.copy()
    # joints with a full turn of travel wrap instead of sticking at the stop
    out[wrap] = lo[wrap] + np.mod(out[wrap] - lo[wrap], 2.0 * np.pi)
    return np.clip(out, lo, hi)


def pose_error(current: np.ndarray, target: np.ndarray) -> np.ndarray:
    """6-vector ``[dp, dw]`` taking ``current`` to ``target`` (base frame)."""
    err = np.empty(6)
    err[:3] = target[:3, 3] - current[:3, 3]
    err[3:] = so3_log(target[:3, :3] @ current[:3, :3].T)
    return err


def _dls(chain, target, q, tol_pos, tol_rot, max_iter, damping, max_step, wrap):
    prev = np.inf
    stall = 0
    for it in range(max_iter + 1):
        frames = _link_frames(chain, q)
        err = pose_error(frames[-1], target)
        e_pos, e_rot = np.linalg.norm(err[:3]), np.linalg.norm(err[3:])
        if e_pos < tol_pos and e_rot < tol_rot:
            return q, it
        if it == max_iter:
            break
        total = e_pos + e_rot
        stall = stall + 1 if total > prev * (1.0 - 1e-6) else 0
        if stall >= 25:
            break
        prev = min(prev, total)
        J = _jacobian_from_frames(frames)
        lam = damping * min(1.0, total / IK_POLISH_RADIUS)
        dq = J.T @ np.linalg.solve(J @ J.T + lam * lam * np.eye(6), err)
        dq = np.clip(dq, -max_step, max_step)
        q = _project_to_limits(chain, q + dq, wrap)
    return None, max_iter


def _dls_batch(chain, target, Q, tol_pos, tol_rot, max_iter, damping, max_step, wrap):
    """Run the same iteration on every row of ``Q`` at once.

    Returns the row converged first (lowest index on ties), or ``None``.
    """
    Q = Q.copy()
    N = Q.shape[0]
    lo, hi = chain.joint_limits[:, 0], chain.joint_limits[:, 1]
    prev = np.full(N, np.inf)
    stall = np.zeros(N, dtype=int)
    live = np.arange(N)
    eye = np.eye(6)
    for it in range(max_iter + 1):
        frames = _batch_frames(chain, Q[live])
        err = _batch_pose_error(frames[-1], target)
        e_pos = np.linalg.norm(err[:, :3], axis=1)
        e_rot = np.linalg.norm(err[:, 3:], axis=1)
        done = np.nonzero((e_pos < tol_pos) & (e_rot < tol_rot))[0]
        if done.size:
            return Q[live[done[0]]]
        if it == max_iter:
            break
        total = e_pos + e_rot
        stall[live] = np.where(total > prev[live] * (1.0 - 1e-6), stall[live] + 1, 0)
        prev[live] = np.minimum(prev[live], total)
        keep = stall[live] < 25
        if not keep.any():
            break
        live, frames, err, total = live[keep], frames[:, keep], err[keep], total[keep]
        J = _batch_jacobian(frames)
        lam = damping * np.minimum(1.0, total / IK_POLISH_RADIUS)
        A = J @ J.transpose(0, 2, 1) + (lam * lam)[:, None, None] * eye
        dq = (J.transpose(0, 2, 1) @ np.linalg.solve(A, err[..., None]))[..., 0]
        dq = np.clip(dq, -max_step, max_step)
        Qn = Q[live] + dq
        Qn[:, wrap] = lo[wrap] + np.mod(Qn[:, wrap] - lo[wrap], 2.0 * np.pi)
        Q[live] = np.clip(Qn, lo, hi)
    return None


def max_reach(chain: DHChain) -> float:
    """Upper bound on the distance from the base origin to the flange."""
    return float(np.sum(np.hypot(chain.params[:, 0], chain.params[:, 2])))


def solve_ik(chain: DHChain, target, seed, tol_pos: float = 1e-6,
             tol_rot: float = 1e-6, max_iter: int = IK_MAX_ITER,
             damping: float = IK_DAMPING, max_step: float = IK_MAX_STEP,
             restarts: int = IK_RESTARTS, batch: int = IK_BATCH,
             rng: np.random.Generator | None = None) -> np.ndarray:
    """Joint angles reaching ``target`` within the given tolerances.

    Damped least squares from ``seed``; if that fails, up to ``restarts``
    rounds of ``batch`` seeded random starts within the joint limits are
    iterated together, and the first start to converge wins. Joint limits are
    enforced by clamping every iterate, so a returned solution always
    satisfies :func:`check_limits`.

    Raises :class:`Unreachable` when every attempt exhausts its budget or
    stalls, or at once when the target lies beyond the arm's reach.
    """
    seed = _check_length(chain, seed)
    target = np.asarray(target, dtype=float)
    if np.linalg.norm(target[:3, 3]) > max_reach(chain) + tol_pos:
        raise Unreachable("target is beyond the arm's reach")
    wrap = _wrapping_joints(chain)
    if rng is None:
        rng = np.random.default_rng(0)
    lo, hi = chain.joint_limits[:, 0], chain.joint_limits[:, 1]
    start = _project_to_limits(chain, seed, wrap)
    q, _ = _dls(chain, target, start, tol_pos, tol_rot, max_iter, damping, max_step, wrap)
    if q is not None:
        return q
    for _ in range(restarts):
        starts = rng.uniform(lo, hi, (max(batch, 1), chain.n_joints))
        q = _dls_batch(chain, target, starts, tol_pos, tol_rot, max_iter, damping,
                       max_step, wrap)
        if q is not None:
            return q
    raise Unreachable(f"no IK solution from the seed or {restarts} restart rounds")
