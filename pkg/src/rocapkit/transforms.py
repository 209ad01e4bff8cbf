"""Rigid-body and rotation algebra.

Conventions
-----------
- A transform is a 4x4 homogeneous ``numpy`` array ``T_ab`` mapping points
  expressed in frame ``b`` into frame ``a``: ``p_a = R_ab @ p_b + t_ab``.
  Translations are in meters.
- Quaternions are ``(w, x, y, z)`` arrays, normalized on construction. The
  hemisphere is not canonicalized; :func:`arc_distance` handles ``q`` vs ``-q``.
- Euler angles are ``(yaw, pitch, roll)`` in degrees, intrinsic Z-Y-X, i.e.
  ``R = R_z(yaw) @ R_y(pitch) @ R_x(roll)``.
- Rotation vectors (``so3_log`` / ``so3_exp``) are axis * angle in radians.

All functions are pure and return fresh arrays.
"""

from __future__ import annotations

import numpy as np

ORTHO_TOL = 1e-9
_SMALL_ANGLE = 1e-8


def rot_x(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def make_transform(rotation=None, translation=None) -> np.ndarray:
    T = np.eye(4)
    if rotation is not None:
        T[:3, :3] = np.asarray(rotation, dtype=float)
    if translation is not None:
        T[:3, 3] = np.asarray(translation, dtype=float).reshape(3)
    return T


def identity() -> np.ndarray:
    return np.eye(4)


def is_rotation(R, tol: float = ORTHO_TOL) -> bool:
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3) or not np.all(np.isfinite(R)):
        return False
    return (np.max(np.abs(R.T @ R - np.eye(3))) <= tol
            and abs(np.linalg.det(R) - 1.0) <= tol)


def is_transform(T, tol: float = ORTHO_TOL) -> bool:
    T = np.asarray(T, dtype=float)
    if T.shape != (4, 4) or not np.all(np.isfinite(T)):
        return False
    return is_rotation(T[:3, :3], tol) and np.allclose(T[3], [0, 0, 0, 1], atol=tol)


def orthonormalize(R) -> np.ndarray:
    """Closest rotation to ``R`` in the Frobenius sense (polar factor via SVD)."""
    U, _, Vt = np.linalg.svd(np.asarray(R, dtype=float))
    D = np.diag([1.0, 1.0, np.sign(np.linalg.det(U @ Vt))])
    return U @ D @ Vt


def compose(a, b) -> np.ndarray:
    """``a @ b``, re-orthonormalizing the rotation block if it drifted."""
    T = np.asarray(a, dtype=float) @ np.asarray(b, dtype=float)
    R = T[:3, :3]
    if np.max(np.abs(R.T @ R - np.eye(3))) > ORTHO_TOL:
        T[:3, :3] = orthonormalize(R)
    T[3] = (0.0, 0.0, 0.0, 1.0)
    return T


def invert(t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    R = t[:3, :3]
    out = np.eye(4)
    out[:3, :3] = R.T
    out[:3, 3] = -R.T @ t[:3, 3]
    return out


def transform_point(T, p) -> np.ndarray:
    T = np.asarray(T, dtype=float)
    return T[:3, :3] @ np.asarray(p, dtype=float) + T[:3, 3]


# --------------------------------------------------------------------------
# SO(3) exponential / logarithm

def hat(v) -> np.ndarray:
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def vee(S) -> np.ndarray:
    return np.array([S[2, 1], S[0, 2], S[1, 0]])


def so3_exp(v) -> np.ndarray:
    """Rotation matrix for rotation vector ``v`` (Rodrigues)."""
    v = np.asarray(v, dtype=float).reshape(3)
    theta = np.linalg.norm(v)
    K = hat(v)
    if theta < _SMALL_ANGLE:
        return np.eye(3) + K + 0.5 * K @ K
    return (np.eye(3) + np.sin(theta) / theta * K
            + (1.0 - np.cos(theta)) / theta**2 * K @ K)


def so3_log(R) -> np.ndarray:
    """Rotation vector of ``R`` with norm in ``[0, pi]``.

    At exactly pi the axis sign is ambiguous; the axis whose first nonzero
    component is positive is returned.
    """
    R = np.asarray(R, dtype=float)
    w = vee(R - R.T)  # = 2 sin(theta) * axis
    s = 0.5 * np.linalg.norm(w)
    c = 0.5 * (np.trace(R) - 1.0)
    theta = np.arctan2(s, c)
    if theta < _SMALL_ANGLE:
        return 0.5 * w
    if theta < np.pi - 1e-3:
        return theta / (2.0 * np.sin(theta)) * w
    # near pi: recover the axis from the symmetric part, R + R^T = 2cI + 2(1-c)aa^T
    B = (0.5 * (R + R.T) - c * np.eye(3)) / (1.0 - c)
    k = int(np.argmax(np.diag(B)))
    axis = B[:, k] / np.sqrt(max(B[k, k], 0.0))
    axis /= np.linalg.norm(axis)
    if np.linalg.norm(w) < 1e-12:
        nz = axis[np.abs(axis) > 1e-12]
        if nz.size and nz[0] < 0.0:
            axis = -axis
    elif np.dot(axis, w) < 0.0:
        axis = -axis
    return theta * axis


def rotation_angle(R) -> float:
    """Geodesic angle of ``R`` from the identity, in ``[0, pi]``."""
    return float(np.linalg.norm(so3_log(R)))


def geodesic_angle(R1, R2) -> float:
    """``arccos((tr(R1^T R2) - 1) / 2)``, clipped to the valid domain."""
    c = 0.5 * (np.trace(np.asarray(R1).T @ np.asarray(R2)) - 1.0)
    return float(np.arccos(np.clip(c, -1.0, 1.0)))


# --------------------------------------------------------------------------
# quaternions

def quat_normalize(q) -> np.ndarray:
    q = np.asarray(q, dtype=float).reshape(4)
    n = np.linalg.norm(q)
    if not np.isfinite(n) or n == 0.0:
        raise ValueError(f"cannot normalize quaternion {q!r}")
    return q / n


def quat_multiply(q1, q2) -> np.ndarray:
    w1, x1, y1, z1 = q1
    w2, x2, y2, z2 = q2
    return np.array([
        w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
        w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
        w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
        w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
    ])


def quat_from_axis_angle(axis, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    h = 0.5 * angle
    return quat_normalize(np.concatenate([[np.cos(h)], np.sin(h) * axis]))


def quat_from_euler(yaw: float, pitch: float, roll: float) -> np.ndarray:
    """Unit quaternion for intrinsic Z-Y-X Euler angles given in degrees."""
    angles = np.radians([yaw, pitch, roll])
    if not np.all(np.isfinite(angles)):
        raise ValueError("Euler angles must be finite")
    qz = quat_from_axis_angle((0, 0, 1), angles[0])
    qy = quat_from_axis_angle((0, 1, 0), angles[1])
    qx = quat_from_axis_angle((1, 0, 0), angles[2])
    return quat_normalize(quat_multiply(quat_multiply(qz, qy), qx))


def euler_from_matrix(R) -> tuple[float, float, float]:
    """Inverse of the Z-Y-X convention; degrees. Gimbal lock sets roll to 0."""
    R = np.asarray(R, dtype=float)
    sp = -R[2, 0]
    pitch = np.arcsin(np.clip(sp, -1.0, 1.0))
    if abs(sp) > 1.0 - 1e-12:
        yaw = np.arctan2(-R[0, 1], R[1, 1])
        roll = 0.0
    else:
        yaw = np.arctan2(R[1, 0], R[0, 0])
        roll = np.arctan2(R[2, 1], R[2, 2])
    return tuple(float(a) for a in np.degrees([yaw, pitch, roll]))


def quat_to_matrix(q) -> np.ndarray:
    w, x, y, z = quat_normalize(q)
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def quat_from_matrix(R) -> np.ndarray:
    """Shepperd's method; picks the numerically largest pivot."""
    R = np.asarray(R, dtype=float)
    tr = np.trace(R)
    diag = np.diag(R)
    k = int(np.argmax(np.concatenate([[tr], diag])))
    if k == 0:
        s = 2.0 * np.sqrt(1.0 + tr)
        q = [0.25 * s, (R[2, 1] - R[1, 2]) / s, (R[0, 2] - R[2, 0]) / s,
             (R[1, 0] - R[0, 1]) / s]
    elif k == 1:
        s = 2.0 * np.sqrt(1.0 + R[0, 0] - R[1, 1] - R[2, 2])
        q = [(R[2, 1] - R[1, 2]) / s, 0.25 * s, (R[0, 1] + R[1, 0]) / s,
             (R[0, 2] + R[2, 0]) / s]
    elif k == 2:
        s = 2.0 * np.sqrt(1.0 + R[1, 1] - R[0, 0] - R[2, 2])
        q = [(R[0, 2] - R[2, 0]) / s, (R[0, 1] + R[1, 0]) / s, 0.25 * s,
             (R[1, 2] + R[2, 1]) / s]
    else:
        s = 2.0 * np.sqrt(1.0 + R[2, 2] - R[0, 0] - R[1, 1])
        q = [(R[1, 0] - R[0, 1]) / s, (R[0, 2] + R[2, 0]) / s,
             (R[1, 2] + R[2, 1]) / s, 0.25 * s]
    return quat_normalize(q)


def arc_distance(q1, q2) -> float:
    """Rotation angle between two orientations, ``2 acos(|<q1,q2>|)``.

    Evaluated as ``4 atan2(|q1 - q2'|, |q1 + q2'|)`` with ``q2'`` the sign of
    ``q2`` nearer ``q1``; same value, but no precision loss near zero, so
    ``q`` and ``-q`` give exactly 0.
    """
    a, b = quat_normalize(q1), quat_normalize(q2)
    if np.dot(a, b) < 0:
        b = -b
    return 4.0 * float(np.arctan2(np.linalg.norm(a - b), np.linalg.norm(a + b)))


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Haar-uniform random rotation matrix."""
    return quat_to_matrix(rng.normal(size=4))


def random_transform(rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    return make_transform(random_rotation(rng), rng.uniform(-scale, scale, 3))


# --------------------------------------------------------------------------
# serialization: row-major 16 numbers; quaternions [w, x, y, z]

def transform_to_list(T) -> list[float]:
    return [float(v) for v in np.asarray(T, dtype=float).reshape(16)]


def transform_from_list(values) -> np.ndarray:
    T = np.asarray(values, dtype=float)
    if T.size != 16:
        raise ValueError(f"transform needs 16 numbers, got {T.size}")
    T = T.reshape(4, 4)
    if not is_transform(T, tol=1e-6):
        raise ValueError("not a rigid transform")
    return T
