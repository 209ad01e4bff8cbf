"""Pinhole camera model and planar (checkerboard) pose estimation.

No lens distortion is modelled. Pixel coordinates are ``(u, v)`` with ``u``
along image columns and ``v`` along rows; pixel centers sit on integers.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import BehindCamera, CountMismatch, DegenerateCorners
from .transforms import hat, make_transform, orthonormalize, so3_exp

MIN_DEPTH = 1e-9


@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError("focal lengths must be positive")
        if not (0 < self.cx < self.width and 0 < self.cy < self.height):
            raise ValueError("principal point must lie inside the image")

    @property
    def K(self) -> np.ndarray:
        return np.array([[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]])

    def to_dict(self) -> dict:
        return {"fx": self.fx, "fy": self.fy, "cx": self.cx, "cy": self.cy,
                "width": self.width, "height": self.height}

    @classmethod
    def from_dict(cls, d) -> "CameraIntrinsics":
        return cls(float(d["fx"]), float(d["fy"]), float(d["cx"]), float(d["cy"]),
                   int(d["width"]), int(d["height"]))


@dataclass(frozen=True)
class Checkerboard:
    inner_rows: int
    inner_cols: int
    square_size: float  # m

    def __post_init__(self):
        if self.inner_rows < 3 or self.inner_cols < 3:
            raise ValueError("a checkerboard needs at least 3x3 inner corners")
        if not self.square_size > 0:
            raise ValueError("square_size must be positive")

    @property
    def n_corners(self) -> int:
        return self.inner_rows * self.inner_cols

    def object_points(self) -> np.ndarray:
        """Row-major ``(rows*cols, 3)`` corner grid; corner ``(i, j)`` at ``(j*s, i*s, 0)``."""
        i, j = np.mgrid[0:self.inner_rows, 0:self.inner_cols]
        pts = np.zeros((self.n_corners, 3))
        pts[:, 0] = j.ravel() * self.square_size
        pts[:, 1] = i.ravel() * self.square_size
        return pts

    def to_dict(self) -> dict:
        return {"inner_rows": self.inner_rows, "inner_cols": self.inner_cols,
                "square_size": self.square_size}

    @classmethod
    def from_dict(cls, d) -> "Checkerboard":
        return cls(int(d["inner_rows"]), int(d["inner_cols"]), float(d["square_size"]))


def default_intrinsics() -> CameraIntrinsics:
    return CameraIntrinsics(600.0, 600.0, 320.0, 240.0, 640, 480)


def default_checkerboard() -> Checkerboard:
    return Checkerboard(6, 8, 0.025)


def look_at(eye, target, up=(0.0, 0.0, 1.0)) -> np.ndarray:
    """World-from-camera transform for a camera at ``eye`` whose optical axis
    (+z) points at ``target``; image rows run along ``-up``."""
    eye = np.asarray(eye, dtype=float)
    z = np.asarray(target, dtype=float) - eye
    z /= np.linalg.norm(z)
    x = np.cross(z, np.asarray(up, dtype=float))
    if np.linalg.norm(x) < 1e-9:
        raise ValueError("viewing direction is parallel to up")
    x /= np.linalg.norm(x)
    return make_transform(np.column_stack([x, np.cross(z, x), z]), eye)


def project_point(k: CameraIntrinsics, p_cam) -> np.ndarray:
    x, y, z = np.asarray(p_cam, dtype=float).reshape(3)
    if z <= MIN_DEPTH:
        raise BehindCamera(f"point at depth {z:g} m is behind the camera")
    return np.array([k.fx * x / z + k.cx, k.fy * y / z + k.cy])


def project_points(k: CameraIntrinsics, P) -> np.ndarray:
    """Vectorized :func:`project_point` for an ``(N, 3)`` array."""
    P = np.asarray(P, dtype=float).reshape(-1, 3)
    z = P[:, 2]
    if np.any(z <= MIN_DEPTH):
        raise BehindCamera(f"{int(np.sum(z <= MIN_DEPTH))} point(s) behind the camera")
    return np.column_stack([k.fx * P[:, 0] / z + k.cx, k.fy * P[:, 1] / z + k.cy])


def project_checkerboard(k: CameraIntrinsics, camera_to_target, board: Checkerboard) -> np.ndarray:
    T = np.asarray(camera_to_target, dtype=float)
    P = board.object_points() @ T[:3, :3].T + T[:3, 3]
    return project_points(k, P)


def _conditioning(pts: np.ndarray) -> np.ndarray:
    """Similarity moving ``pts`` to zero mean and mean distance sqrt(2)."""
    mean = pts.mean(axis=0)
    dist = np.mean(np.linalg.norm(pts - mean, axis=1))
    s = np.sqrt(2.0) / dist
    return np.array([[s, 0.0, -s * mean[0]], [0.0, s, -s * mean[1]], [0.0, 0.0, 1.0]])


def homography_dlt(src, dst) -> np.ndarray:
    """Normalized DLT homography with ``dst ~ H src`` for ``(N, 2)`` point sets."""
    src = np.asarray(src, dtype=float)
    dst = np.asarray(dst, dtype=float)
    T1, T2 = _conditioning(src), _conditioning(dst)
    s = (np.column_stack([src, np.ones(len(src))]) @ T1.T)[:, :2]
    d = (np.column_stack([dst, np.ones(len(dst))]) @ T2.T)[:, :2]
    n = len(s)
    A = np.zeros((2 * n, 9))
    A[0::2, 0:2] = s
    A[0::2, 2] = 1.0
    A[0::2, 6:8] = -d[:, :1] * s
    A[0::2, 8] = -d[:, 0]
    A[1::2, 3:5] = s
    A[1::2, 5] = 1.0
    A[1::2, 6:8] = -d[:, 1:] * s
    A[1::2, 8] = -d[:, 1]
    _, sv, Vt = np.linalg.svd(A)
    if sv[-2] < 1e-10 * sv[0]:
        raise DegenerateCorners("homography is not uniquely determined")
    Hn = Vt[-1].reshape(3, 3)
    return np.linalg.inv(T2) @ Hn @ T1


def _check_spread(pts: np.ndarray) -> None:
    c = pts - pts.mean(axis=0)
    sv = np.linalg.svd(c, compute_uv=False)
    if sv[0] == 0.0 or sv[1] < 1e-9 * sv[0]:
        raise DegenerateCorners("corner observations are collinear")


def refine_pose(k: CameraIntrinsics, board: Checkerboard, corners, T, iterations: int = 10):
    """Gauss-Newton on pixel reprojection error (left-perturbed rotation)."""
    P = board.object_points()
    R, t = T[:3, :3].copy(), T[:3, 3].copy()
    obs = np.asarray(corners, dtype=float)
    prev = np.inf
    for _ in range(iterations):
        Pc = P @ R.T + t
        x, y, z = Pc.T
        if np.any(z <= MIN_DEPTH):
            break
        r = np.column_stack([k.fx * x / z + k.cx, k.fy * y / z + k.cy]) - obs
        cost = float(np.sum(r * r))
        if cost >= prev * (1.0 - 1e-12):
            break
        prev = cost
        # d(pixel)/d(point in camera frame)
        Du = np.zeros((len(P), 2, 3))
        Du[:, 0, 0] = k.fx / z
        Du[:, 0, 2] = -k.fx * x / z**2
        Du[:, 1, 1] = k.fy / z
        Du[:, 1, 2] = -k.fy * y / z**2
        J = np.zeros((len(P), 2, 6))
        J[:, :, :3] = -np.einsum("nij,njk->nik", Du, np.array([hat(p - t) for p in Pc]))
        J[:, :, 3:] = Du
        J = J.reshape(-1, 6)
        delta = np.linalg.lstsq(J, -r.reshape(-1), rcond=None)[0]
        R = so3_exp(delta[:3]) @ R
        t = t + delta[3:]
    return make_transform(orthonormalize(R), t)


def estimate_planar_pose(k: CameraIntrinsics, board: Checkerboard, corners,
                         refine: bool = True) -> np.ndarray:
    """Camera-to-target transform ``^cT_t`` from observed corner pixels.

    Corners are row-major in the same order as :meth:`Checkerboard.object_points`.
    """
    corners = np.asarray(corners, dtype=float).reshape(-1, 2)
    if len(corners) != board.n_corners:
        raise CountMismatch(f"board has {board.n_corners} corners, got {len(corners)}")
    _check_spread(corners)
    norm = np.column_stack([(corners[:, 0] - k.cx) / k.fx, (corners[:, 1] - k.cy) / k.fy])
    H = homography_dlt(board.object_points()[:, :2], norm)
    h1, h2, h3 = H.T
    lam = 2.0 / (np.linalg.norm(h1) + np.linalg.norm(h2))
    if lam * h3[2] < 0.0:
        lam = -lam
    r1, r2 = lam * h1, lam * h2
    R = orthonormalize(np.column_stack([r1, r2, np.cross(r1, r2)]))
    T = make_transform(R, lam * h3)
    if refine:
        T = refine_pose(k, board, corners, T)
    return T


def read_corners_csv(path) -> np.ndarray:
    """``u,v`` per row, row-major corner order; a non-numeric header row is skipped."""
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.reader(fh):
            if not rec:
                continue
            try:
                rows.append((float(rec[0]), float(rec[1])))
            except ValueError:
                if rows:
                    raise
    return np.array(rows, dtype=float).reshape(-1, 2)


def write_corners_csv(path, corners) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["u", "v"])
        for u, v in np.asarray(corners, dtype=float):
            w.writerow([repr(float(u)), repr(float(v))])
