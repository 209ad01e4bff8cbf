"""Eye-to-hand calibration.

The camera is fixed and the checkerboard is rigidly held by the gripper, so
the gripper-to-target transform ``^gT_t`` is the same at every station::

    ^gT_b(i) X ^cT_t(i) = ^gT_b(j) X ^cT_t(j),     X = ^bT_c

Rearranging gives ``A X = X B`` with ``A = ^bT_g(j) ^gT_b(i)`` and
``B = ^cT_t(j) ^cT_t(i)^-1``. Rotation is solved in closed form from the
log-map axes of ``A`` and ``B``; translation by stacked linear least squares.
The camera extrinsic needed for labeling is ``^cT_b = X^-1``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import (DegenerateMotion, LengthMismatch, SingularNormalEquations,
                     TooFewPairs, TooFewStations)
from .kinematics import DHChain, forward_kinematics
from .transforms import (compose, invert, make_transform, orthonormalize,
                         rotation_angle, so3_exp, so3_log)

# relative motions with a smaller rotation carry no usable axis
MIN_MOTION_ANGLE = 1e-3
MIN_AXIS_SEPARATION = np.radians(5.0)
EIGEN_FLOOR = 1e-12
ALL_PAIRS_MAX_STATIONS = 20


@dataclass(frozen=True)
class Station:
    base_to_gripper: np.ndarray   # ^bT_g from forward kinematics
    camera_to_target: np.ndarray  # ^cT_t from the checkerboard


@dataclass(frozen=True)
class MotionPair:
    a: np.ndarray  # gripper motion, base frame
    b: np.ndarray  # target motion, camera frame
    i: int = 0
    j: int = 0

    @property
    def degenerate(self) -> bool:
        return (rotation_angle(self.a[:3, :3]) < MIN_MOTION_ANGLE
                or rotation_angle(self.b[:3, :3]) < MIN_MOTION_ANGLE)


@dataclass(frozen=True)
class CalibrationResult:
    base_to_camera_inv: np.ndarray  # ^cT_b
    gripper_to_target: np.ndarray   # ^gT_t
    rot_residual_rms: float         # rad
    trans_residual_rms: float       # m
    n_pairs: int = 0

    @property
    def base_to_camera(self) -> np.ndarray:
        """``X = ^bT_c``."""
        return invert(self.base_to_camera_inv)


def _pair_indices(n: int, pairing: str) -> list[tuple[int, int]]:
    if pairing == "auto":
        # identical to "all" up to ALL_PAIRS_MAX_STATIONS, linear growth above
        return [(i, j) for i in range(n)
                for j in range(i + 1, min(n, i + ALL_PAIRS_MAX_STATIONS))]
    if pairing == "consecutive":
        return [(i, i + 1) for i in range(n - 1)]
    if pairing == "all":
        return list(itertools.combinations(range(n), 2))
    raise ValueError(f"unknown pairing strategy {pairing!r}")


def build_motion_pairs(stations, pairing: str = "auto") -> list[MotionPair]:
    """Relative-motion pairs for ``pairing`` in ``{"auto", "all", "consecutive"}``.

    ``auto`` pairs every station with its next 19 neighbours: all pairs up to
    20 stations, a sliding window above that.
    """
    stations = list(stations)
    if len(stations) < 3:
        raise TooFewStations(f"need at least 3 stations, got {len(stations)}")
    pairs = []
    for i, j in _pair_indices(len(stations), pairing):
        si, sj = stations[i], stations[j]
        a = compose(sj.base_to_gripper, invert(si.base_to_gripper))
        b = compose(sj.camera_to_target, invert(si.camera_to_target))
        pairs.append(MotionPair(a, b, i, j))
    return pairs


def _check_axes(alphas: np.ndarray) -> None:
    U = alphas / np.linalg.norm(alphas, axis=1, keepdims=True)
    cos = np.minimum(1.0, np.abs(U @ U.T))
    # line angle >= separation  <=>  |cos| <= cos(separation)
    if np.any(np.arccos(cos) >= MIN_AXIS_SEPARATION):
        return
    raise DegenerateMotion("all relative rotation axes are parallel")


def _inv_sqrt_psd(S: np.ndarray) -> np.ndarray:
    w, V = np.linalg.eigh(S)
    if w[0] < EIGEN_FLOOR * max(w[-1], 1.0):
        raise SingularNormalEquations("rotation normal matrix is rank deficient")
    return V @ np.diag(1.0 / np.sqrt(w)) @ V.T


def solve_rotation(pairs) -> np.ndarray:
    alphas = np.array([so3_log(p.a[:3, :3]) for p in pairs])
    betas = np.array([so3_log(p.b[:3, :3]) for p in pairs])
    _check_axes(alphas)
    M = betas.T @ alphas  # sum of beta_i alpha_i^T
    R = _inv_sqrt_psd(M.T @ M) @ M.T
    return orthonormalize(R)


def solve_translation(pairs, R_x: np.ndarray) -> np.ndarray:
    C = np.vstack([p.a[:3, :3] - np.eye(3) for p in pairs])
    d = np.concatenate([R_x @ p.b[:3, 3] - p.a[:3, 3] for p in pairs])
    t, _, rank, _ = np.linalg.lstsq(C, d, rcond=None)
    if rank < 3:
        raise SingularNormalEquations("translation system is rank deficient")
    return t


def ax_xb_residuals(pairs, X: np.ndarray) -> tuple[float, float]:
    """RMS rotation (rad) and translation (m) mismatch of ``A X`` vs ``X B``."""
    rot, trans = [], []
    for p in pairs:
        lhs = p.a @ X
        rhs = X @ p.b
        rot.append(rotation_angle(lhs[:3, :3].T @ rhs[:3, :3]))
        trans.append(np.linalg.norm(lhs[:3, 3] - rhs[:3, 3]))
    return (float(np.sqrt(np.mean(np.square(rot)))),
            float(np.sqrt(np.mean(np.square(trans)))))


def solve_ax_xb(pairs, stations=None) -> CalibrationResult:
    """Solve ``A X = X B`` for ``X = ^bT_c`` and report ``^cT_b = X^-1``.

    When ``stations`` is given, ``^gT_t`` is averaged over them; otherwise it is
    left as identity.
    """
    pairs = list(pairs)
    if len(pairs) < 2:
        raise TooFewPairs(f"need at least 2 motion pairs, got {len(pairs)}")
    pairs = [p for p in pairs if not p.degenerate]
    if len(pairs) < 2:
        raise DegenerateMotion("fewer than 2 pairs with a usable rotation")
    R_x = solve_rotation(pairs)
    t_x = solve_translation(pairs, R_x)
    X = make_transform(R_x, t_x)
    rot_rms, trans_rms = ax_xb_residuals(pairs, X)
    g_t = np.eye(4)
    if stations:
        g_t = _mean_gripper_to_target(stations, X)
    return CalibrationResult(invert(X), g_t, rot_rms, trans_rms, len(pairs))


def _mean_gripper_to_target(stations, X: np.ndarray) -> np.ndarray:
    Ts = [compose(compose(invert(s.base_to_gripper), X), s.camera_to_target)
          for s in stations]
    R = orthonormalize(np.mean([T[:3, :3] for T in Ts], axis=0))
    t = np.mean([T[:3, 3] for T in Ts], axis=0)
    return make_transform(R, t)


def calibrate(stations, pairing: str = "auto") -> CalibrationResult:
    stations = list(stations)
    return solve_ax_xb(build_motion_pairs(stations, pairing), stations)


def simulate_stations(x_true, gripper_to_target_true, chain: DHChain, configs,
                      noise=None, seed: int = 0) -> list[Station]:
    """Synthetic stations for a known camera pose ``x_true = ^bT_c``.

    ``noise`` is ``{"rot_deg": ..., "trans_m": ...}``: the RMS angle and RMS
    displacement of an isotropic Gaussian perturbation applied to each
    ``^cT_t`` (rotation on the log map, translation additively).
    """
    noise = noise or {}
    rot_sigma = np.radians(float(noise.get("rot_deg", 0.0))) / np.sqrt(3.0)
    trans_sigma = float(noise.get("trans_m", 0.0)) / np.sqrt(3.0)
    rng = np.random.default_rng(seed)
    cam_from_base = invert(x_true)
    stations = []
    for q in configs:
        q = np.asarray(q, dtype=float)
        if q.size != chain.n_joints:
            raise LengthMismatch(f"chain has {chain.n_joints} joints, got {q.size}")
        b_g = forward_kinematics(chain, q)
        c_t = compose(compose(cam_from_base, b_g), gripper_to_target_true)
        if rot_sigma > 0.0 or trans_sigma > 0.0:
            c_t = c_t.copy()
            c_t[:3, :3] = so3_exp(rng.normal(0.0, rot_sigma, 3)) @ c_t[:3, :3]
            c_t[:3, 3] += rng.normal(0.0, trans_sigma, 3)
        stations.append(Station(b_g, c_t))
    return stations


def constraint_violation(stations, x_true, gripper_to_target_true) -> np.ndarray:
    """Per-station angle between observed and predicted ``^cT_t``."""
    cam_from_base = invert(x_true)
    out = []
    for s in stations:
        pred = compose(compose(cam_from_base, s.base_to_gripper), gripper_to_target_true)
        out.append(rotation_angle(pred[:3, :3].T @ s.camera_to_target[:3, :3]))
    return np.array(out)


def stations_from_json(data) -> list[Station]:
    """Stations from a list of ``{base_to_gripper, camera_to_target}`` (16 numbers each)."""
    from .transforms import transform_from_list

    return [Station(transform_from_list(s["base_to_gripper"]),
                    transform_from_list(s["camera_to_target"])) for s in data]


def stations_to_json(stations) -> list[dict]:
    from .transforms import transform_to_list

    return [{"base_to_gripper": transform_to_list(s.base_to_gripper),
             "camera_to_target": transform_to_list(s.camera_to_target)} for s in stations]


def calibration_to_json(result: CalibrationResult) -> dict:
    from .transforms import transform_to_list

    return {
        "camera_to_base": transform_to_list(result.base_to_camera_inv),
        "gripper_to_target": transform_to_list(result.gripper_to_target),
        "rot_residual_rms": result.rot_residual_rms,
        "trans_residual_rms": result.trans_residual_rms,
        "n_pairs": result.n_pairs,
    }


def calibration_from_json(d) -> CalibrationResult:
    from .transforms import transform_from_list

    return CalibrationResult(transform_from_list(d["camera_to_base"]),
                             transform_from_list(d["gripper_to_target"]),
                             float(d.get("rot_residual_rms", 0.0)),
                             float(d.get("trans_residual_rms", 0.0)),
                             int(d.get("n_pairs", 0)))
