import numpy as np
import pytest
from hypothesis import settings

from rocapkit.capture import CaptureRecord, Manifest, ObjectSpec, StateSpec
from rocapkit.camera import default_intrinsics
from rocapkit.transforms import make_transform, quat_from_matrix, quat_to_matrix

# fixed example stream so reruns see the same cases
settings.register_profile("repo", derandomize=True, database=None)
settings.load_profile("repo")

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


# ---- independent oracles -------------------------------------------------

def dh_oracle(a, alpha, d, theta):
    """Closed-form standard DH link matrix, written out entry by entry."""
    ct, st, ca, sa = np.cos(theta), np.sin(theta), np.cos(alpha), np.sin(alpha)
    return np.array([[ct, -st * ca, st * sa, a * ct],
                     [st, ct * ca, -ct * sa, a * st],
                     [0.0, sa, ca, d],
                     [0.0, 0.0, 0.0, 1.0]])


def fk_oracle(chain, q):
    T = np.eye(4)
    for (a, alpha, d, off), qi in zip(chain.params, q):
        T = T @ dh_oracle(a, alpha, d, qi + off)
    return T


def trace_angle(R1, R2):
    """Rotation angle of R1^T R2 from the trace formula."""
    c = (np.trace(np.asarray(R1).T @ np.asarray(R2)) - 1.0) / 2.0
    return float(np.arccos(np.clip(c, -1.0, 1.0)))


def rodrigues(axis, angle):
    k = np.asarray(axis, dtype=float)
    k = k / np.linalg.norm(k)
    K = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + np.sin(angle) * K + (1 - np.cos(angle)) * K @ K


def random_unit(rng):
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)


def make_manifest(rotations, states=None, obj=None):
    """Minimal manifest whose records carry the given ground-truth rotations."""
    n = len(rotations)
    if obj is None:
        obj = ObjectSpec("thing", "deformable", [StateSpec("s0")])
    states = states or [obj.states[0].id] * n
    records = []
    for i, R in enumerate(rotations):
        T = make_transform(R, [0.0, 0.0, 1.0])
        records.append(CaptureRecord(f"r{i:05d}", np.eye(4), T, quat_from_matrix(R),
                                     (320.0, 240.0), states[i], np.zeros(6)))
    return Manifest(obj, np.eye(4), default_intrinsics(), records)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


__all__ = ["dh_oracle", "fk_oracle", "trace_angle", "rodrigues", "random_unit",
           "make_manifest", "quat_to_matrix"]
