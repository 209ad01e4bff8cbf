import numpy as np
import pytest

from conftest import fk_oracle, trace_angle
from rocapkit.errors import LengthMismatch, Unreachable
from rocapkit.kinematics import (DHChain, DHLink, check_limits, forward_kinematics, jacobian,
                                 max_reach, reference_chain, solve_ik)


def two_r():
    return DHChain((DHLink(1.0, 0.0, 0.0), DHLink(1.0, 0.0, 0.0)))


def random_chain(rng, n=6):
    links = tuple(DHLink(rng.uniform(-1, 1), rng.uniform(-np.pi, np.pi), rng.uniform(-1, 1),
                         rng.uniform(-np.pi, np.pi)) for _ in range(n))
    return DHChain(links)


def numeric_jacobian(chain, q, h=1e-6):
    T0 = fk_oracle(chain, q)
    J = np.zeros((6, len(q)))
    for i in range(len(q)):
        dq = np.zeros(len(q))
        dq[i] = h
        Tp, Tm = fk_oracle(chain, q + dq), fk_oracle(chain, q - dq)
        J[:3, i] = (Tp[:3, 3] - Tm[:3, 3]) / (2 * h)
        W = (Tp[:3, :3] - Tm[:3, :3]) / (2 * h) @ T0[:3, :3].T
        J[3:, i] = [W[2, 1], W[0, 2], W[1, 0]]
    return J


def test_two_r_forward_kinematics():
    assert np.allclose(forward_kinematics(two_r(), [0, 0])[:3, 3], [2, 0, 0], atol=1e-15)
    assert np.allclose(forward_kinematics(two_r(), [np.pi / 2, 0])[:3, 3], [0, 2, 0], atol=1e-15)


def test_fk_matches_closed_form_oracle(rng):
    chain = reference_chain()
    for _ in range(100):
        q = rng.uniform(-np.pi, np.pi, 6)
        assert np.allclose(forward_kinematics(chain, q), fk_oracle(chain, q), atol=1e-14)


def test_zero_link_prepended_changes_nothing(rng):
    chain = reference_chain()
    longer = DHChain((DHLink(0.0, 0.0, 0.0),) + chain.links)
    q = rng.uniform(-1, 1, 6)
    assert np.allclose(forward_kinematics(longer, np.r_[0.0, q]), forward_kinematics(chain, q),
                       atol=1e-15)


def test_fk_is_bit_deterministic(rng):
    chain = reference_chain()
    q = rng.uniform(-1, 1, 6)
    assert forward_kinematics(chain, q).tobytes() == forward_kinematics(chain, q.copy()).tobytes()


def test_fk_length_mismatch():
    with pytest.raises(LengthMismatch):
        forward_kinematics(reference_chain(), [0, 0, 0])


def test_two_r_jacobian():
    J = jacobian(two_r(), [0, 0])
    assert J[1, 0] == pytest.approx(2.0)
    assert J[1, 1] == pytest.approx(1.0)
    assert np.allclose(J[5], [1, 1])


def test_locked_joint_column_still_filled():
    chain = reference_chain().with_limits([[0.3, 0.3]] + [[-np.pi, np.pi]] * 5)
    J = jacobian(chain, [0.3, 0, 0, 0, 0, 0])
    assert np.linalg.norm(J[:, 0]) > 0.1


def test_jacobian_matches_finite_differences_on_random_chains(rng):
    for _ in range(100):
        chain = random_chain(rng)
        q = rng.uniform(-np.pi, np.pi, 6)
        assert np.max(np.abs(jacobian(chain, q) - numeric_jacobian(chain, q))) < 1e-5


def test_check_limits_boundaries():
    chain = reference_chain()
    hi = chain.joint_limits[:, 1]
    assert check_limits(chain, np.zeros(6))
    assert check_limits(chain, hi)
    q = hi.copy()
    q[2] += 1e-6
    assert not check_limits(chain, q)


def test_ik_fixed_point(rng):
    chain = reference_chain()
    lo, hi = chain.joint_limits.T
    for _ in range(50):
        q = rng.uniform(lo, hi)
        assert np.array_equal(solve_ik(chain, forward_kinematics(chain, q), q), q)


def test_ik_unreachable_beyond_workspace():
    assert max_reach(two_r()) == pytest.approx(2.0)
    target = np.eye(4)
    target[0, 3] = 2.5
    with pytest.raises(Unreachable):
        solve_ik(two_r(), target, [0, 0])


def test_ik_round_trip_from_perturbed_seed(rng):
    chain = reference_chain()
    lo, hi = chain.joint_limits.T
    for k in range(1000):
        q = rng.uniform(lo, hi)
        target = forward_kinematics(chain, q)
        seed = np.clip(q + rng.normal(0, 0.3, 6), lo, hi)
        sol = solve_ik(chain, target, seed, rng=np.random.default_rng(k))
        T = fk_oracle(chain, sol)
        assert np.linalg.norm(T[:3, 3] - target[:3, 3]) < 1e-6
        assert trace_angle(T[:3, :3], target[:3, :3]) < 1e-6
        assert check_limits(chain, sol)


def test_ik_respects_tight_limits(rng):
    chain = reference_chain()
    narrow = chain.with_limits(np.tile([-0.5, 0.5], (6, 1)))
    for k in range(30):
        q = rng.uniform(-0.5, 0.5, 6)
        sol = solve_ik(narrow, forward_kinematics(narrow, q), np.zeros(6),
                       rng=np.random.default_rng(k))
        assert check_limits(narrow, sol)


def test_ik_is_deterministic_for_a_seeded_rng(rng):
    chain = reference_chain()
    target = forward_kinematics(chain, [2.5, -1.9, 1.8, 2.9, 1.6, -2.4])
    a = solve_ik(chain, target, np.zeros(6), rng=np.random.default_rng(3))
    b = solve_ik(chain, target, np.zeros(6), rng=np.random.default_rng(3))
    assert np.array_equal(a, b)


def test_unlimited_joints_wrap_instead_of_sticking():
    chain = DHChain(reference_chain().links)  # +-pi everywhere
    q = np.array([3.1, -0.5, 0.7, 3.05, -0.6, -3.1])
    target = forward_kinematics(chain, q)
    sol = solve_ik(chain, target, np.array([-3.1, -0.5, 0.7, -3.1, -0.6, 3.1]))
    assert check_limits(chain, sol)
    assert np.allclose(forward_kinematics(chain, sol), target, atol=1e-6)


def test_chain_serialization_round_trip():
    chain = reference_chain()
    assert DHChain.from_list(chain.to_list()) == chain
    assert hash(DHChain.from_list(chain.to_list())) == hash(chain)


def test_chain_validation():
    with pytest.raises(ValueError):
        DHChain(())
    with pytest.raises(ValueError):
        DHChain((DHLink(1.0, 0.0, 0.0),), np.array([[1.0, -1.0]]))
    with pytest.raises(ValueError):
        DHChain((DHLink(np.nan, 0.0, 0.0),))
