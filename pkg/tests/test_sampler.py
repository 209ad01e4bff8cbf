import json

import numpy as np
import pytest

from conftest import trace_angle
from rocapkit.capture import example_objects, ObjectSpec, StateSpec
from rocapkit.errors import EmptyPlan, InvalidStep
from rocapkit.kinematics import DHChain, forward_kinematics, reference_chain
from rocapkit.sampler import (COVERAGE_COLUMNS, OrientationSample, build_capture_plan,
                              dedup_by_arc, export_coverage, filter_reachable, plan_from_dict,
                              plan_to_dict, read_coverage, sample_euler_grid)
from rocapkit.transforms import quat_from_axis_angle, quat_to_matrix

CENTRAL = [-0.4, 0.1, 0.4]


def retained(samples):
    return {i for i, s in enumerate(samples) if s.retained}


def fake_reachable(n, rng):
    return [OrientationSample(quat_from_axis_angle([0, 0, 1], 0.5 * k), (0.0, 0.0, 0.0),
                              True, True, rng.uniform(-1, 1, 6)) for k in range(n)]


def test_grid_sizes():
    assert len(sample_euler_grid(360)) == 1
    assert np.allclose(sample_euler_grid(360)[0].quaternion, [1, 0, 0, 0])
    assert len(sample_euler_grid(90)) == 64
    assert len(sample_euler_grid(20)) == 18**3 == 5832


@pytest.mark.parametrize("step", [0, -10, 7, 400, "x"])
def test_invalid_steps(step):
    with pytest.raises(InvalidStep):
        sample_euler_grid(step)


def test_grid_order_is_lexicographic():
    e = [s.source_euler for s in sample_euler_grid(90)]
    assert e == sorted(e)
    assert e[1] == (0.0, 0.0, 90.0)


def test_dedup_90_grid_matches_brute_force():
    grid = sample_euler_grid(90)
    out = dedup_by_arc(grid, 0.35)
    assert sum(s.retained for s in out) == 24
    R = [s.rotation for s in grid]
    keep = [i for i in retained(out)]
    D = np.array([[trace_angle(R[i], R[j]) for j in keep] for i in keep])
    assert np.all(D[~np.eye(len(keep), dtype=bool)] >= np.pi / 2 - 1e-9)


def test_twenty_degrees_about_z_is_eliminated():
    s = [OrientationSample(quat_from_axis_angle([0, 0, 1], 0.0), (0, 0, 0)),
         OrientationSample(quat_from_axis_angle([0, 0, 1], np.radians(20)), (20, 0, 0))]
    assert [x.retained for x in dedup_by_arc(s, 0.35)] == [True, False]


def test_threshold_zero_keeps_everything():
    assert all(s.retained for s in dedup_by_arc(sample_euler_grid(45), 0.0))


def test_retained_samples_respect_threshold_pairwise():
    out = dedup_by_arc(sample_euler_grid(30), 0.35)
    R = np.array([s.rotation for s in out if s.retained])
    for i in range(len(R)):
        c = (np.einsum("ij,nij->n", R[i], R[i + 1:]) - 1.0) / 2.0
        assert np.all(np.arccos(np.clip(c, -1, 1)) >= 0.35 - 1e-9)


@pytest.mark.parametrize("step", [90, 60, 45])
def test_dedup_subset_monotone_on_coarse_grids(step):
    grid = sample_euler_grid(step)
    sets = [retained(dedup_by_arc(grid, t)) for t in np.linspace(0.05, 1.5, 15)]
    assert all(b <= a for a, b in zip(sets, sets[1:]))


def test_dedup_count_monotone_and_greedy_counterexample():
    grid = sample_euler_grid(30)
    counts = [len(retained(dedup_by_arc(grid, t))) for t in np.linspace(0.05, 1.5, 15)]
    assert all(a >= b for a, b in zip(counts, counts[1:]))
    # greedy first-come thinning is not subset-monotone in general
    idx = [s.source_euler for s in grid].index((90.0, 60.0, 30.0))
    assert idx not in retained(dedup_by_arc(grid, 0.30))
    assert idx in retained(dedup_by_arc(grid, 0.55))


def test_far_capture_position_is_unreachable():
    s = filter_reachable(dedup_by_arc(sample_euler_grid(90)), reference_chain(), [3.0, 0, 0])
    assert not any(x.reachable for x in s)


def test_unlimited_chain_reaches_most_orientations():
    chain = DHChain(reference_chain().links)
    s = filter_reachable(dedup_by_arc(sample_euler_grid(60)), chain, CENTRAL)
    n_ret = sum(x.retained for x in s)
    assert sum(x.reachable for x in s) / n_ret > 0.9


def test_reachable_subset_of_retained_and_solutions_valid():
    chain = reference_chain()
    s = filter_reachable(dedup_by_arc(sample_euler_grid(90)), chain, CENTRAL)
    for x in s:
        assert not x.reachable or x.retained
        if x.reachable:
            T = forward_kinematics(chain, x.joint_solution)
            assert np.allclose(T[:3, 3], CENTRAL, atol=1e-6)
            assert trace_angle(T[:3, :3], x.rotation) < 1e-6


def test_reachability_independent_of_worker_count():
    chain = reference_chain()
    grid = dedup_by_arc(sample_euler_grid(90))
    a = filter_reachable(grid, chain, CENTRAL, seed=4, workers=1)
    b = filter_reachable(grid, chain, CENTRAL, seed=4, workers=2)
    assert [x.reachable for x in a] == [x.reachable for x in b]
    for x, y in zip(a, b):
        if x.reachable:
            assert np.array_equal(x.joint_solution, y.joint_solution)


def test_tool_offset_moves_the_object_frame():
    chain = reference_chain()
    offset = np.eye(4)
    offset[2, 3] = 0.1
    s = filter_reachable(dedup_by_arc(sample_euler_grid(90)), chain, CENTRAL, offset)
    for x in s:
        if x.reachable:
            obj = forward_kinematics(chain, x.joint_solution) @ offset
            assert np.allclose(obj[:3, 3], CENTRAL, atol=1e-6)


def test_plan_counts(rng):
    chain = reference_chain()
    objs = example_objects()
    samples = fake_reachable(24, rng)
    plan = build_capture_plan(samples, objs["clamp"], chain)
    assert len(plan.waypoints) == 72 and plan.n_pauses == 0
    sc = build_capture_plan(samples, objs["scissors"], chain)
    assert sc.n_pauses == 1
    pause_at = [i for i, w in enumerate(sc.waypoints) if w.operator_pause]
    assert pause_at == [24]
    assert sc.waypoints[24].state_id == "open"
    assert np.array_equal(sc.waypoints[24].joint_state, sc.waypoints[23].joint_state)
    single = ObjectSpec("cup", "deformable", (StateSpec("only"),))
    assert len(build_capture_plan(samples[:1], single, chain).waypoints) == 1


def test_plan_waypoints_match_forward_kinematics(rng):
    chain = reference_chain()
    plan = build_capture_plan(fake_reachable(5, rng), example_objects()["clamp"], chain,
                              ordering="nearest")
    for w in plan.waypoints:
        assert np.array_equal(forward_kinematics(chain, w.joint_state), w.base_to_gripper)


def test_empty_plan(rng):
    s = [OrientationSample(np.array([1.0, 0, 0, 0]), (0, 0, 0), True, False)]
    with pytest.raises(EmptyPlan):
        build_capture_plan(s, example_objects()["plush"], reference_chain())


def test_plan_round_trip_and_determinism(rng):
    chain = reference_chain()
    grid = dedup_by_arc(sample_euler_grid(90))
    plans = []
    for _ in range(2):
        s = filter_reachable(grid, chain, CENTRAL, seed=1)
        plans.append(json.dumps(plan_to_dict(build_capture_plan(s, example_objects()["clamp"],
                                                                chain, CENTRAL))))
    assert plans[0] == plans[1]
    back = plan_from_dict(json.loads(plans[0]))
    assert json.dumps(plan_to_dict(back)) == plans[0]


def test_coverage_csv(tmp_path):
    s = dedup_by_arc(sample_euler_grid(90))
    s = filter_reachable(s, reference_chain(), CENTRAL)
    path = tmp_path / "coverage.csv"
    export_coverage(s, path)
    header = path.read_text().splitlines()[0].split(",")
    assert header == COVERAGE_COLUMNS
    rows = read_coverage(path)
    assert len(rows) == len(s) == 64
    assert np.allclose(rows[0]["z_axis"], [0, 0, 1])
    assert [r["retained"] for r in rows] == [x.retained for x in s]
    assert [r["reachable"] for r in rows] == [x.reachable for x in s]
    for r, x in zip(rows, s):
        assert np.array_equal(r["quaternion"], x.quaternion)
        assert np.allclose(r["z_axis"], quat_to_matrix(x.quaternion)[:, 2])
