import numpy as np
import pytest

from conftest import make_manifest, random_unit, rodrigues
from rocapkit.capture import ObjectSpec, StateSpec
from rocapkit.errors import EmptyPredictionSet, EmptyState, UnknownRecordId
from rocapkit.evalkit import (EvalReport, PredictionRecord, accuracy_at, evaluate, format_cell,
                              orientation_error, parse_report_csv, per_state_mean, pixel_error,
                              read_predictions, render_report, state_accuracy,
                              write_predictions)
from rocapkit.transforms import quat_from_axis_angle, quat_from_matrix, quat_to_matrix


def perturbed(manifest, angles, rng, **extra):
    """Predictions whose rotation differs from the label by exactly ``angles``."""
    out = []
    for r, a in zip(manifest.records, angles):
        R = rodrigues(random_unit(rng), a) @ r.camera_to_object[:3, :3]
        out.append(PredictionRecord(r.record_id, quat_from_matrix(R), **extra))
    return out


def test_orientation_error_examples():
    q = quat_from_axis_angle([0, 1, 0], 0.4)
    assert orientation_error(q, q) == 0.0
    assert orientation_error(-q, q) == 0.0
    q20 = quat_from_axis_angle([1, 0, 0], np.radians(20))
    assert orientation_error(q20, [1, 0, 0, 0]) == pytest.approx(np.radians(20))


def test_accuracy_examples(rng):
    m = make_manifest([rodrigues(random_unit(rng), 1.0) for _ in range(10)])
    exact = perturbed(m, [0.0] * 10, rng)
    assert accuracy_at(exact, m) == 100.0
    half = perturbed(m, [0.1] * 5 + [0.5] * 5, rng)
    assert accuracy_at(half, m) == 50.0
    assert accuracy_at(half, m, threshold=0.6) == 100.0
    assert accuracy_at(perturbed(m, [0.4] * 10, rng), m) == 0.0


def test_strict_mode_counts_missing_records(rng):
    m = make_manifest([np.eye(3)] * 4)
    preds = perturbed(m, [0.0] * 4, rng)[:2]
    assert accuracy_at(preds, m) == 100.0
    assert accuracy_at(preds, m, strict=True) == 50.0


def test_prediction_errors(rng):
    m = make_manifest([np.eye(3)] * 2)
    with pytest.raises(EmptyPredictionSet):
        accuracy_at([], m)
    with pytest.raises(UnknownRecordId):
        accuracy_at([PredictionRecord("nope", np.array([1.0, 0, 0, 0]))], m)


def test_per_state_mean_is_unweighted(rng):
    obj = ObjectSpec("clamp", "deformable", (StateSpec("a"), StateSpec("b")))
    states = ["a"] * 10 + ["b"] * 4
    m = make_manifest([np.eye(3)] * 14, states, obj)
    angles = [0.0] * 8 + [1.0] * 2 + [0.0] * 4  # a: 80 %, b: 100 %
    per_state, mean = per_state_mean(perturbed(m, angles, rng), m)
    assert per_state == {"a": 80.0, "b": 100.0} and mean == 90.0
    with pytest.raises(EmptyState):
        per_state_mean(perturbed(m, angles, rng)[:10], m)


def test_pixel_error(rng):
    m = make_manifest([np.eye(3)] * 3)
    preds = [PredictionRecord(r.record_id, r.label_quaternion, (323.0, 244.0))
             for r in m.records]
    px = pixel_error(preds, m)
    assert px["mean"] == 5.0 and px["n"] == 3
    offsets = rng.normal(0, 4, (3, 2))
    preds = [PredictionRecord(r.record_id, r.label_quaternion, (320 + du, 240 + dv))
             for r, (du, dv) in zip(m.records, offsets)]
    brute = np.mean([np.sqrt(du * du + dv * dv) for du, dv in offsets])
    assert pixel_error(preds, m)["mean"] == pytest.approx(brute)
    assert pixel_error([PredictionRecord("r00000", np.array([1.0, 0, 0, 0]))], m)["n"] == 0


def test_state_accuracy(rng):
    obj = ObjectSpec("s", "deformable", (StateSpec("a"), StateSpec("b")))
    m = make_manifest([np.eye(3)] * 4, ["a", "a", "b", "b"], obj)
    right = [PredictionRecord(r.record_id, r.label_quaternion, state_id=r.state_id)
             for r in m.records]
    wrong = [PredictionRecord(r.record_id, r.label_quaternion,
                              state_id="b" if r.state_id == "a" else "a") for r in m.records]
    assert state_accuracy(right, m) == 100.0
    assert state_accuracy(wrong, m) == 0.0
    assert state_accuracy(right[:2] + wrong[2:], m) == 50.0
    with pytest.raises(EmptyPredictionSet):
        state_accuracy(perturbed(m, [0.0] * 4, rng), m)


def test_accuracy_monotone_in_threshold(rng):
    m = make_manifest([rodrigues(random_unit(rng), 2.0) for _ in range(200)])
    preds = perturbed(m, rng.uniform(0, np.pi, 200), rng)
    acc = [accuracy_at(preds, m, t) for t in np.linspace(0, np.pi, 40)]
    assert all(a <= b for a, b in zip(acc, acc[1:]))
    assert acc[-1] == 100.0


def test_global_rotation_leaves_accuracy_unchanged(rng):
    rots = [rodrigues(random_unit(rng), rng.uniform(0, np.pi)) for _ in range(100)]
    m = make_manifest(rots)
    preds = perturbed(m, rng.uniform(0, 0.7, 100), rng)
    W = rodrigues(random_unit(rng), 1.3)
    m2 = make_manifest([W @ R for R in rots])
    preds2 = [PredictionRecord(p.record_id, quat_from_matrix(W @ quat_to_matrix(p.quaternion)))
              for p in preds]
    assert accuracy_at(preds2, m2) == accuracy_at(preds, m)


def test_evaluate_fills_report(rng):
    obj = ObjectSpec("s", "deformable", (StateSpec("a"), StateSpec("b")))
    m = make_manifest([np.eye(3)] * 4, ["a", "b", "a", "b"], obj)
    preds = [PredictionRecord(r.record_id, r.label_quaternion, (320.0, 240.0), r.state_id)
             for r in m.records]
    rep = evaluate(preds, m, method="mine", condition="dim")
    assert rep.mean_accuracy == 100.0 and rep.pixel_error_mean == 0.0
    assert rep.state_classification_accuracy == 100.0
    assert rep.counts == {"predictions": 4, "records": 4}
    assert EvalReport.from_dict(rep.to_dict()) == rep


def test_predictions_round_trip(tmp_path, rng):
    m = make_manifest([np.eye(3)] * 3)
    preds = perturbed(m, [0.1, 0.2, 0.3], rng, pixel_center=(1.5, 2.5), state_id="s0")
    write_predictions(tmp_path / "p.json", preds)
    back = read_predictions(tmp_path / "p.json")
    assert [b.to_dict() for b in back] == [p.to_dict() for p in preds]


def test_render_single_cell():
    text, csv_text = render_report([EvalReport("frog", 0.35, {"s": 61.94}, 61.94)])
    assert text.splitlines() == ["      frog", "ours  61.9"]
    assert csv_text == "method,frog\nours,61.9\n"


def test_render_report_csv_round_trip():
    reps = [EvalReport("flask", 0.35, {}, 87.1), EvalReport("flask", 0.35, {}, 66.9,
                                                            condition="dark"),
            EvalReport("spray", 0.35, {}, 87.6), EvalReport("flask", 0.35, {}, 16.2,
                                                            method="base")]
    _, csv_text = render_report(reps)
    cells = parse_report_csv(csv_text)
    assert cells == {("ours", "flask"): [87.1, 66.9], ("ours", "spray"): [87.6],
                     ("base", "flask"): [16.2]}
    assert "base,16.2,-" in csv_text.splitlines()
    assert format_cell([]) == "-" and format_cell([1.0, 2.0, 3.0]) == "1.0(2.0)(3.0)"
    with pytest.raises(ValueError):
        render_report([])
