"""
Scoring orientation predictions
===============================

Accuracy is the share of predictions within 0.35 rad of the label, averaged
over the object's states with equal weight.
"""

import numpy as np

from rocapkit.camera import default_intrinsics
from rocapkit.capture import CaptureRecord, Manifest, example_objects
from rocapkit.evalkit import PredictionRecord, evaluate, render_report
from rocapkit.transforms import make_transform, quat_from_matrix, quat_to_matrix, so3_exp

rng = np.random.default_rng(7)
obj = example_objects()["scissors"]
records = []
for i in range(60):
    R = so3_exp(rng.normal(size=3))
    state = obj.states[i % 2].id
    records.append(CaptureRecord(f"r{i:03d}", np.eye(4), make_transform(R, [0, 0, 1]),
                                 quat_from_matrix(R), (320.0, 240.0), state, np.zeros(6)))
manifest = Manifest(obj, np.eye(4), default_intrinsics(), records)

reports = []
for method, spread in [("sharp", 0.1), ("blurry", 0.4)]:
    preds = []
    for r in records:
        err = so3_exp(rng.normal(scale=spread, size=3))
        preds.append(PredictionRecord(r.record_id,
                                      quat_from_matrix(err @ quat_to_matrix(r.label_quaternion))))
    rep = evaluate(preds, manifest, method=method)
    print(method, {k: round(v, 1) for k, v in rep.per_state_accuracy.items()},
          "mean", round(rep.mean_accuracy, 1))
    reports.append(rep)

text, _ = render_report(reports)
print(text)
