"""Orientation accuracy and pixel-displacement evaluation.

A prediction is counted correct when its geodesic orientation error is at most
the threshold (0.35 rad, about 20 degrees; closed interval). Per-object
accuracy for objects with several states is the unweighted mean over states.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError, EmptyPredictionSet, EmptyState, UnknownRecordId
from .transforms import arc_distance, quat_normalize

THRESHOLD = 0.35


@dataclass(frozen=True)
class PredictionRecord:
    record_id: str
    quaternion: np.ndarray
    pixel_center: tuple[float, float] | None = None
    state_id: str | None = None

    @classmethod
    def from_dict(cls, d) -> "PredictionRecord":
        px = d.get("pixel_center")
        return cls(str(d["record_id"]), quat_normalize(d["quaternion"]),
                   None if px is None else (float(px[0]), float(px[1])),
                   d.get("state_id"))

    def to_dict(self) -> dict:
        return {"record_id": self.record_id,
                "quaternion": [float(v) for v in self.quaternion],
                "pixel_center": None if self.pixel_center is None else list(self.pixel_center),
                "state_id": self.state_id}


@dataclass
class EvalReport:
    object_name: str
    threshold_rad: float
    per_state_accuracy: dict[str, float]
    mean_accuracy: float
    pixel_error_mean: float | None = None
    state_classification_accuracy: float | None = None
    counts: dict[str, int] = field(default_factory=dict)
    method: str = "ours"
    condition: str | None = None

    def to_dict(self) -> dict:
        return {"object_name": self.object_name, "method": self.method,
                "condition": self.condition, "threshold_rad": self.threshold_rad,
                "per_state_accuracy": dict(self.per_state_accuracy),
                "mean_accuracy": self.mean_accuracy,
                "pixel_error_mean": self.pixel_error_mean,
                "state_classification_accuracy": self.state_classification_accuracy,
                "counts": dict(self.counts)}

    @classmethod
    def from_dict(cls, d) -> "EvalReport":
        return cls(str(d["object_name"]), float(d.get("threshold_rad", THRESHOLD)),
                   {str(k): float(v) for k, v in d.get("per_state_accuracy", {}).items()},
                   float(d["mean_accuracy"]), d.get("pixel_error_mean"),
                   d.get("state_classification_accuracy"), dict(d.get("counts", {})),
                   str(d.get("method", "ours")), d.get("condition"))


def read_predictions(path) -> list[PredictionRecord]:
    return [PredictionRecord.from_dict(d) for d in json.loads(Path(path).read_text())]


def write_predictions(path, predictions) -> None:
    Path(path).write_text(json.dumps([p.to_dict() for p in predictions], indent=1) + "\n")


def orientation_error(pred, gt) -> float:
    return arc_distance(pred, gt)


def _match(predictions, manifest) -> list[tuple[PredictionRecord, object]]:
    gt = manifest.by_id()
    seen = set()
    pairs = []
    for p in predictions:
        if p.record_id not in gt:
            raise UnknownRecordId(f"prediction for unknown record {p.record_id!r}")
        if p.record_id in seen:
            raise DataError(f"duplicate prediction for {p.record_id!r}")
        seen.add(p.record_id)
        pairs.append((p, gt[p.record_id]))
    return pairs


def _accuracy(pairs, threshold: float, n_total: int) -> float:
    correct = sum(orientation_error(p.quaternion, r.label_quaternion) <= threshold
                  for p, r in pairs)
    return 100.0 * correct / n_total


def accuracy_at(predictions, manifest, threshold: float = THRESHOLD,
                strict: bool = False) -> float:
    """Percent of predictions within ``threshold`` radians of ground truth.

    In strict mode the denominator is every manifest record, so records
    without a prediction count as failures.
    """
    predictions = list(predictions)
    if not predictions:
        raise EmptyPredictionSet("no predictions to evaluate")
    pairs = _match(predictions, manifest)
    n = len(manifest.records) if strict else len(pairs)
    return _accuracy(pairs, threshold, n)


def per_state_mean(predictions, manifest, threshold: float = THRESHOLD,
                   strict: bool = False) -> tuple[dict[str, float], float]:
    """Accuracy within each state of the manifest's object and their plain mean."""
    predictions = list(predictions)
    if not predictions:
        raise EmptyPredictionSet("no predictions to evaluate")
    pairs = _match(predictions, manifest)
    per_state = {}
    for state in manifest.object.states:
        sp = [(p, r) for p, r in pairs if r.state_id == state.id]
        n = sum(r.state_id == state.id for r in manifest.records) if strict else len(sp)
        if n == 0:
            raise EmptyState(f"state {state.id!r} has no records to evaluate")
        per_state[state.id] = _accuracy(sp, threshold, n)
    return per_state, float(np.mean(list(per_state.values())))


def pixel_error(predictions, manifest) -> dict:
    """Mean and 50/90/99th percentile of the Euclidean pixel-center error."""
    errs = []
    for p, r in _match(predictions, manifest):
        if p.pixel_center is None or r.label_pixel_center is None:
            continue
        errs.append(float(np.hypot(p.pixel_center[0] - r.label_pixel_center[0],
                                   p.pixel_center[1] - r.label_pixel_center[1])))
    if not errs:
        return {"mean": None, "p50": None, "p90": None, "p99": None, "n": 0}
    q = np.percentile(errs, [50, 90, 99])
    return {"mean": float(np.mean(errs)), "p50": float(q[0]), "p90": float(q[1]),
            "p99": float(q[2]), "n": len(errs)}


def state_accuracy(predictions, manifest) -> float:
    pairs = [(p, r) for p, r in _match(predictions, manifest) if p.state_id is not None]
    if not pairs:
        raise EmptyPredictionSet("no predictions carry a state id")
    return 100.0 * sum(p.state_id == r.state_id for p, r in pairs) / len(pairs)


def evaluate(predictions, manifest, threshold: float = THRESHOLD, strict: bool = False,
             method: str = "ours", condition: str | None = None) -> EvalReport:
    predictions = list(predictions)
    per_state, mean = per_state_mean(predictions, manifest, threshold, strict)
    px = pixel_error(predictions, manifest)
    state_acc = None
    if any(p.state_id is not None for p in predictions):
        state_acc = state_accuracy(predictions, manifest)
    counts = {"predictions": len(predictions), "records": len(manifest.records)}
    return EvalReport(manifest.object.name, threshold, per_state, mean, px["mean"],
                      state_acc, counts, method, condition)


# --------------------------------------------------------------------------
# comparison table: methods as rows, objects as columns

def _table(reports) -> tuple[list[str], list[str], dict]:
    reports = list(reports)
    if not reports:
        raise ValueError("need at least one report")
    methods, objects, cells = [], [], {}
    for r in reports:
        if r.method not in methods:
            methods.append(r.method)
        if r.object_name not in objects:
            objects.append(r.object_name)
        cells.setdefault((r.method, r.object_name), []).append(r.mean_accuracy)
    return methods, objects, cells


def format_cell(values) -> str:
    """``"87.1"`` or, with alternate conditions, ``"87.1(66.9)"``."""
    if not values:
        return "-"
    head = f"{values[0]:.1f}"
    return head + "".join(f"({v:.1f})" for v in values[1:])


def render_report(reports) -> tuple[str, str]:
    """Comparison table as aligned text and as CSV.

    Several reports for one (method, object) cell render the first as the main
    value and the rest in parentheses, in the order given.
    """
    methods, objects, cells = _table(reports)
    header = [""] + objects
    rows = [[m] + [format_cell(cells.get((m, o), [])) for o in objects] for m in methods]
    widths = [max(len(r[i]) for r in [header] + rows) for i in range(len(header))]
    lines = []
    for r in [header] + rows:
        first = r[0].ljust(widths[0])
        rest = [c.rjust(w) for c, w in zip(r[1:], widths[1:])]
        lines.append("  ".join([first] + rest).rstrip())
    text = "\n".join(lines) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["method"] + objects)
    for r in rows:
        w.writerow(r)
    return text, buf.getvalue()


def parse_report_csv(text: str) -> dict[tuple[str, str], list[float]]:
    """Inverse of the CSV half of :func:`render_report`."""
    rows = list(csv.reader(io.StringIO(text)))
    objects = rows[0][1:]
    out = {}
    for r in rows[1:]:
        for obj, cell in zip(objects, r[1:]):
            if cell == "-":
                continue
            parts = cell.replace(")", "").split("(")
            out[(r[0], obj)] = [float(p) for p in parts]
    return out
