"""Confusion matrices, mean F1, and experiment report files.

Reports are line-delimited JSON with one record per epoch and stable
field names (epoch, split, loss, accuracy, mean_f1); the first record
carries run provenance.  Confusion matrices go to CSV with provenance
comment lines.  Metric values are rounded to 4 decimals in reports.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from har_kit.errors import DataError

REPORT_PRECISION = 4


@dataclass
class ConfusionMatrix:
    """C x C counts; rows are truth, columns are prediction."""

    counts: np.ndarray
    class_names: tuple[str, ...] | None = None

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.ndim != 2 or self.counts.shape[0] != self.counts.shape[1]:
            raise DataError(f"confusion matrix must be square, got {self.counts.shape}")
        if (self.counts < 0).any():
            raise DataError("confusion matrix counts must be non-negative")
        if self.class_names is not None and len(self.class_names) != len(self.counts):
            raise DataError("class_names length mismatch")

    @property
    def n_classes(self) -> int:
        return len(self.counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def merge(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        if other.n_classes != self.n_classes:
            raise DataError("cannot merge confusion matrices of different sizes")
        return ConfusionMatrix(self.counts + other.counts, self.class_names)


def confusion(preds, labels, n_classes: int, class_names=None) -> ConfusionMatrix:
    """Count (truth, prediction) pairs into a matrix."""
    preds = np.asarray(preds, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    if preds.shape != labels.shape or preds.ndim != 1:
        raise DataError("preds and labels must be equal-length 1-D arrays")
    for name, arr in (("preds", preds), ("labels", labels)):
        if len(arr) and (arr.min() < 0 or arr.max() >= n_classes):
            raise DataError(f"{name} contain values outside [0, {n_classes})")
    counts = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(counts, (labels, preds), 1)
    if class_names is not None:
        class_names = tuple(class_names)
    return ConfusionMatrix(counts, class_names)


def per_class_f1(cm: ConfusionMatrix) -> np.ndarray:
    """F1 per class with the zero-division-is-zero convention."""
    counts = cm.counts.astype(np.float64)
    tp = np.diag(counts)
    pred_pos = counts.sum(axis=0)
    actual_pos = counts.sum(axis=1)
    precision = np.where(pred_pos > 0, tp / np.where(pred_pos > 0, pred_pos, 1.0), 0.0)
    recall = np.where(actual_pos > 0, tp / np.where(actual_pos > 0, actual_pos, 1.0), 0.0)
    denom = precision + recall
    return np.where(denom > 0, 2.0 * precision * recall / np.where(denom > 0, denom, 1.0), 0.0)


def mean_f1(cm: ConfusionMatrix) -> float:
    """Unweighted mean of per-class F1 scores."""
    if cm.total == 0:
        raise DataError("mean_f1 of an empty confusion matrix")
    return float(per_class_f1(cm).mean())


def accuracy(cm: ConfusionMatrix) -> float:
    if cm.total == 0:
        raise DataError("accuracy of an empty confusion matrix")
    return float(np.trace(cm.counts) / cm.total)


def _round(x: float) -> float:
    return round(float(x), REPORT_PRECISION)


def epoch_record(epoch: int, split: str, loss: float, cm: ConfusionMatrix) -> dict:
    return {
        "epoch": int(epoch),
        "split": split,
        "loss": _round(loss),
        "accuracy": _round(accuracy(cm)),
        "mean_f1": _round(mean_f1(cm)),
    }


def write_report(path, records, provenance: dict) -> None:
    """Write one meta record then one JSON line per epoch record."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        meta = {"record": "meta", **provenance}
        f.write(json.dumps(meta, sort_keys=True) + "\n")
        for rec in records:
            f.write(json.dumps(rec, sort_keys=True) + "\n")


def read_report(path) -> tuple[dict, list[dict]]:
    with open(path, encoding="utf-8") as f:
        lines = [json.loads(line) for line in f if line.strip()]
    if not lines or lines[0].get("record") != "meta":
        raise DataError(f"{path}: missing meta record")
    return lines[0], lines[1:]


def confusion_to_csv(path, cm: ConfusionMatrix, provenance: dict | None = None) -> None:
    """CSV dump with provenance comments; rows = truth, columns = prediction."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = cm.class_names or tuple(str(i) for i in range(cm.n_classes))
    with open(path, "w", encoding="utf-8") as f:
        for key, value in sorted((provenance or {}).items()):
            f.write(f"# {key}={value}\n")
        f.write("truth\\pred," + ",".join(names) + "\n")
        for name, row in zip(names, cm.counts):
            f.write(name + "," + ",".join(str(int(v)) for v in row) + "\n")
