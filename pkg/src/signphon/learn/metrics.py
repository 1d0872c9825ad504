from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class ConfusionReport:
    """Rows are true labels, columns predicted labels."""

    labels: tuple[str, ...]
    matrix: np.ndarray

    @property
    def precision(self) -> np.ndarray:
        col = self.matrix.sum(axis=0)
        diag = np.diag(self.matrix).astype(float)
        return np.divide(diag, col, out=np.zeros_like(diag), where=col > 0)

    @property
    def recall(self) -> np.ndarray:
        row = self.matrix.sum(axis=1)
        diag = np.diag(self.matrix).astype(float)
        return np.divide(diag, row, out=np.zeros_like(diag), where=row > 0)

    @property
    def accuracy(self) -> float:
        n = self.matrix.sum()
        return float(np.trace(self.matrix) / n) if n else float("nan")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["truth\\predicted"] + list(self.labels) + ["recall"])
        for lab, row, r in zip(self.labels, self.matrix, self.recall):
            w.writerow([lab] + [int(v) for v in row] + [f"{r:.6f}"])
        w.writerow(["precision"] + [f"{p:.6f}" for p in self.precision] + [""])
        return buf.getvalue()


def confusion_matrix(truth: Sequence, predicted: Sequence, labels: Sequence[str] | None = None) -> ConfusionReport:
    """Count (truth, prediction) pairs.

    Without ``labels`` the vocabulary is the sorted union of observed tokens;
    with it, any other token is an error.
    """
    truth = [str(t) for t in truth]
    predicted = [str(p) for p in predicted]
    if len(truth) != len(predicted):
        raise ValueError("truth and predictions differ in length")
    if labels is None:
        labels = sorted(set(truth) | set(predicted))
    labels = tuple(str(x) for x in labels)
    index = {lab: i for i, lab in enumerate(labels)}
    m = np.zeros((len(labels), len(labels)), dtype=np.int64)
    for t, p in zip(truth, predicted):
        for tok in (t, p):
            if tok not in index:
                raise ValueError(f"unknown label token {tok!r}")
        m[index[t], index[p]] += 1
    return ConfusionReport(labels, m)
