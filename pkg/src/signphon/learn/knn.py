from __future__ import annotations

import numpy as np


class KnnModel:
    """k-nearest-neighbour majority vote under Euclidean distance.

    Vote ties go to the label with the smaller summed neighbour distance,
    then to the lexicographically smaller label. Equidistant neighbours at
    the k-th place are taken in training order.
    """

    kind = "knn"

    def __init__(self, k: int = 5):
        if k < 1:
            raise ValueError("k must be >= 1")
        self.k = k
        self.X_: np.ndarray | None = None
        self.y_: np.ndarray | None = None
        self.classes_: np.ndarray | None = None

    def fit(self, X, y) -> "KnnModel":
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=str)
        if len(X) == 0:
            raise ValueError("empty training set")
        if self.k > len(X):
            raise ValueError(f"k={self.k} exceeds the {len(X)} training samples")
        self.X_ = X
        self.classes_, self.y_ = np.unique(y, return_inverse=True)
        return self

    def _neighbours(self, X):
        X = np.asarray(X, dtype=float)
        n, f = self.X_.shape
        # direct differences (not the |a|^2 + |b|^2 - 2ab expansion) keep a
        # query's distance to an identical training point exactly zero
        chunk = max(1, 4_000_000 // (n * f))
        for s in range(0, len(X), chunk):
            q = X[s : s + chunk]
            d = np.sqrt(((q[:, None, :] - self.X_[None, :, :]) ** 2).sum(axis=2))
            idx = np.argsort(d, axis=1, kind="stable")[:, : self.k]
            yield idx, np.take_along_axis(d, idx, axis=1)

    def _votes(self, X):
        C = len(self.classes_)
        for idx, dist in self._neighbours(X):
            lab = self.y_[idx]
            votes = np.zeros((len(idx), C))
            dsum = np.zeros((len(idx), C))
            rows = np.repeat(np.arange(len(idx)), idx.shape[1])
            np.add.at(votes, (rows, lab.ravel()), 1.0)
            np.add.at(dsum, (rows, lab.ravel()), dist.ravel())
            yield votes, dsum

    def predict_proba(self, X) -> np.ndarray:
        return np.concatenate([v / self.k for v, _ in self._votes(X)]) if len(X) else np.zeros((0, len(self.classes_)))

    def predict(self, X) -> np.ndarray:
        out = []
        for votes, dsum in self._votes(X):
            best = votes.max(axis=1, keepdims=True)
            # classes_ is sorted, so argmin on the masked distance sums
            # already breaks the final tie lexicographically
            masked = np.where(votes == best, dsum, np.inf)
            out.append(self.classes_[np.argmin(masked, axis=1)])
        return np.concatenate(out) if out else np.array([], dtype=str)
