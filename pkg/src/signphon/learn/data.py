"""Labelled datasets, train/validation/test splits and k-fold evaluation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np


@dataclass(frozen=True)
class LabeledDataset:
    features: np.ndarray
    labels: dict[str, np.ndarray]
    feature_names: tuple[str, ...] = ()
    sample_ids: tuple[str, ...] | None = field(default=None, compare=False)

    def __post_init__(self):
        X = np.asarray(self.features, dtype=float)
        if X.ndim != 2 or X.shape[1] == 0:
            raise ValueError("features must be a non-empty N x F matrix")
        object.__setattr__(self, "features", X)
        labels = {t: np.asarray(y, dtype=str) for t, y in self.labels.items()}
        for t, y in labels.items():
            if len(y) != len(X):
                raise ValueError(f"task {t!r} has {len(y)} labels for {len(X)} samples")
        object.__setattr__(self, "labels", labels)
        if not self.feature_names:
            object.__setattr__(self, "feature_names", tuple(f"f{i}" for i in range(X.shape[1])))
        elif len(self.feature_names) != X.shape[1]:
            raise ValueError("feature_names length does not match the feature count")

    def __len__(self) -> int:
        return len(self.features)

    @property
    def tasks(self) -> tuple[str, ...]:
        return tuple(self.labels)

    def subset(self, idx) -> "LabeledDataset":
        idx = np.asarray(idx, dtype=int)
        ids = None if self.sample_ids is None else tuple(self.sample_ids[i] for i in idx)
        return LabeledDataset(
            self.features[idx], {t: y[idx] for t, y in self.labels.items()}, self.feature_names, ids
        )


@dataclass(frozen=True)
class SplitSpec:
    train: float = 0.67
    validation: float = 0.165
    test: float = 0.165
    seed: int = 0

    def __post_init__(self):
        fr = (self.train, self.validation, self.test)
        if min(fr) < 0 or abs(sum(fr) - 1.0) > 1e-9:
            raise ValueError(f"split fractions must be non-negative and sum to 1, got {fr}")


def split_sizes(n: int, fractions: Sequence[float]) -> tuple[int, ...]:
    """Largest-remainder rounding of ``n * fractions``; ties go to the earlier part."""
    quotas = [n * f for f in fractions]
    sizes = [math.floor(q) for q in quotas]
    rest = n - sum(sizes)
    order = sorted(range(len(quotas)), key=lambda i: (-(quotas[i] - sizes[i]), i))
    for i in order[:rest]:
        sizes[i] += 1
    return tuple(sizes)


def split_indices(n: int, spec: SplitSpec = SplitSpec()) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if n < 3:
        raise ValueError("need at least 3 samples to split")
    n_tr, n_va, _ = split_sizes(n, (spec.train, spec.validation, spec.test))
    perm = np.random.default_rng(spec.seed).permutation(n)
    return perm[:n_tr], perm[n_tr : n_tr + n_va], perm[n_tr + n_va :]


def split(dataset: LabeledDataset, spec: SplitSpec = SplitSpec()):
    """(train, validation, test) subsets; deterministic for a fixed seed."""
    return tuple(dataset.subset(i) for i in split_indices(len(dataset), spec))


def kfold_indices(n: int, folds: int = 5, seed: int = 0) -> list[np.ndarray]:
    if folds < 2:
        raise ValueError("k-fold needs at least 2 folds")
    if n < folds:
        raise ValueError(f"{n} samples cannot fill {folds} folds")
    perm = np.random.default_rng(seed).permutation(n)
    return np.array_split(perm, folds)


def accuracy(truth, predicted) -> float:
    truth, predicted = np.asarray(truth), np.asarray(predicted)
    if len(truth) != len(predicted):
        raise ValueError("truth and predictions differ in length")
    if len(truth) == 0:
        return math.nan
    return float(np.mean(truth == predicted))


def _default_eval(model, X, y) -> float:
    return accuracy(y, model.predict(X))


def kfold(
    X,
    y,
    train_fn: Callable,
    eval_fn: Callable = _default_eval,
    folds: int = 5,
    seed: int = 0,
) -> tuple[float, float]:
    """Mean and population standard deviation of per-fold scores.

    ``train_fn(X_train, y_train)`` returns a model that ``eval_fn(model,
    X_val, y_val)`` scores.
    """
    X, y = np.asarray(X), np.asarray(y)
    parts = kfold_indices(len(X), folds, seed)
    scores = []
    for k, val in enumerate(parts):
        tr = np.concatenate([p for i, p in enumerate(parts) if i != k])
        model = train_fn(X[tr], y[tr])
        scores.append(eval_fn(model, X[val], y[val]))
    return float(np.mean(scores)), float(np.std(scores))
