"""Random forest of CART trees (Gini criterion, bootstrap samples)."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np


@dataclass
class _Tree:
    feature: np.ndarray  # -1 at leaves
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray  # (nodes, classes) class frequencies
    importances: np.ndarray  # raw weighted impurity decrease per feature

    def apply(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(len(X), dtype=np.int64)
        active = self.feature[node] >= 0
        while active.any():
            n = node[active]
            go_left = X[active, self.feature[n]] <= self.threshold[n]
            node[active] = np.where(go_left, self.left[n], self.right[n])
            active = self.feature[node] >= 0
        return node

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]


def _gini(counts: np.ndarray) -> float:
    n = counts.sum()
    if n == 0:
        return 0.0
    p = counts / n
    return float(1.0 - (p * p).sum())


def _best_split(X, y_onehot, idx, features, min_leaf):
    """Best (impurity, feature, threshold) over ``features``, or None."""
    n = len(idx)
    best = None
    Y = y_onehot[idx]
    for f in features:
        x = X[idx, f]
        order = np.argsort(x, kind="stable")
        xs = x[order]
        cl = np.cumsum(Y[order], axis=0)  # left counts for split after position i
        total = cl[-1]
        nl = np.arange(1, n + 1, dtype=float)
        pos = np.arange(min_leaf - 1, n - min_leaf)  # left gets pos + 1 samples
        if len(pos) == 0:
            continue
        valid = xs[pos] < xs[pos + 1]
        if not valid.any():
            continue
        pos = pos[valid]
        left = cl[pos]
        right = total - left
        n_l = nl[pos]
        n_r = n - n_l
        g_l = 1.0 - ((left / n_l[:, None]) ** 2).sum(axis=1)
        g_r = 1.0 - ((right / n_r[:, None]) ** 2).sum(axis=1)
        imp = (n_l * g_l + n_r * g_r) / n
        k = int(np.argmin(imp))
        if best is None or imp[k] < best[0] - 1e-15:
            thr = (xs[pos[k]] + xs[pos[k] + 1]) / 2.0
            # midpoint can round up to the right value for adjacent floats
            if not thr < xs[pos[k] + 1]:
                thr = xs[pos[k]]
            best = (float(imp[k]), int(f), float(thr))
    return best


def build_tree(
    X: np.ndarray,
    y: np.ndarray,
    n_classes: int,
    rng: np.random.Generator,
    max_depth: int | None = 20,
    max_leaf_nodes: int | None = 800,
    min_samples_leaf: int = 50,
    min_samples_split: int = 50,
    max_features: int | None = None,
) -> _Tree:
    """Grow one CART tree best-first (largest impurity decrease expands first)."""
    n_feat = X.shape[1]
    max_features = n_feat if max_features is None else max(1, min(max_features, n_feat))
    onehot = np.eye(n_classes)[y]
    feature, threshold, left, right, value = [], [], [], [], []
    importances = np.zeros(n_feat)

    def new_node(idx):
        counts = onehot[idx].sum(axis=0)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(counts / counts.sum())
        return len(feature) - 1, counts

    def candidate(node_id, idx, counts, depth):
        n = len(idx)
        imp = _gini(counts)
        if imp == 0.0 or n < min_samples_split or n < 2 * min_samples_leaf:
            return None
        if max_depth is not None and depth >= max_depth:
            return None
        perm = rng.permutation(n_feat)
        split = _best_split(X, onehot, idx, perm[:max_features], min_samples_leaf)
        if split is None:
            # keep drawing features until some split is valid
            split = _best_split(X, onehot, idx, perm[max_features:], min_samples_leaf)
        if split is None:
            return None
        child_imp, f, thr = split
        gain = n * (imp - child_imp)
        return (-gain, node_id, idx, f, thr, depth)

    root_idx = np.arange(len(X))
    root, counts = new_node(root_idx)
    heap = []
    c = candidate(root, root_idx, counts, 0)
    if c is not None:
        heapq.heappush(heap, c[:2] + (c,))
    leaves = 1
    while heap and (max_leaf_nodes is None or leaves < max_leaf_nodes):
        _, _, (neg_gain, node_id, idx, f, thr, depth) = heapq.heappop(heap)
        mask = X[idx, f] <= thr
        li, ri = idx[mask], idx[~mask]
        feature[node_id], threshold[node_id] = f, thr
        importances[f] += -neg_gain
        leaves += 1
        for child_idx, slot in ((li, left), (ri, right)):
            cid, ccounts = new_node(child_idx)
            slot[node_id] = cid
            c = candidate(cid, child_idx, ccounts, depth + 1)
            if c is not None:
                heapq.heappush(heap, c[:2] + (c,))

    return _Tree(
        np.array(feature, dtype=np.int64),
        np.array(threshold, dtype=float),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        np.array(value, dtype=float).reshape(len(feature), n_classes),
        importances / len(X),
    )


class ForestModel:
    """Bagged CART trees; prediction is the majority vote of the trees.

    ``max_features_fraction`` of the features (rounded up, at least one) are
    drawn at every split. Defaults are the tuned grid values for hand
    keypoint features.
    """

    kind = "forest"

    def __init__(
        self,
        n_estimators: int = 30,
        max_depth: int | None = 20,
        max_leaf_nodes: int | None = 800,
        min_samples_leaf: int = 50,
        min_samples_split: int = 50,
        max_features_fraction: float = 0.1,
        bootstrap: bool = True,
        seed: int = 0,
    ):
        for name in ("n_estimators", "min_samples_leaf", "min_samples_split"):
            if locals()[name] < 1:
                raise ValueError(f"{name} must be positive")
        if not 0 < max_features_fraction <= 1:
            raise ValueError("max_features_fraction must lie in (0, 1]")
        self.n_estimators = n_estimators
        self.max_depth = max_depth
        self.max_leaf_nodes = max_leaf_nodes
        self.min_samples_leaf = min_samples_leaf
        self.min_samples_split = min_samples_split
        self.max_features_fraction = max_features_fraction
        self.bootstrap = bootstrap
        self.seed = seed
        self.trees_: list[_Tree] = []
        self.classes_: np.ndarray | None = None
        self.n_features_: int = 0

    def get_params(self) -> dict:
        return {
            k: getattr(self, k)
            for k in ("n_estimators", "max_depth", "max_leaf_nodes", "min_samples_leaf",
                      "min_samples_split", "max_features_fraction", "bootstrap", "seed")
        }

    def fit(self, X, y) -> "ForestModel":
        X = np.asarray(X, dtype=float)
        self.classes_, yi = np.unique(np.asarray(y, dtype=str), return_inverse=True)
        self.n_features_ = X.shape[1]
        n_sub = max(1, math.ceil(self.max_features_fraction * self.n_features_))
        self.trees_ = []
        for child in np.random.SeedSequence(self.seed).spawn(self.n_estimators):
            rng = np.random.default_rng(child)
            idx = rng.integers(0, len(X), len(X)) if self.bootstrap else np.arange(len(X))
            self.trees_.append(
                build_tree(
                    X[idx], yi[idx], len(self.classes_), rng,
                    max_depth=self.max_depth,
                    max_leaf_nodes=self.max_leaf_nodes,
                    min_samples_leaf=self.min_samples_leaf,
                    min_samples_split=self.min_samples_split,
                    max_features=n_sub,
                )
            )
        return self

    def predict_proba(self, X) -> np.ndarray:
        """Mean of the trees' leaf class frequencies."""
        X = np.asarray(X, dtype=float)
        return np.mean([t.predict_proba(X) for t in self.trees_], axis=0)

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        votes = np.zeros((len(X), len(self.classes_)))
        for t in self.trees_:
            votes[np.arange(len(X)), t.predict_proba(X).argmax(axis=1)] += 1
        # equal votes: higher mean probability, then class order
        score = votes + 1e-6 * self.predict_proba(X)
        return self.classes_[np.argmax(score, axis=1)]

    @property
    def feature_importances_(self) -> np.ndarray:
        """Mean decrease in Gini impurity, normalised to sum to one.

        All zeros when no tree made a split (e.g. single-class data).
        """
        per_tree = []
        for t in self.trees_:
            s = t.importances.sum()
            per_tree.append(t.importances / s if s > 0 else t.importances)
        imp = np.mean(per_tree, axis=0)
        s = imp.sum()
        return imp / s if s > 0 else imp
