"""Chain-coupled multi-label classification over shared features.

In ``separate`` mode each task has its own classifier, trained one after
another (handshape first). A coupling edge ``source -> target`` appends the
source classifier's predicted class probabilities to the target's input.
When edges form a cycle, each source on the cycle first gets an uncoupled
classifier whose probabilities feed its targets.

In ``joint`` mode a single multi-task network is trained on the summed
per-task losses (see :class:`~signphon.learn.mlp.MultiTaskMlp`).
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from ..labels import TASKS
from .data import kfold_indices
from .forest import ForestModel
from .knn import KnnModel
from .mlp import MlpModel, MultiTaskMlp

# separate mode trains handshape first
SEPARATE_ORDER = ("handshape", "handedness", "orientation", "location")

BASES = {"knn": KnnModel, "forest": ForestModel, "mlp": MlpModel}


def task_seed(seed: int, task: str) -> int:
    """Per-task seed, identical whether or not the task is coupled."""
    key = TASKS.index(task) if task in TASKS else sum(task.encode())
    return int(np.random.SeedSequence([seed, key]).generate_state(1)[0])


def make_base(base: str, params: dict | None, seed: int):
    cls = BASES[base]
    params = dict(params or {})
    if base in ("forest", "mlp"):
        params.setdefault("seed", seed)
    return cls(**params)


def _order(tasks: Sequence[str]) -> list[str]:
    ranked = [t for t in SEPARATE_ORDER if t in tasks]
    return ranked + sorted(t for t in tasks if t not in ranked)


def _reaches(edges: set[tuple[str, str]], start: str, goal: str) -> bool:
    seen, stack = set(), [start]
    while stack:
        u = stack.pop()
        if u == goal:
            return True
        if u in seen:
            continue
        seen.add(u)
        stack.extend(t for s, t in edges if s == u)
    return False


class ChainModel:
    def __init__(
        self,
        base: str = "mlp",
        coupling: Iterable[tuple[str, str]] = (),
        mode: str = "separate",
        base_params: dict | None = None,
        seed: int = 0,
        oof_folds: int = 0,
    ):
        if base not in BASES:
            raise ValueError(f"unknown base classifier {base!r}; expected one of {sorted(BASES)}")
        if mode not in ("separate", "joint"):
            raise ValueError("mode must be 'separate' or 'joint'")
        if mode == "joint" and base != "mlp":
            raise ValueError("joint mode needs the mlp base (summed losses need differentiable heads)")
        self.base = base
        self.coupling = tuple(sorted(set((str(s), str(t)) for s, t in coupling)))
        if any(s == t for s, t in self.coupling):
            raise ValueError("a task cannot be coupled to itself")
        self.mode = mode
        self.base_params = dict(base_params or {})
        self.seed = seed
        self.oof_folds = oof_folds
        self.tasks_: list[str] = []
        self.models_: dict = {}
        self.stage0_: dict = {}
        self.sources_: dict[str, list[tuple[str, bool]]] = {}
        self.joint_: MultiTaskMlp | None = None

    # -- structure -------------------------------------------------------

    def _plan(self, tasks: Sequence[str]) -> None:
        for s, t in self.coupling:
            if s not in tasks or t not in tasks:
                raise ValueError(f"coupling {s}->{t} refers to a task without labels")
        edges = set(self.coupling)
        # an edge on a cycle reads the source's uncoupled (stage-0) classifier
        self.sources_ = {
            t: [(s, _reaches(edges, t, s)) for s, tt in self.coupling if tt == t] for t in tasks
        }
        dag = {(s, t) for t, srcs in self.sources_.items() for s, cyc in srcs if not cyc}
        pending = _order(tasks)
        order = []
        while pending:
            ready = next(t for t in pending if all(s in order for s, tt in dag if tt == t))
            order.append(ready)
            pending.remove(ready)
        self.tasks_ = order

    def input_width(self, task: str, n_features: int | None = None) -> int:
        """Number of inputs the task's classifier sees."""
        if self.joint_ is not None:
            return self.joint_.input_width(task)
        n = self.n_features_ if n_features is None else n_features
        return n + sum(len(self._classes(s)) for s, _ in self.sources_[task])

    def _classes(self, task: str) -> np.ndarray:
        if self.joint_ is not None:
            return self.joint_.classes_[task]
        return self.models_[task].classes_

    # -- training --------------------------------------------------------

    def fit(self, X, labels: dict[str, Sequence[str]]) -> "ChainModel":
        X = np.asarray(X, dtype=float)
        labels = {t: np.asarray(y, dtype=str) for t, y in labels.items()}
        self.n_features_ = X.shape[1]
        self._plan(list(labels))
        if self.mode == "joint":
            params = dict(self.base_params)
            params.setdefault("seed", self.seed)
            self.joint_ = MultiTaskMlp(coupling=self.coupling, **params).fit(X, labels)
            return self

        self.models_, self.stage0_ = {}, {}
        for s in sorted({s for srcs in self.sources_.values() for s, cyc in srcs if cyc}):
            self.stage0_[s] = self._new(s).fit(X, labels[s])
        for t in self.tasks_:
            Xt = np.hstack([X] + [self._train_probs(X, labels, s, cyc) for s, cyc in self.sources_[t]])
            self.models_[t] = self._new(t).fit(Xt, labels[t])
        return self

    def _new(self, task: str):
        return make_base(self.base, self.base_params, task_seed(self.seed, task))

    def _train_probs(self, X, labels, source: str, cyclic: bool) -> np.ndarray:
        if self.oof_folds < 2:
            return self._probs(X, source, cyclic)
        # out-of-fold probabilities keep the target from trusting in-sample fits
        src_model = self.stage0_[source] if cyclic else self.models_[source]
        classes = src_model.classes_
        out = np.zeros((len(X), len(classes)))
        if not cyclic and self.sources_[source]:
            raise ValueError("out-of-fold probabilities are only supported for uncoupled sources")
        for val in kfold_indices(len(X), self.oof_folds, task_seed(self.seed, source)):
            tr = np.setdiff1d(np.arange(len(X)), val)
            m = self._new(source).fit(X[tr], labels[source][tr])
            p = m.predict_proba(X[val])
            cols = np.searchsorted(classes, m.classes_)
            out[np.ix_(val, cols)] = p
        return out

    # -- prediction ------------------------------------------------------

    def _probs(self, X, task: str, stage0: bool = False, cache: dict | None = None) -> np.ndarray:
        if stage0:
            return self.stage0_[task].predict_proba(X)
        cache = {} if cache is None else cache
        if task not in cache:
            Xt = np.hstack([X] + [self._probs(X, s, cyc, cache) for s, cyc in self.sources_[task]])
            cache[task] = self.models_[task].predict_proba(Xt)
        return cache[task]

    def predict_proba(self, X) -> dict[str, np.ndarray]:
        X = np.asarray(X, dtype=float)
        if self.joint_ is not None:
            return self.joint_.predict_proba(X)
        cache: dict = {}
        return {t: self._probs(X, t, cache=cache) for t in self.tasks_}

    def predict(self, X) -> dict[str, np.ndarray]:
        X = np.asarray(X, dtype=float)
        if self.joint_ is not None:
            return self.joint_.predict(X)
        cache: dict = {}
        out = {}
        for t in self.tasks_:
            srcs = [self._probs(X, s, cyc, cache) for s, cyc in self.sources_[t]]
            out[t] = self.models_[t].predict(np.hstack([X] + srcs))
        return out


def chain_train(
    X,
    labels: dict[str, Sequence[str]],
    coupling: Iterable[tuple[str, str]] = (),
    mode: str = "separate",
    base: str = "mlp",
    base_params: dict | None = None,
    seed: int = 0,
    oof_folds: int = 0,
) -> ChainModel:
    return ChainModel(base, coupling, mode, base_params, seed, oof_folds).fit(X, labels)


def parse_edge(text: str) -> tuple[str, str]:
    """``"location->orientation"`` -> ``("location", "orientation")``."""
    for sep in ("->", "→", ">"):
        if sep in text:
            s, t = (p.strip() for p in text.split(sep, 1))
            if s and t:
                return s, t
    raise ValueError(f"coupling edge {text!r} is not of the form source->target")
