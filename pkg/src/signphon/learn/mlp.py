"""Feed-forward ReLU networks trained with Adam on softmax cross-entropy.

One network class serves both the single-task classifier and the joint
multi-task model: a shared ReLU trunk feeds one linear softmax head per
task. A coupling edge ``source -> target`` adds the source head's class
probabilities, through a learned matrix, to the target head's logits; that
is the same as appending the source probabilities to the target head's
input. Sources always contribute their uncoupled head, so coupling in both
directions is well defined in one forward pass.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

logger = logging.getLogger(__name__)


class TrainingDivergedError(RuntimeError):
    pass


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def he_uniform(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / fan_in)
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


@dataclass
class NetParams:
    trunk: list[tuple[np.ndarray, np.ndarray]]
    heads: dict[str, tuple[np.ndarray, np.ndarray]]
    coupling: dict[tuple[str, str], np.ndarray] = field(default_factory=dict)

    def arrays(self) -> list[np.ndarray]:
        """Flat list of parameter arrays in a fixed order (shared with grads)."""
        out = [a for layer in self.trunk for a in layer]
        for t in sorted(self.heads):
            out.extend(self.heads[t])
        for e in sorted(self.coupling):
            out.append(self.coupling[e])
        return out

    def copy(self) -> "NetParams":
        return NetParams(
            [(W.copy(), b.copy()) for W, b in self.trunk],
            {t: (W.copy(), b.copy()) for t, (W, b) in self.heads.items()},
            {e: U.copy() for e, U in self.coupling.items()},
        )


def init_params(
    n_in: int,
    hidden: Sequence[int],
    n_classes: dict[str, int],
    edges: Iterable[tuple[str, str]],
    rng: np.random.Generator,
    coupling_rng: np.random.Generator | None = None,
) -> NetParams:
    # coupling matrices come from their own stream, so adding an edge leaves
    # the trunk and head initialisation (and the batch order) unchanged
    coupling_rng = rng if coupling_rng is None else coupling_rng
    trunk = []
    width = n_in
    for h in hidden:
        trunk.append((he_uniform(rng, width, h), np.zeros(h)))
        width = h
    heads = {t: (he_uniform(rng, width, c), np.zeros(c)) for t, c in sorted(n_classes.items())}
    coupling = {
        (s, t): he_uniform(coupling_rng, n_classes[s], n_classes[t]) for s, t in sorted(set(edges))
    }
    return NetParams(trunk, heads, coupling)


def forward(params: NetParams, X: np.ndarray):
    """Return (activations, base probabilities, final probabilities)."""
    acts = [X]
    h = X
    for W, b in params.trunk:
        h = np.maximum(h @ W + b, 0.0)
        acts.append(h)
    base = {t: h @ W + b for t, (W, b) in params.heads.items()}
    base_p = {t: softmax(z) for t, z in base.items()}
    final = dict(base)
    for (s, t), U in params.coupling.items():
        final[t] = final[t] + base_p[s] @ U
    final_p = {t: softmax(z) for t, z in final.items()}
    return acts, base_p, final_p


def loss_and_grads(params: NetParams, X: np.ndarray, Y: dict[str, np.ndarray]):
    """Summed mean cross-entropy over tasks and its gradient.

    ``Y`` maps task -> one-hot targets. Gradients mirror ``params.arrays()``.
    """
    n = len(X)
    acts, base_p, final_p = forward(params, X)
    loss = 0.0
    g_final = {}
    for t, P in final_p.items():
        loss -= float(np.sum(Y[t] * np.log(np.clip(P, 1e-300, None)))) / n
        g_final[t] = (P - Y[t]) / n

    g_base = dict(g_final)
    g_coupling = {}
    g_prob = {}
    for (s, t), U in params.coupling.items():
        g_coupling[(s, t)] = base_p[s].T @ g_final[t]
        g_prob[s] = g_prob.get(s, 0.0) + g_final[t] @ U.T
    for s, gp in g_prob.items():
        p = base_p[s]
        g_base[s] = g_base[s] + p * (gp - (gp * p).sum(axis=1, keepdims=True))

    h = acts[-1]
    g_heads = {}
    g_h = np.zeros_like(h)
    for t, (W, _) in params.heads.items():
        g_heads[t] = (h.T @ g_base[t], g_base[t].sum(axis=0))
        g_h += g_base[t] @ W.T

    g_trunk = []
    for i in range(len(params.trunk) - 1, -1, -1):
        W, _ = params.trunk[i]
        g_pre = g_h * (acts[i + 1] > 0)
        g_trunk.append((acts[i].T @ g_pre, g_pre.sum(axis=0)))
        g_h = g_pre @ W.T
    g_trunk.reverse()

    grads = NetParams(g_trunk, g_heads, g_coupling)
    return loss, grads.arrays()


class Adam:
    def __init__(self, arrays: list[np.ndarray], lr=0.01, beta1=0.9, beta2=0.999, eps=1e-8):
        self.arrays = arrays
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(a) for a in arrays]
        self.v = [np.zeros_like(a) for a in arrays]
        self.t = 0

    def step(self, grads: list[np.ndarray]) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1, c2 = 1 - b1**self.t, 1 - b2**self.t
        for a, g, m, v in zip(self.arrays, grads, self.m, self.v):
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            a -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


@dataclass
class History:
    train_loss: list[float] = field(default_factory=list)
    val_accuracy: dict[str, list[float]] = field(default_factory=dict)


class MultiTaskMlp:
    """Shared-trunk network with one softmax head per task (joint training)."""

    kind = "mlp"

    def __init__(
        self,
        hidden: Sequence[int] = (100,),
        coupling: Iterable[tuple[str, str]] = (),
        lr: float = 0.01,
        beta1: float = 0.9,
        beta2: float = 0.999,
        epochs: int = 200,
        batch_size: int = 32,
        validation_fraction: float = 0.1,
        standardize: bool = True,
        seed: int = 0,
    ):
        hidden = tuple(int(h) for h in hidden)
        if not 1 <= len(hidden) <= 3 or min(hidden) < 1:
            raise ValueError("between one and three hidden layers of positive width")
        if not 0 <= validation_fraction < 1:
            raise ValueError("validation_fraction must lie in [0, 1)")
        self.hidden = hidden
        self.coupling = tuple(sorted(set((str(s), str(t)) for s, t in coupling)))
        self.lr, self.beta1, self.beta2 = lr, beta1, beta2
        self.epochs = epochs
        self.batch_size = batch_size
        self.validation_fraction = validation_fraction
        self.standardize = standardize
        self.seed = seed
        self.params_: NetParams | None = None
        self.classes_: dict[str, np.ndarray] = {}
        self.mean_: np.ndarray | None = None
        self.scale_: np.ndarray | None = None
        self.history_ = History()

    def get_params(self) -> dict:
        return {
            "hidden": list(self.hidden),
            "coupling": [list(e) for e in self.coupling],
            "lr": self.lr, "beta1": self.beta1, "beta2": self.beta2,
            "epochs": self.epochs, "batch_size": self.batch_size,
            "validation_fraction": self.validation_fraction,
            "standardize": self.standardize, "seed": self.seed,
        }

    def _prep(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if self.standardize:
            return (X - self.mean_) / self.scale_
        return X

    def fit(self, X, labels: dict[str, Sequence[str]]) -> "MultiTaskMlp":
        X = np.asarray(X, dtype=float)
        rng = np.random.default_rng(self.seed)
        tasks = sorted(labels)
        for s, t in self.coupling:
            if s not in labels or t not in labels:
                raise ValueError(f"coupling {s}->{t} refers to a task without labels")
        enc = {}
        for t in tasks:
            self.classes_[t], enc[t] = np.unique(np.asarray(labels[t], dtype=str), return_inverse=True)
            if len(self.classes_[t]) < 2:
                raise ValueError(f"task {t!r} needs at least two classes")

        perm = rng.permutation(len(X))
        n_val = int(round(self.validation_fraction * len(X)))
        val, tr = perm[:n_val], perm[n_val:]
        if self.standardize:
            self.mean_ = X[tr].mean(axis=0)
            sd = X[tr].std(axis=0)
            self.scale_ = np.where(sd > 0, sd, 1.0)
        Z = self._prep(X)
        Y = {t: np.eye(len(self.classes_[t]))[enc[t]] for t in tasks}

        self.params_ = init_params(
            X.shape[1], self.hidden, {t: len(self.classes_[t]) for t in tasks}, self.coupling, rng,
            np.random.default_rng([self.seed, 1]),
        )
        opt = Adam(self.params_.arrays(), self.lr, self.beta1, self.beta2)
        self.history_ = History(val_accuracy={t: [] for t in tasks})
        for epoch in range(self.epochs):
            order = tr[rng.permutation(len(tr))]
            total = 0.0
            for s in range(0, len(order), self.batch_size):
                b = order[s : s + self.batch_size]
                loss, grads = loss_and_grads(self.params_, Z[b], {t: Y[t][b] for t in tasks})
                if not np.isfinite(loss):
                    wmax = max(float(np.abs(a).max()) for a in self.params_.arrays())
                    raise TrainingDivergedError(
                        f"loss became {loss} at epoch {epoch}, batch {s // self.batch_size}; "
                        f"max |weight| = {wmax:.3g}, lr = {self.lr}"
                    )
                opt.step(grads)
                total += loss * len(b)
            self.history_.train_loss.append(total / max(len(tr), 1))
            if n_val:
                _, _, P = forward(self.params_, Z[val])
                for t in tasks:
                    self.history_.val_accuracy[t].append(float(np.mean(P[t].argmax(axis=1) == enc[t][val])))
        return self

    def predict_proba(self, X) -> dict[str, np.ndarray]:
        _, _, P = forward(self.params_, self._prep(X))
        return P

    def predict(self, X) -> dict[str, np.ndarray]:
        return {t: self.classes_[t][P.argmax(axis=1)] for t, P in self.predict_proba(X).items()}

    def input_width(self, task: str) -> int:
        """Width of ``task``'s head input: hidden units plus coupled source classes."""
        extra = sum(len(self.classes_[s]) for s, t in self.coupling if t == task)
        return self.hidden[-1] + extra


class MlpModel:
    """Single-task classifier: Input - hidden ReLU layers - softmax output."""

    kind = "mlp"
    _TASK = "y"

    def __init__(self, hidden: Sequence[int] = (100,), **kwargs):
        self.net = MultiTaskMlp(hidden=hidden, **kwargs)

    def get_params(self) -> dict:
        p = self.net.get_params()
        p.pop("coupling")
        return p

    @property
    def classes_(self) -> np.ndarray:
        return self.net.classes_[self._TASK]

    @property
    def history_(self) -> History:
        return self.net.history_

    def fit(self, X, y) -> "MlpModel":
        self.net.fit(X, {self._TASK: y})
        return self

    def predict_proba(self, X) -> np.ndarray:
        return self.net.predict_proba(X)[self._TASK]

    def predict(self, X) -> np.ndarray:
        return self.net.predict(X)[self._TASK]
