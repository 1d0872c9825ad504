"""JSON model container.

``{"format": "signphon-model", "format_version": 1, "meta": {...}, "model": {...}}``.
Floats are written with ``repr`` precision, so a loaded model predicts
bit-identically to the saved one.
"""

from __future__ import annotations

import json

import numpy as np

from .chain import ChainModel
from .forest import ForestModel, _Tree
from .knn import KnnModel
from .mlp import MlpModel, MultiTaskMlp, NetParams

FORMAT = "signphon-model"
FORMAT_VERSION = 1


class ModelFormatError(ValueError):
    pass


def _arr(a) -> list:
    return np.asarray(a).tolist()


def _net_to_dict(net: MultiTaskMlp) -> dict:
    p = net.params_
    return {
        "params": net.get_params(),
        "classes": {t: _arr(c) for t, c in net.classes_.items()},
        "mean": None if net.mean_ is None else _arr(net.mean_),
        "scale": None if net.scale_ is None else _arr(net.scale_),
        "trunk": [[_arr(W), _arr(b)] for W, b in p.trunk],
        "heads": {t: [_arr(W), _arr(b)] for t, (W, b) in p.heads.items()},
        "coupling": [[s, t, _arr(U)] for (s, t), U in p.coupling.items()],
        "train_loss": net.history_.train_loss,
        "val_accuracy": net.history_.val_accuracy,
    }


def _net_from_dict(d: dict) -> MultiTaskMlp:
    net = MultiTaskMlp(**d["params"])
    net.classes_ = {t: np.array(c, dtype=str) for t, c in d["classes"].items()}
    net.mean_ = None if d["mean"] is None else np.array(d["mean"], dtype=float)
    net.scale_ = None if d["scale"] is None else np.array(d["scale"], dtype=float)
    net.params_ = NetParams(
        [(np.array(W, dtype=float), np.array(b, dtype=float)) for W, b in d["trunk"]],
        {t: (np.array(W, dtype=float), np.array(b, dtype=float)) for t, (W, b) in d["heads"].items()},
        {(s, t): np.array(U, dtype=float) for s, t, U in d["coupling"]},
    )
    net.history_.train_loss = list(d.get("train_loss", []))
    net.history_.val_accuracy = dict(d.get("val_accuracy", {}))
    return net


def model_to_dict(model) -> dict:
    if isinstance(model, KnnModel):
        return {"type": "knn", "k": model.k, "X": _arr(model.X_), "y": _arr(model.y_),
                "classes": _arr(model.classes_)}
    if isinstance(model, ForestModel):
        return {
            "type": "forest",
            "params": model.get_params(),
            "classes": _arr(model.classes_),
            "n_features": model.n_features_,
            "trees": [
                {"feature": _arr(t.feature), "threshold": _arr(t.threshold), "left": _arr(t.left),
                 "right": _arr(t.right), "value": _arr(t.value), "importances": _arr(t.importances)}
                for t in model.trees_
            ],
        }
    if isinstance(model, MlpModel):
        return {"type": "mlp", "net": _net_to_dict(model.net)}
    if isinstance(model, MultiTaskMlp):
        return {"type": "multitask_mlp", "net": _net_to_dict(model)}
    if isinstance(model, ChainModel):
        return {
            "type": "chain",
            "base": model.base,
            "coupling": [list(e) for e in model.coupling],
            "mode": model.mode,
            "base_params": model.base_params,
            "seed": model.seed,
            "oof_folds": model.oof_folds,
            "n_features": model.n_features_,
            "tasks": model.tasks_,
            "sources": {t: [[s, c] for s, c in srcs] for t, srcs in model.sources_.items()},
            "models": {t: model_to_dict(m) for t, m in model.models_.items()},
            "stage0": {t: model_to_dict(m) for t, m in model.stage0_.items()},
            "joint": None if model.joint_ is None else _net_to_dict(model.joint_),
        }
    raise TypeError(f"cannot serialise {type(model).__name__}")


def model_from_dict(d: dict):
    kind = d.get("type")
    if kind == "knn":
        m = KnnModel(d["k"])
        m.X_ = np.array(d["X"], dtype=float)
        m.y_ = np.array(d["y"], dtype=np.int64)
        m.classes_ = np.array(d["classes"], dtype=str)
        return m
    if kind == "forest":
        m = ForestModel(**d["params"])
        m.classes_ = np.array(d["classes"], dtype=str)
        m.n_features_ = d["n_features"]
        nc = len(m.classes_)
        m.trees_ = [
            _Tree(
                np.array(t["feature"], dtype=np.int64), np.array(t["threshold"], dtype=float),
                np.array(t["left"], dtype=np.int64), np.array(t["right"], dtype=np.int64),
                np.array(t["value"], dtype=float).reshape(-1, nc), np.array(t["importances"], dtype=float),
            )
            for t in d["trees"]
        ]
        return m
    if kind == "mlp":
        m = MlpModel.__new__(MlpModel)
        m.net = _net_from_dict(d["net"])
        return m
    if kind == "multitask_mlp":
        return _net_from_dict(d["net"])
    if kind == "chain":
        m = ChainModel(d["base"], [tuple(e) for e in d["coupling"]], d["mode"], d["base_params"],
                       d["seed"], d.get("oof_folds", 0))
        m.n_features_ = d["n_features"]
        m.tasks_ = list(d["tasks"])
        m.sources_ = {t: [(s, bool(c)) for s, c in srcs] for t, srcs in d["sources"].items()}
        m.models_ = {t: model_from_dict(x) for t, x in d["models"].items()}
        m.stage0_ = {t: model_from_dict(x) for t, x in d["stage0"].items()}
        m.joint_ = None if d["joint"] is None else _net_from_dict(d["joint"])
        return m
    raise ModelFormatError(f"unknown model type {kind!r}")


def dumps_model(model, meta: dict | None = None) -> str:
    doc = {"format": FORMAT, "format_version": FORMAT_VERSION, "meta": meta or {}, "model": model_to_dict(model)}
    return json.dumps(doc, sort_keys=True)


def loads_model(text: str):
    """Return (model, meta)."""
    doc = json.loads(text)
    if doc.get("format") != FORMAT:
        raise ModelFormatError("not a signphon model file")
    if doc.get("format_version") != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported model format version {doc.get('format_version')}")
    return model_from_dict(doc["model"]), doc.get("meta", {})
