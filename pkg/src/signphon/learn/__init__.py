"""Trainable classifiers, evaluation helpers and the coupled multi-label chain."""

from .chain import ChainModel, chain_train, parse_edge
from .data import LabeledDataset, SplitSpec, accuracy, kfold, kfold_indices, split, split_indices, split_sizes
from .forest import ForestModel
from .knn import KnnModel
from .metrics import ConfusionReport, confusion_matrix
from .mlp import MlpModel, MultiTaskMlp, TrainingDivergedError
from .persist import dumps_model, loads_model

__all__ = [
    "ChainModel",
    "ConfusionReport",
    "ForestModel",
    "KnnModel",
    "LabeledDataset",
    "MlpModel",
    "MultiTaskMlp",
    "SplitSpec",
    "TrainingDivergedError",
    "accuracy",
    "chain_train",
    "confusion_matrix",
    "dumps_model",
    "kfold",
    "kfold_indices",
    "loads_model",
    "parse_edge",
    "split",
    "split_indices",
    "split_sizes",
]
