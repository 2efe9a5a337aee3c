"""Trained speech/no-speech models, their training entry point and JSON persistence."""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Mapping

import numpy as np

from ..errors import (
    CorruptModel,
    DatasetTooSmall,
    LayoutMismatch,
    NonFiniteFeature,
    SingleClassDataset,
    UnsupportedVersion,
)
from ..features import FeatureMatrix, FeatureVector
from . import forest, knn, svm

SCHEMA_VERSION = "1"

NO_SPEECH = 0
SPEECH = 1


class ModelKind(str, enum.Enum):
    RF = "rf"
    SVM = "svm"
    KNN = "knn"


DEFAULT_HYPERPARAMS = {
    ModelKind.RF: {"n_trees": 100, "max_features": None, "min_leaf": 1, "max_depth": None},
    ModelKind.SVM: {"C": 1.0, "gamma": None, "tol": 1e-3, "max_iter": None, "normalize": True},
    ModelKind.KNN: {"k": 5, "normalize": True},
}


@dataclass(frozen=True)
class LabeledDataset:
    """Feature rows with 0/1 labels; ``groups`` optionally names each row's subject."""

    matrix: FeatureMatrix
    labels: np.ndarray
    groups: tuple[str, ...] | None = None

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=int).reshape(-1)
        if labels.size != len(self.matrix):
            raise DatasetTooSmall(f"{labels.size} labels for {len(self.matrix)} rows")
        if np.any((labels != NO_SPEECH) & (labels != SPEECH)):
            raise ValueError("labels must be 0 (NoSpeech) or 1 (Speech)")
        object.__setattr__(self, "labels", labels)
        if self.groups is not None and len(self.groups) != labels.size:
            raise DatasetTooSmall("groups length differs from row count")

    def __len__(self) -> int:
        return self.labels.size

    def take(self, rows) -> "LabeledDataset":
        rows = np.asarray(rows, dtype=int)
        groups = None if self.groups is None else tuple(self.groups[i] for i in rows)
        return LabeledDataset(self.matrix.take(rows), self.labels[rows], groups)


@dataclass(frozen=True)
class TrainedModel:
    kind: ModelKind
    hyperparams: dict[str, Any]
    seed: int
    feature_layout: tuple[str, ...]
    normalization: dict[str, list[float]] | None
    parameters: dict[str, Any] = field(repr=False)

    # ------------------------------------------------------------ prediction
    def _check_layout(self, layout) -> None:
        if tuple(layout) != self.feature_layout:
            raise LayoutMismatch(
                f"model expects {len(self.feature_layout)} columns "
                f"({self.feature_layout[:2]}...), got {len(layout)}"
            )

    def _normalize(self, X: np.ndarray) -> np.ndarray:
        if self.normalization is None:
            return X
        mean = np.asarray(self.normalization["mean"])
        std = np.asarray(self.normalization["std"])
        return (X - mean) / std

    def predict_rows(self, X: np.ndarray) -> np.ndarray:
        """Predict raw rows already known to follow ``feature_layout``."""
        X = np.asarray(X, dtype=float).reshape(-1, len(self.feature_layout))
        Z = self._normalize(X)
        p = self.parameters
        if self.kind is ModelKind.RF:
            return forest.predict_forest(self.trees, Z)
        if self.kind is ModelKind.SVM:
            return self._svm().predict(Z)
        return knn.predict_knn(np.asarray(p["train_X"]).reshape(-1, Z.shape[1]),
                               np.asarray(p["train_y"], dtype=int), Z, int(p["k"]))

    def votes(self, X: np.ndarray) -> np.ndarray:
        """Per-row count of trees voting Speech (RF only)."""
        if self.kind is not ModelKind.RF:
            raise TypeError("votes are defined for random forests only")
        return forest.forest_votes(self.trees, np.asarray(X, dtype=float))

    @cached_property
    def trees(self) -> list[forest.Tree]:
        return [forest.Tree.from_dict(t) for t in self.parameters["trees"]]

    def _svm(self) -> svm.SvmSolution:
        p = self.parameters
        d = len(self.feature_layout)
        return svm.SvmSolution(
            support_vectors=np.asarray(p["support_vectors"], dtype=float).reshape(-1, d),
            dual_coef=np.asarray(p["dual_coef"], dtype=float),
            bias=float(p["bias"]),
            gamma=float(p["gamma"]),
            n_iter=int(p.get("n_iter", 0)),
        )

    # ------------------------------------------------------------ persistence
    def to_document(self) -> dict[str, Any]:
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": self.kind.value,
            "hyperparams": self.hyperparams,
            "seed": self.seed,
            "feature_layout": list(self.feature_layout),
            "normalization": self.normalization,
            "parameters": self.parameters,
        }


def predict(model: TrainedModel, x: FeatureVector | FeatureMatrix):
    """Label one feature vector (returns ``int``) or every row of a matrix (returns array)."""
    if isinstance(x, FeatureVector):
        model._check_layout(x.layout)
        return int(model.predict_rows(x.values[None, :])[0])
    model._check_layout(x.columns)
    return model.predict_rows(x.values)


def resolve_hyperparams(kind: ModelKind, hyperparams: Mapping[str, Any] | None) -> dict[str, Any]:
    defaults = DEFAULT_HYPERPARAMS[kind]
    hyperparams = dict(hyperparams or {})
    unknown = set(hyperparams) - set(defaults)
    if unknown:
        raise ValueError(f"unknown {kind.value} hyperparameters: {sorted(unknown)}")
    return {**defaults, **hyperparams}


def _validate(data: LabeledDataset) -> None:
    X = data.matrix.values
    if not np.all(np.isfinite(X)):
        rows, cols = np.nonzero(~np.isfinite(X))
        raise NonFiniteFeature(f"non-finite value at row {rows[0]}, column {data.matrix.columns[cols[0]]}")
    n_speech = int(data.labels.sum())
    n_silent = len(data) - n_speech
    if n_speech == 0 or n_silent == 0:
        raise SingleClassDataset(f"training needs both classes (Speech={n_speech}, NoSpeech={n_silent})")
    if min(n_speech, n_silent) < 2:
        raise DatasetTooSmall("training needs at least 2 rows per class")


def train(data: LabeledDataset, kind: ModelKind | str, hyperparams: Mapping[str, Any] | None = None,
          seed: int = 0) -> TrainedModel:
    kind = ModelKind(kind)
    hp = resolve_hyperparams(kind, hyperparams)
    _validate(data)
    X = data.matrix.values.astype(float)
    y = data.labels
    d = X.shape[1]

    normalization = None
    if kind is not ModelKind.RF and hp["normalize"]:
        mean = X.mean(axis=0)
        std = X.std(axis=0)
        std = np.where(std > 0, std, 1.0)
        normalization = {"mean": mean.tolist(), "std": std.tolist()}
        X = (X - mean) / std

    if kind is ModelKind.RF:
        if hp["max_features"] is None:
            hp["max_features"] = forest.default_max_features(d)
        trees = forest.fit_forest(X, y, int(hp["n_trees"]), int(hp["max_features"]), seed,
                                  int(hp["min_leaf"]), hp["max_depth"])
        parameters = {"trees": [t.to_dict() for t in trees]}
    elif kind is ModelKind.SVM:
        sol = svm.fit_svm(X, y, C=float(hp["C"]), gamma=hp["gamma"], tol=float(hp["tol"]),
                          max_iter=hp["max_iter"])
        parameters = {
            "support_vectors": sol.support_vectors.tolist(),
            "dual_coef": sol.dual_coef.tolist(),
            "bias": sol.bias,
            "gamma": sol.gamma,
            "n_iter": sol.n_iter,
        }
    else:
        parameters = {"train_X": X.tolist(), "train_y": y.tolist(), "k": int(hp["k"])}

    return TrainedModel(kind, hp, int(seed), tuple(data.matrix.columns), normalization, parameters)


def save_model(model: TrainedModel) -> bytes:
    """Canonical JSON: sorted keys, fixed indentation, trailing newline."""
    text = json.dumps(model.to_document(), sort_keys=True, indent=1, allow_nan=False)
    return (text + "\n").encode("utf-8")


def load_model(blob: bytes | str) -> TrainedModel:
    try:
        doc = json.loads(blob)
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptModel(f"model is not valid JSON: {exc}") from None
    if not isinstance(doc, dict) or "schema_version" not in doc:
        raise CorruptModel("model document lacks schema_version")
    if str(doc["schema_version"]) != SCHEMA_VERSION:
        raise UnsupportedVersion(f"schema_version {doc['schema_version']!r} is not supported")
    try:
        kind = ModelKind(doc["kind"])
        layout = tuple(str(c) for c in doc["feature_layout"])
        norm = doc["normalization"]
        if norm is not None:
            norm = {"mean": [float(v) for v in norm["mean"]], "std": [float(v) for v in norm["std"]]}
            if not len(norm["mean"]) == len(norm["std"]) == len(layout):
                raise ValueError("normalization length differs from layout")
        params = dict(doc["parameters"])
        model = TrainedModel(kind, dict(doc["hyperparams"]), int(doc["seed"]), layout, norm, params)
        # materialize once so structural damage surfaces here, not at predict time
        if kind is ModelKind.RF:
            if not params["trees"]:
                raise ValueError("forest has no trees")
            model.trees
        elif kind is ModelKind.SVM:
            model._svm()
        else:
            if len(params["train_X"]) != len(params["train_y"]):
                raise ValueError("kNN training rows and labels differ in length")
            np.asarray(params["train_X"], dtype=float).reshape(-1, len(layout))
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise CorruptModel(f"malformed model document: {exc}") from None
    return model
