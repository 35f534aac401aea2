"""Trained classifier wrapper, standardization, importance ranking, persistence."""

from __future__ import annotations

import enum
import json
import os
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from ..errors import DimensionMismatch, EmptyMatrix, KOutOfRange, UnsupportedModelVersion
from ..series import StateLabel
from .estimators import (
    Boosting,
    Forest,
    GbParams,
    RfParams,
    SvmModel,
    SvmParams,
    fit_boosting,
    fit_forest,
    fit_svm_model,
)
from .tree import Tree

MODEL_FORMAT = "accelstate-model"
MODEL_VERSION = 1
_STD_EPS = 1e-12


class ClassifierKind(str, enum.Enum):
    RF = "rf"
    GB = "gb"
    SVM = "svm"

    @property
    def default_threshold(self) -> float:
        # probability models cut at 0.5, SVM margins at 0
        return 0.0 if self is ClassifierKind.SVM else 0.5


Params = Union[RfParams, GbParams, SvmParams]


@dataclass
class StandardizationStats:
    mean: np.ndarray
    std: np.ndarray

    def apply(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        live = self.std > _STD_EPS
        out = np.zeros_like(X)
        out[:, live] = (X[:, live] - self.mean[live]) / self.std[live]
        return out

    def invert(self, Z: np.ndarray) -> np.ndarray:
        Z = np.asarray(Z, dtype=np.float64)
        live = self.std > _STD_EPS
        out = np.broadcast_to(self.mean, Z.shape).copy()
        out[:, live] = Z[:, live] * self.std[live] + self.mean[live]
        return out


def standardize_fit(X: np.ndarray) -> StandardizationStats:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise EmptyMatrix("cannot standardize an empty matrix")
    return StandardizationStats(X.mean(axis=0), X.std(axis=0))


def standardize_apply(stats: StandardizationStats, X: np.ndarray) -> np.ndarray:
    return stats.apply(X)


@dataclass
class TrainedClassifier:
    kind: ClassifierKind
    params: Params
    estimator: Forest | Boosting | SvmModel
    feature_indices: np.ndarray
    feature_names: tuple[str, ...]
    threshold: float
    seed: int
    scaler: StandardizationStats | None = None
    window_size_s: int | None = None
    extra: dict = field(default_factory=dict)

    @property
    def n_features(self) -> int:
        return len(self.feature_indices)

    def with_features(self, indices: Sequence[int], names: Sequence[str]) -> TrainedClassifier:
        self.feature_indices = np.asarray(indices, dtype=np.int64)
        self.feature_names = tuple(names)
        return self

    def select(self, X_full: np.ndarray) -> np.ndarray:
        """Pick this model's columns out of a full feature matrix."""
        return np.asarray(X_full, dtype=np.float64)[:, self.feature_indices]


def _default_names(n: int) -> tuple[str, ...]:
    return tuple(f"f{i}" for i in range(n))


def fit_random_forest(X, y, p: RfParams, seed: int) -> TrainedClassifier:
    X = np.asarray(X, dtype=np.float64)
    forest = fit_forest(X, y, p, seed)
    return TrainedClassifier(ClassifierKind.RF, p, forest, np.arange(X.shape[1]), _default_names(X.shape[1]), 0.5, int(seed))


def fit_gradient_boosting(X, y, p: GbParams, seed: int) -> TrainedClassifier:
    X = np.asarray(X, dtype=np.float64)
    gb = fit_boosting(X, y, p, seed)
    return TrainedClassifier(ClassifierKind.GB, p, gb, np.arange(X.shape[1]), _default_names(X.shape[1]), 0.5, int(seed))


def fit_svm(X_standardized, y, p: SvmParams, seed: int, scaler: StandardizationStats | None = None) -> TrainedClassifier:
    """SVM on already-standardized rows; ``scaler`` is stored for prediction."""
    X = np.asarray(X_standardized, dtype=np.float64)
    model, _ = fit_svm_model(X, y, p)
    return TrainedClassifier(ClassifierKind.SVM, p, model, np.arange(X.shape[1]), _default_names(X.shape[1]), 0.0, int(seed), scaler)


def fit_classifier(kind: ClassifierKind, X, y, params: Params, seed: int) -> TrainedClassifier:
    """Fit any kind on raw features; SVM standardization is handled here."""
    kind = ClassifierKind(kind)
    if kind is ClassifierKind.RF:
        return fit_random_forest(X, y, params, seed)
    if kind is ClassifierKind.GB:
        return fit_gradient_boosting(X, y, params, seed)
    stats = standardize_fit(X)
    return fit_svm(stats.apply(X), y, params, seed, stats)


def gini_importance(rf: TrainedClassifier) -> np.ndarray:
    if rf.kind is not ClassifierKind.RF:
        raise TypeError("gini_importance needs a random forest")
    return rf.estimator.feature_importances(rf.n_features)


def select_top_k(scores: Sequence[float], k: int) -> np.ndarray:
    """Indices of the k highest scores; equal scores keep the lower index."""
    scores = np.asarray(scores, dtype=np.float64)
    if not 1 <= k <= len(scores):
        raise KOutOfRange(f"k={k} outside 1..{len(scores)}")
    order = np.lexsort((np.arange(len(scores)), -scores))
    return order[:k]


def predict_scores(model: TrainedClassifier, X: np.ndarray) -> np.ndarray:
    """Scores for rows holding exactly the model's selected features.

    RF/GB return probabilities of Inactive; SVM returns raw margins, after
    applying the stored standardization.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise DimensionMismatch(f"expected {model.n_features} columns, got {X.shape[1] if X.ndim == 2 else X.shape}")
    if model.kind is ClassifierKind.SVM:
        Z = model.scaler.apply(X) if model.scaler is not None else X
        return model.estimator.decision_function(Z)
    return model.estimator.predict_proba(X)


def classify_with_threshold(scores: Sequence[float], threshold: float) -> np.ndarray:
    """StateLabel per score; ``score >= threshold`` means Inactive."""
    positive = np.asarray(scores, dtype=np.float64) >= threshold
    out = np.empty(len(positive), dtype=object)
    out[positive] = StateLabel.INACTIVE
    out[~positive] = StateLabel.ACTIVE
    return out


# --- persistence ---------------------------------------------------------------


def _params_from(kind: ClassifierKind, d: dict) -> Params:
    if kind is ClassifierKind.RF:
        return RfParams(**d)
    if kind is ClassifierKind.GB:
        return GbParams(**d)
    return SvmParams(**d)


def model_to_dict(model: TrainedClassifier) -> dict:
    est = model.estimator
    if model.kind is ClassifierKind.RF:
        structure = {"trees": [t.to_record() for t in est.trees]}
    elif model.kind is ClassifierKind.GB:
        structure = {"init_raw": est.init_raw, "learning_rate": est.learning_rate, "trees": [t.to_record() for t in est.trees]}
    else:
        structure = {
            "kernel": est.kernel,
            "C": est.C,
            "gamma": est.gamma,
            "support_rows": est.support.tolist(),
            "duals": est.alpha.tolist(),
            "labels": est.sv_sign.tolist(),
            "bias": est.bias,
        }
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "kind": model.kind.value,
        "hyperparameters": model.params.to_dict(),
        "feature_indices": [int(i) for i in model.feature_indices],
        "feature_names": list(model.feature_names),
        "standardization": None
        if model.scaler is None
        else {"mean": model.scaler.mean.tolist(), "std": model.scaler.std.tolist()},
        "threshold": float(model.threshold),
        "seed": int(model.seed),
        "window_size_s": model.window_size_s,
        "extra": model.extra,
        "structure": structure,
    }


def model_from_dict(doc: dict) -> TrainedClassifier:
    if doc.get("format") != MODEL_FORMAT or doc.get("version") != MODEL_VERSION:
        raise UnsupportedModelVersion(f"unsupported model document {doc.get('format')!r} v{doc.get('version')!r}")
    kind = ClassifierKind(doc["kind"])
    params = _params_from(kind, doc["hyperparameters"])
    s = doc["structure"]
    if kind is ClassifierKind.RF:
        est = Forest([Tree.from_record(r) for r in s["trees"]])
    elif kind is ClassifierKind.GB:
        est = Boosting(s["init_raw"], s["learning_rate"], [Tree.from_record(r) for r in s["trees"]])
    else:
        support = np.array(s["support_rows"], dtype=np.float64).reshape(len(s["duals"]), -1)
        est = SvmModel(s["kernel"], s["C"], s["gamma"], support, np.array(s["duals"]), np.array(s["labels"]), s["bias"])
    std = doc.get("standardization")
    scaler = None if std is None else StandardizationStats(np.array(std["mean"]), np.array(std["std"]))
    return TrainedClassifier(
        kind,
        params,
        est,
        np.array(doc["feature_indices"], dtype=np.int64),
        tuple(doc["feature_names"]),
        float(doc["threshold"]),
        int(doc["seed"]),
        scaler,
        doc.get("window_size_s"),
        doc.get("extra", {}),
    )


def save_model(model: TrainedClassifier, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, sort_keys=True)
        fh.write("\n")


def load_model(path: str | os.PathLike) -> TrainedClassifier:
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
