"""Nested cross-validation, ROC / G-mean thresholds, metrics and reports."""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, NamedTuple, Sequence

import numpy as np

from .errors import InsufficientRows, LengthMismatch, SingleClassLabels
from .features import FEATURE_NAMES, LabeledDataset
from .learn.estimators import GbParams, RfParams, SvmParams
from .learn.model import (
    ClassifierKind,
    TrainedClassifier,
    fit_classifier,
    gini_importance,
    predict_scores,
    select_top_k,
)
from .learn.tree import derive_seed
from .series import StateLabel

IMPORTANCE_RF = RfParams(n_estimators=500, max_depth=None, min_samples_split=2, min_samples_leaf=1)
INNER_FOLDS = 3
PAPER_K = (5, 10, 15, 20, 25)
METRICS = ("precision", "recall", "f1", "accuracy")
CELLS = ("tp", "fp", "tn", "fn")

# seed stream tags
_SEED_IMPORTANCE = 1
_SEED_INNER_SPLIT = 2
_SEED_INNER_FIT = 3
_SEED_REFIT = 4


# --- metrics ----------------------------------------------------------------------


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts with Inactive as the positive class."""

    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def to_dict(self) -> dict:
        return asdict(self)


class Metrics(NamedTuple):
    confusion: ConfusionMatrix
    precision: float
    recall: float
    f1: float
    accuracy: float


def _positive_mask(labels: Sequence) -> np.ndarray:
    arr = np.asarray(labels)
    if arr.dtype == object:
        return np.array([v is StateLabel.INACTIVE or v == StateLabel.INACTIVE.value or v == 1 for v in arr], dtype=bool)
    return arr.astype(bool)


def metrics_from_confusion(cm: ConfusionMatrix) -> Metrics:
    precision = cm.tp / (cm.tp + cm.fp) if cm.tp + cm.fp else 0.0
    recall = cm.tp / (cm.tp + cm.fn) if cm.tp + cm.fn else 0.0
    f1 = 2.0 * precision * recall / (precision + recall) if precision + recall else 0.0
    accuracy = (cm.tp + cm.tn) / cm.total if cm.total else 0.0
    return Metrics(cm, precision, recall, f1, accuracy)


def confusion_and_metrics(y_true: Sequence, y_pred: Sequence) -> Metrics:
    """Confusion counts and precision/recall/F1/accuracy; 1 or Inactive is positive."""
    t = _positive_mask(y_true)
    p = _positive_mask(y_pred)
    if len(t) != len(p) or len(t) == 0:
        raise LengthMismatch(f"y_true has {len(t)} entries, y_pred {len(p)}")
    cm = ConfusionMatrix(int(np.sum(t & p)), int(np.sum(~t & p)), int(np.sum(~t & ~p)), int(np.sum(t & ~p)))
    return metrics_from_confusion(cm)


# --- ROC and threshold ----------------------------------------------------------


class RocPoint(NamedTuple):
    threshold: float
    tpr: float
    fpr: float


def roc_curve(scores: Sequence[float], y_true: Sequence) -> list[RocPoint]:
    """ROC points for the rule ``score >= threshold`` at each distinct score.

    The first point has threshold +inf (nothing predicted positive); the last
    distinct score reaches (1, 1).
    """
    s = np.asarray(scores, dtype=np.float64)
    y = _positive_mask(y_true)
    if len(s) != len(y):
        raise LengthMismatch(f"{len(s)} scores for {len(y)} labels")
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClassLabels("ROC needs both classes")
    order = np.argsort(-s, kind="mergesort")
    s_sorted = s[order]
    tp = np.cumsum(y[order])
    fp = np.cumsum(~y[order])
    # last index of every run of equal scores
    last = np.flatnonzero(np.r_[s_sorted[1:] != s_sorted[:-1], True])
    points = [RocPoint(math.inf, 0.0, 0.0)]
    for i in last:
        points.append(RocPoint(float(s_sorted[i]), tp[i] / n_pos, fp[i] / n_neg))
    return points


def roc_auc(roc: Sequence[RocPoint]) -> float:
    fpr = np.array([p.fpr for p in roc])
    tpr = np.array([p.tpr for p in roc])
    return float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2.0))


def gmean(tpr: float, fpr: float) -> float:
    return math.sqrt(tpr * (1.0 - fpr))


def gmean_threshold(roc: Sequence[RocPoint], center: float = 0.5) -> float:
    """Threshold of the point with the largest G-mean.

    Ties go to the threshold closest to ``center`` (0.5 for probabilities, 0
    for margins), then to the higher threshold.
    """
    if not roc:
        raise ValueError("empty ROC curve")
    best = None
    best_key = None
    for p in roc:
        key = (gmean(p.tpr, p.fpr), -abs(p.threshold - center), p.threshold)
        if best_key is None or key > best_key:
            best, best_key = p, key
    return best.threshold


# --- grids ----------------------------------------------------------------------

_PAPER_GRIDS: dict[ClassifierKind, dict[str, tuple]] = {
    ClassifierKind.RF: {
        "n_estimators": (100, 250, 500, 800),
        "max_depth": (2, 4),
        "min_samples_split": (2, 4),
        "min_samples_leaf": (4, 8),
    },
    ClassifierKind.GB: {
        "n_estimators": (100, 250, 500, 800),
        "learning_rate": (0.01, 0.1),
        "max_depth": (2, 4),
    },
    ClassifierKind.SVM: {
        "C": (1.0, 3.0),
        "kernel": ("linear", "rbf"),
        "gamma": (0.1, 0.4),
    },
}

_CI_GRIDS: dict[ClassifierKind, dict[str, tuple]] = {
    ClassifierKind.RF: {
        "n_estimators": (100, 250),
        "max_depth": (2, 4),
        "min_samples_split": (2,),
        "min_samples_leaf": (4, 8),
    },
    ClassifierKind.GB: {"n_estimators": (100,), "learning_rate": (0.1,), "max_depth": (2,)},
    ClassifierKind.SVM: {"C": (1.0,), "kernel": ("rbf",), "gamma": (0.1,)},
}

_PARAM_TYPES = {ClassifierKind.RF: RfParams, ClassifierKind.GB: GbParams, ClassifierKind.SVM: SvmParams}


@dataclass
class GridSpec:
    """Hyperparameter value lists for one classifier kind.

    Cells enumerate the Cartesian product in axis order; for SVM the linear
    kernel ignores gamma, so duplicate linear cells are dropped.
    """

    kind: ClassifierKind
    values: dict[str, tuple]

    def __post_init__(self) -> None:
        self.kind = ClassifierKind(self.kind)
        self.values = {k: tuple(v) for k, v in self.values.items()}
        allowed = set(_PARAM_TYPES[self.kind].__dataclass_fields__)
        unknown = set(self.values) - allowed
        if unknown:
            raise ValueError(f"unknown {self.kind.value} hyperparameters: {sorted(unknown)}")
        if any(len(v) == 0 for v in self.values.values()):
            raise ValueError("grid axes must be non-empty")

    @classmethod
    def paper(cls, kind: ClassifierKind | str) -> GridSpec:
        kind = ClassifierKind(kind)
        return cls(kind, dict(_PAPER_GRIDS[kind]))

    @classmethod
    def ci(cls, kind: ClassifierKind | str) -> GridSpec:
        kind = ClassifierKind(kind)
        return cls(kind, dict(_CI_GRIDS[kind]))

    def cells(self) -> list:
        ptype = _PARAM_TYPES[self.kind]
        names = list(self.values)
        out, seen = [], set()
        for combo in itertools.product(*(self.values[n] for n in names)):
            params = ptype(**dict(zip(names, combo)))
            key = json.dumps(params.to_dict(), sort_keys=True)
            if key in seen:
                continue
            seen.add(key)
            out.append(params)
        return out

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "values": {k: list(v) for k, v in self.values.items()}}

    @classmethod
    def from_dict(cls, d: dict) -> GridSpec:
        return cls(ClassifierKind(d["kind"]), {k: tuple(v) for k, v in d["values"].items()})


# --- inner search -----------------------------------------------------------------


def stratified_folds(y: Sequence[int], n_folds: int, seed: int) -> np.ndarray:
    """Fold id per row: each class is shuffled and dealt round-robin."""
    y = np.asarray(y)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))
    fold = np.empty(len(y), dtype=np.int64)
    offset = 0
    for cls in (1, 0):
        idx = np.flatnonzero(y == cls)
        idx = idx[rng.permutation(len(idx))]
        fold[idx] = (np.arange(len(idx)) + offset) % n_folds
        offset += len(idx)
    return fold


@dataclass
class InnerSearchResult:
    best_index: int
    best_params: Any
    mean_f1: list[float]
    oof_scores: np.ndarray
    fold_of_row: np.ndarray


def inner_grid_search(
    X: np.ndarray,
    y: np.ndarray,
    grid: GridSpec,
    seed: int,
    n_folds: int = INNER_FOLDS,
    split_seed: int | None = None,
    on_score: Callable[[str, int], None] | None = None,
) -> InnerSearchResult:
    """Stratified k-fold grid search selecting by mean F1 at the default threshold.

    ``X`` already holds only the selected features. Returns the winning cell
    (first one on ties) and its pooled out-of-fold scores, one per row.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if min(int(np.sum(y == 1)), int(np.sum(y == 0))) < n_folds:
        raise InsufficientRows(f"need at least {n_folds} rows per class for inner {n_folds}-fold search")
    fold = stratified_folds(y, n_folds, seed if split_seed is None else split_seed)
    cut = grid.kind.default_threshold
    cells = grid.cells()
    mean_f1: list[float] = []
    oof_all: list[np.ndarray] = []
    for ci, params in enumerate(cells):
        oof = np.empty(len(y))
        f1s = []
        for f in range(n_folds):
            tr, va = fold != f, fold == f
            model = fit_classifier(grid.kind, X[tr], y[tr], params, derive_seed(seed, _SEED_INNER_FIT, ci, f))
            s = predict_scores(model, X[va])
            if on_score is not None:
                on_score("inner_validation", int(va.sum()))
            oof[va] = s
            f1s.append(confusion_and_metrics(y[va], s >= cut).f1)
        mean_f1.append(float(np.mean(f1s)))
        oof_all.append(oof)
    best = int(np.argmax(mean_f1))  # argmax keeps the first maximum
    return InnerSearchResult(best, cells[best], mean_f1, oof_all[best], fold)


# --- outer LOAOCV ---------------------------------------------------------------


@dataclass
class FoldResult:
    fold_index: int
    animal_id: str
    n_train: int
    n_test: int
    hyperparameters: dict
    cell_index: int
    inner_mean_f1: list[float]
    feature_indices: list[int]
    feature_names: list[str]
    importances: list[float]
    threshold: float
    confusion: ConfusionMatrix
    precision: float
    recall: float
    f1: float
    accuracy: float
    default_threshold: float
    confusion_default: ConfusionMatrix
    precision_default: float
    recall_default: float
    f1_default: float
    accuracy_default: float
    auc: float | None
    events: list[tuple[str, int]] = field(default_factory=list)

    def metric(self, name: str, default: bool = False) -> float:
        return getattr(self, f"{name}_default" if default else name)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["events"] = [list(e) for e in self.events]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> FoldResult:
        d = dict(d)
        d["confusion"] = ConfusionMatrix(**d["confusion"])
        d["confusion_default"] = ConfusionMatrix(**d["confusion_default"])
        d["events"] = [tuple(e) for e in d.get("events", [])]
        return cls(**d)


@dataclass
class FoldTask:
    fold_index: int
    animal_id: str
    train: LabeledDataset
    test: LabeledDataset
    kind: ClassifierKind
    grid: GridSpec
    k_features: int
    seed: int


def _fit_importance_forest(X, y, seed) -> TrainedClassifier:
    return fit_classifier(ClassifierKind.RF, X, y, IMPORTANCE_RF, seed)


def run_fold(task: FoldTask) -> FoldResult:
    """Feature ranking, inner search, refit, threshold and test for one animal."""
    events: list[tuple[str, int]] = []
    tr, te = task.train, task.test
    if task.animal_id in set(tr.animal_ids.tolist()):
        raise AssertionError("held-out animal present in training rows")
    fi = task.fold_index

    # 1-2: importance forest on all features, top-k
    imp_model = _fit_importance_forest(tr.X, tr.y, derive_seed(task.seed, _SEED_IMPORTANCE, fi))
    importances = gini_importance(imp_model)
    top = select_top_k(importances, task.k_features)
    Xtr = tr.X[:, top]

    # 3: inner grid search on reduced features
    inner = inner_grid_search(
        Xtr,
        tr.y,
        task.grid,
        seed=derive_seed(task.seed, _SEED_INNER_FIT, fi),
        split_seed=derive_seed(task.seed, _SEED_INNER_SPLIT, fi),
        on_score=lambda role, n: events.append((role, n)),
    )

    # 4: refit the winner on every outer-train row
    model = fit_classifier(task.kind, Xtr, tr.y, inner.best_params, derive_seed(task.seed, _SEED_REFIT, fi))
    names = [tr.feature_names[i] for i in top]
    model.with_features(top, names)

    # 5: threshold from pooled inner out-of-fold scores only
    center = task.kind.default_threshold
    try:
        threshold = gmean_threshold(roc_curve(inner.oof_scores, tr.y), center)
    except SingleClassLabels:
        threshold = center
    if not math.isfinite(threshold):
        threshold = center
    model.threshold = threshold
    events.append(("threshold_fixed", 0))

    # 6: score the held-out animal exactly once
    scores = predict_scores(model, te.X[:, top])
    events.append(("test", len(scores)))
    at_g = confusion_and_metrics(te.y, scores >= threshold)
    at_d = confusion_and_metrics(te.y, scores >= center)
    try:
        auc = roc_auc(roc_curve(scores, te.y))
    except SingleClassLabels:
        auc = None
    return FoldResult(
        fold_index=fi,
        animal_id=task.animal_id,
        n_train=len(tr),
        n_test=len(te),
        hyperparameters=inner.best_params.to_dict(),
        cell_index=inner.best_index,
        inner_mean_f1=inner.mean_f1,
        feature_indices=[int(i) for i in top],
        feature_names=names,
        importances=[float(importances[i]) for i in top],
        threshold=float(threshold),
        confusion=at_g.confusion,
        precision=at_g.precision,
        recall=at_g.recall,
        f1=at_g.f1,
        accuracy=at_g.accuracy,
        default_threshold=center,
        confusion_default=at_d.confusion,
        precision_default=at_d.precision,
        recall_default=at_d.recall,
        f1_default=at_d.f1,
        accuracy_default=at_d.accuracy,
        auc=auc,
        events=events,
    )


def fold_tasks(data: LabeledDataset, kind, grid: GridSpec, k_features: int, seed: int) -> list[FoldTask]:
    animals = data.animals
    if len(animals) < 2:
        raise InsufficientRows("leave-one-animal-out needs at least two animals")
    tasks = []
    for fi, animal in enumerate(animals):
        held = data.animal_ids == animal
        tasks.append(
            FoldTask(fi, animal, data.subset(~held), data.subset(held), ClassifierKind(kind), grid, int(k_features), int(seed))
        )
    return tasks


def run_tasks(tasks: Sequence[Any], fn: Callable[[Any], Any], workers: int = 1) -> list:
    """Map ``fn`` over tasks, returning results in task order."""
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


# --- reports ----------------------------------------------------------------------


def quantiles(values: Sequence[float]) -> dict[str, float]:
    """Median, Q1 and Q3 with linear interpolation between order statistics."""
    v = np.asarray(values, dtype=np.float64)
    q1, med, q3 = np.quantile(v, [0.25, 0.5, 0.75], method="linear")
    return {"median": float(med), "q1": float(q1), "q3": float(q3)}


def summarize_report(folds: Sequence[FoldResult], default: bool = False) -> dict:
    """Per-metric and per-confusion-cell median / Q1 / Q3 across folds."""
    if not folds:
        raise ValueError("no folds to summarize")
    cm_attr = "confusion_default" if default else "confusion"
    return {
        "metrics": {m: quantiles([f.metric(m, default) for f in folds]) for m in METRICS},
        "confusion": {c: quantiles([getattr(getattr(f, cm_attr), c) for f in folds]) for c in CELLS},
    }


@dataclass
class EvalReport:
    kind: ClassifierKind
    window_size_s: int
    k: int
    seed: int
    grid: GridSpec
    folds: list[FoldResult]

    @property
    def summary(self) -> dict:
        return summarize_report(self.folds)

    @property
    def summary_default(self) -> dict:
        return summarize_report(self.folds, default=True)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "window_size_s": self.window_size_s,
            "k": self.k,
            "seed": self.seed,
            "grid": self.grid.to_dict(),
            "n_folds": len(self.folds),
            "summary": self.summary,
            "summary_default_threshold": self.summary_default,
            "folds": [f.to_dict() for f in self.folds],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> EvalReport:
        return cls(
            ClassifierKind(d["kind"]),
            int(d["window_size_s"]),
            int(d["k"]),
            int(d["seed"]),
            GridSpec.from_dict(d["grid"]),
            [FoldResult.from_dict(f) for f in d["folds"]],
        )

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["animal_id", "k", "hyperparameters", "threshold", *CELLS, *METRICS])
        for f in self.folds:
            w.writerow(
                [
                    f.animal_id,
                    self.k,
                    json.dumps(f.hyperparameters, sort_keys=True),
                    repr(f.threshold),
                    *(getattr(f.confusion, c) for c in CELLS),
                    *(repr(f.metric(m)) for m in METRICS),
                ]
            )
        return buf.getvalue()

    def write(self, out_dir: str | os.PathLike, stem: str = "report") -> tuple[str, str]:
        os.makedirs(out_dir, exist_ok=True)
        jpath = os.path.join(out_dir, f"{stem}.json")
        cpath = os.path.join(out_dir, f"{stem}.csv")
        with open(jpath, "w", encoding="utf-8") as fh:
            fh.write(self.to_json())
        with open(cpath, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.to_csv())
        return jpath, cpath


def outer_loaocv(
    data: LabeledDataset,
    kind: ClassifierKind | str,
    grid: GridSpec | None = None,
    k_features: int = 5,
    seed: int = 0,
    workers: int = 1,
) -> EvalReport:
    """Leave-one-animal-out evaluation with nested grid search per fold."""
    kind = ClassifierKind(kind)
    grid = GridSpec.paper(kind) if grid is None else grid
    if grid.kind is not kind:
        raise ValueError(f"grid is for {grid.kind.value}, classifier is {kind.value}")
    if tuple(data.feature_names) != FEATURE_NAMES:
        raise ValueError("evaluation expects the full canonical feature set")
    select_top_k(np.zeros(len(FEATURE_NAMES)), k_features)  # validates k up front
    tasks = fold_tasks(data, kind, grid, k_features, seed)
    folds = run_tasks(tasks, run_fold, workers)
    return EvalReport(kind, int(data.window_size_s), int(k_features), int(seed), grid, folds)


def train_final_model(
    data: LabeledDataset,
    kind: ClassifierKind | str,
    grid: GridSpec | None = None,
    k_features: int = 5,
    seed: int = 0,
) -> TrainedClassifier:
    """One deployable model on all rows, built exactly like a fold's model."""
    kind = ClassifierKind(kind)
    grid = GridSpec.paper(kind) if grid is None else grid
    imp_model = _fit_importance_forest(data.X, data.y, derive_seed(seed, _SEED_IMPORTANCE))
    importances = gini_importance(imp_model)
    top = select_top_k(importances, k_features)
    Xs = data.X[:, top]
    inner = inner_grid_search(
        Xs, data.y, grid, seed=derive_seed(seed, _SEED_INNER_FIT), split_seed=derive_seed(seed, _SEED_INNER_SPLIT)
    )
    model = fit_classifier(kind, Xs, data.y, inner.best_params, derive_seed(seed, _SEED_REFIT))
    model.with_features(top, [data.feature_names[i] for i in top])
    threshold = gmean_threshold(roc_curve(inner.oof_scores, data.y), kind.default_threshold)
    model.threshold = threshold if math.isfinite(threshold) else kind.default_threshold
    model.window_size_s = int(data.window_size_s)
    model.seed = int(seed)
    model.extra = {
        "importances": [float(v) for v in importances],
        "inner_mean_f1": inner.mean_f1,
        "n_train": len(data),
    }
    return model


# --- paper sweep ----------------------------------------------------------------

SWEEP_COLUMNS = ("classifier", "window_size_s", "k") + tuple(
    f"{m}_{q}" for m in METRICS for q in ("median", "q1", "q3")
)


def sweep_row(report: EvalReport) -> dict:
    row: dict[str, Any] = {"classifier": report.kind.value, "window_size_s": report.window_size_s, "k": report.k}
    for m, q in report.summary["metrics"].items():
        for name, v in q.items():
            row[f"{m}_{name}"] = v
    return row


def sweep_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(SWEEP_COLUMNS), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()
