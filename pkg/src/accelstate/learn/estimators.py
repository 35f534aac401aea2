"""Random forest, gradient boosting and SVM estimators plus their params."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import expit

from ..errors import NoConvergence, SingleClassTraining
from . import _kernels
from .tree import Tree, derive_seed, fit_decision_tree, fit_regression_tree

SMO_TOLERANCE = 1e-3
SMO_MAX_ITER = 1_000_000


@dataclass(frozen=True)
class RfParams:
    n_estimators: int = 100
    max_depth: int | None = None
    min_samples_split: int = 2
    min_samples_leaf: int = 1

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class GbParams:
    n_estimators: int = 100
    learning_rate: float = 0.1
    max_depth: int = 3

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class SvmParams:
    C: float = 1.0
    kernel: str = "rbf"  # "linear" | "rbf"
    gamma: float = 0.1

    def __post_init__(self) -> None:
        if self.kernel not in ("linear", "rbf"):
            raise ValueError(f"unknown kernel {self.kernel!r}")

    def to_dict(self) -> dict:
        d = asdict(self)
        if self.kernel == "linear":
            d.pop("gamma")
        return d


def _check_binary(y: np.ndarray) -> np.ndarray:
    y = np.asarray(y).astype(np.int64)
    if len(y) < 2 or y.min() == y.max():
        raise SingleClassTraining("training labels contain a single class")
    if not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be 0/1")
    return y


# --- random forest ------------------------------------------------------------


@dataclass
class Forest:
    trees: list[Tree]

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        total = np.zeros(len(X))
        for tree in self.trees:
            total += tree.predict(X)
        return total / len(self.trees)

    def feature_importances(self, n_features: int) -> np.ndarray:
        """Summed node-weighted impurity decrease per feature, normalised to 1."""
        imp = np.zeros(n_features)
        for tree in self.trees:
            internal = tree.feature >= 0
            np.add.at(imp, tree.feature[internal], tree.decrease[internal])
        total = imp.sum()
        if total <= 0:
            return np.full(n_features, 1.0 / n_features)
        return imp / total


def max_features_for(n_features: int) -> int:
    return max(1, int(np.floor(np.sqrt(n_features))))


def fit_forest(X: np.ndarray, y: np.ndarray, p: RfParams, seed: int) -> Forest:
    """Bootstrap forest of Gini trees.

    Tree ``i`` draws its bootstrap (n rows with replacement, PCG64) and its
    feature-sampling stream from ``SeedSequence(seed, spawn_key=(i,))``.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = _check_binary(y)
    n, n_feat = X.shape
    mf = max_features_for(n_feat)
    trees = []
    for i in range(p.n_estimators):
        ss = np.random.SeedSequence(int(seed), spawn_key=(i,))
        rng = np.random.Generator(np.random.PCG64(ss))
        boot = rng.integers(0, n, size=n)
        tree_seed = int(ss.generate_state(1, dtype=np.uint64)[0])
        trees.append(
            fit_decision_tree(
                X,
                y,
                p.max_depth,
                p.min_samples_split,
                p.min_samples_leaf,
                feature_subsample=mf,
                rng=tree_seed,
                sample_idx=boot,
            )
        )
    return Forest(trees)


# --- gradient boosting --------------------------------------------------------


def log_loss(y: np.ndarray, raw: np.ndarray) -> float:
    """Mean binary log-loss of raw (logit) scores."""
    sign = 2.0 * np.asarray(y, dtype=np.float64) - 1.0
    return float(np.mean(np.logaddexp(0.0, -sign * raw)))


@dataclass
class Boosting:
    init_raw: float
    learning_rate: float
    trees: list[Tree]
    train_loss: list[float] = field(default_factory=list)

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        raw = np.full(len(X), self.init_raw)
        for tree in self.trees:
            raw += tree.predict(X)
        return raw

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return expit(self.decision_function(X))


def _leaf_loss(sign: np.ndarray, raw: np.ndarray, leaves: np.ndarray, n_leaves: int) -> np.ndarray:
    return np.bincount(leaves, weights=np.logaddexp(0.0, -sign * raw), minlength=n_leaves)


def fit_boosting(X: np.ndarray, y: np.ndarray, p: GbParams, seed: int) -> Boosting:
    """Logistic-loss gradient boosting with Newton leaf values.

    Each stage fits a squared-error tree to the residuals ``y - p`` and sets
    every leaf to ``learning_rate * sum(residual) / sum(p (1 - p))``. If that
    step would raise a leaf's training loss it is halved until it does not,
    which keeps the training loss non-increasing stage over stage.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = _check_binary(y)
    yf = y.astype(np.float64)
    sign = 2.0 * yf - 1.0
    pos = yf.sum()
    init = float(np.log(pos / (len(yf) - pos)))
    raw = np.full(len(yf), init)
    trees = []
    losses = [log_loss(y, raw)]
    for _ in range(p.n_estimators):
        prob = expit(raw)
        residual = yf - prob
        tree = fit_regression_tree(X, residual, p.max_depth)
        leaves = tree.apply(X)
        nn = tree.node_count
        num = np.bincount(leaves, weights=residual, minlength=nn)
        den = np.bincount(leaves, weights=prob * (1.0 - prob), minlength=nn)
        step = np.where(np.abs(den) < 1e-150, 0.0, num / np.where(den == 0, 1.0, den)) * p.learning_rate
        before = _leaf_loss(sign, raw, leaves, nn)
        for _halving in range(60):
            after = _leaf_loss(sign, raw + step[leaves], leaves, nn)
            worse = after > before
            if not worse.any():
                break
            step = np.where(worse, 0.5 * step, step)
        else:
            step = np.where(after > before, 0.0, step)
        value = tree.value.copy()
        leaf_mask = tree.feature < 0
        value[leaf_mask] = step[leaf_mask]
        tree.value = value
        raw = raw + step[leaves]
        trees.append(tree)
        losses.append(log_loss(y, raw))
    return Boosting(init, p.learning_rate, trees, losses)


# --- support vector machine ---------------------------------------------------


def kernel_matrix(A: np.ndarray, B: np.ndarray, kernel: str, gamma: float) -> np.ndarray:
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    dot = A @ B.T
    if kernel == "linear":
        return dot
    sq = np.sum(A * A, axis=1)[:, None] + np.sum(B * B, axis=1)[None, :] - 2.0 * dot
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-gamma * sq)


@dataclass
class SvmModel:
    kernel: str
    C: float
    gamma: float
    support: np.ndarray  # support rows (standardized feature space)
    alpha: np.ndarray  # duals of the support rows
    sv_sign: np.ndarray  # +1 Inactive / -1 Active for the support rows
    bias: float
    iterations: int = 0
    objective_trace: np.ndarray = field(default_factory=lambda: np.empty(0))

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        if len(self.support) == 0:
            return np.full(len(X), self.bias)
        K = kernel_matrix(X, self.support, self.kernel, self.gamma)
        return K @ (self.alpha * self.sv_sign) + self.bias


def fit_svm_model(
    X: np.ndarray,
    y: np.ndarray,
    p: SvmParams,
    tol: float = SMO_TOLERANCE,
    max_iter: int = SMO_MAX_ITER,
    record_every: int = 0,
) -> tuple[SvmModel, np.ndarray]:
    """Solve the dual with SMO; returns the model and the full alpha vector."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = _check_binary(y)
    sign = np.where(y == 1, 1.0, -1.0)
    K = kernel_matrix(X, X, p.kernel, p.gamma)
    Q = K * sign[:, None] * sign[None, :]
    alpha, rho, iters, converged, trace = _kernels.smo_solve(Q, sign, float(p.C), float(tol), int(max_iter), int(record_every))
    if not converged:
        raise NoConvergence(max_iter)
    sv = alpha > 0
    model = SvmModel(p.kernel, float(p.C), float(p.gamma), X[sv].copy(), alpha[sv].copy(), sign[sv].copy(), -float(rho), int(iters), trace)
    return model, alpha
