"""Binary decision trees stored as flat node arrays."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels


def derive_seed(master: int, *keys: int) -> int:
    """Deterministic child seed from a master seed and integer path."""
    ss = np.random.SeedSequence(int(master), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass
class Tree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_node: np.ndarray
    impurity: np.ndarray
    decrease: np.ndarray

    @property
    def node_count(self) -> int:
        return len(self.feature)

    @property
    def depth(self) -> int:
        depths = np.zeros(self.node_count, dtype=np.int64)
        for node in range(self.node_count):
            if self.feature[node] >= 0:
                depths[self.left[node]] = depths[node] + 1
                depths[self.right[node]] = depths[node] + 1
        return int(depths.max())

    def apply(self, X: np.ndarray) -> np.ndarray:
        return _kernels.apply_tree(self.feature, self.threshold, self.left, self.right, np.ascontiguousarray(X, dtype=np.float64))

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]

    def to_record(self, node: int = 0) -> dict:
        """Nested node record for JSON persistence."""
        rec = {"n_samples": int(self.n_node[node]), "value": float(self.value[node])}
        if self.feature[node] >= 0:
            rec["feature"] = int(self.feature[node])
            rec["threshold"] = float(self.threshold[node])
            rec["impurity_decrease"] = float(self.decrease[node])
            rec["left"] = self.to_record(int(self.left[node]))
            rec["right"] = self.to_record(int(self.right[node]))
        return rec

    @classmethod
    def from_record(cls, record: dict) -> Tree:
        rows: list[list] = []

        def visit(rec: dict) -> int:
            idx = len(rows)
            rows.append([-1, 0.0, -1, -1, rec["value"], rec["n_samples"], 0.0, rec.get("impurity_decrease", 0.0)])
            if "feature" in rec:
                rows[idx][0] = rec["feature"]
                rows[idx][1] = rec["threshold"]
                rows[idx][2] = visit(rec["left"])
                rows[idx][3] = visit(rec["right"])
            return idx

        visit(record)
        cols = list(zip(*rows))
        return cls(
            np.array(cols[0], dtype=np.int64),
            np.array(cols[1], dtype=np.float64),
            np.array(cols[2], dtype=np.int64),
            np.array(cols[3], dtype=np.int64),
            np.array(cols[4], dtype=np.float64),
            np.array(cols[5], dtype=np.int64),
            np.array(cols[6], dtype=np.float64),
            np.array(cols[7], dtype=np.float64),
        )


def _grow(X, target, sample_idx, classification, max_depth, min_samples_split, min_samples_leaf, max_features, seed) -> Tree:
    X = np.ascontiguousarray(X, dtype=np.float64)
    arrays = _kernels.build_tree(
        X,
        np.ascontiguousarray(target, dtype=np.float64),
        np.ascontiguousarray(sample_idx, dtype=np.int64),
        classification,
        -1 if max_depth is None else int(max_depth),
        int(min_samples_split),
        int(min_samples_leaf),
        0 if max_features is None else int(max_features),
        np.uint64(seed),
    )
    return Tree(*arrays)


def fit_decision_tree(
    X: np.ndarray,
    y: np.ndarray,
    max_depth: int | None = None,
    min_samples_split: int = 2,
    min_samples_leaf: int = 1,
    feature_subsample: int | None = None,
    rng: int = 0,
    sample_idx: np.ndarray | None = None,
) -> Tree:
    """Gini classification tree; leaves hold the positive-class fraction.

    ``sample_idx`` (with repeats) selects the training rows, e.g. a bootstrap.
    ``rng`` seeds per-node feature subsampling when ``feature_subsample`` is
    set.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or len(X) == 0:
        raise ValueError("X must be a non-empty 2-D array")
    if sample_idx is None:
        sample_idx = np.arange(len(X))
    return _grow(X, y, sample_idx, True, max_depth, min_samples_split, min_samples_leaf, feature_subsample, rng)


def fit_regression_tree(
    X: np.ndarray,
    target: np.ndarray,
    max_depth: int | None = 3,
    min_samples_split: int = 2,
    min_samples_leaf: int = 1,
) -> Tree:
    """Squared-error regression tree over all features (boosting base learner)."""
    X = np.asarray(X, dtype=np.float64)
    return _grow(X, target, np.arange(len(X)), False, max_depth, min_samples_split, min_samples_leaf, None, 0)
