"""Bagged CART regression forest.

Trees use axis-aligned splits chosen by exhaustive threshold search over
every feature (midpoints between consecutive distinct values), minimizing
the weighted squared error of the two children. Each tree is grown on a
bootstrap sample drawn from its own seed, derived from ``random_state`` so
that the first k trees of a forest do not depend on ``n_estimators``.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

DEFAULT_HYPERPARAMS = {
    "n_estimators": 100,
    "max_depth": 6,
    "min_samples_split": 10,
    "min_samples_leaf": 20,
    "random_state": 0,
    "bootstrap": True,
}


def worker_count() -> int:
    """Worker cap from ``PKGPULSE_THREADS`` (defaults to the CPU count)."""
    value = os.environ.get("PKGPULSE_THREADS")
    try:
        return max(1, int(value)) if value else (os.cpu_count() or 1)
    except ValueError:
        return 1


@dataclass
class RegressionTree:
    feature: np.ndarray      # -1 marks a leaf
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_samples: np.ndarray
    depth: int

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        rows = np.arange(X.shape[0])
        node = np.zeros(X.shape[0], dtype=np.int64)
        for _ in range(self.depth):
            feat = self.feature[node]
            internal = feat >= 0
            if not internal.any():
                break
            x = X[rows, np.where(internal, feat, 0)]
            nxt = np.where(x <= self.threshold[node], self.left[node], self.right[node])
            node = np.where(internal, nxt, node)
        return self.value[node]

    @property
    def leaves(self) -> np.ndarray:
        return np.flatnonzero(self.feature < 0)

    def to_json(self) -> dict:
        return {k: getattr(self, k).tolist() for k in
                ("feature", "threshold", "left", "right", "value", "n_samples")} | {"depth": self.depth}

    @classmethod
    def from_json(cls, obj: dict) -> "RegressionTree":
        ints = ("feature", "left", "right", "n_samples")
        return cls(**{k: np.asarray(obj[k], dtype=np.int64 if k in ints else float) for k in
                      ("feature", "threshold", "left", "right", "value", "n_samples")},
                   depth=int(obj["depth"]))


def best_split(X: np.ndarray, y: np.ndarray, min_samples_leaf: int = 1):
    """Best (feature, threshold, child_sse) over all features, or None.

    Candidates are midpoints between consecutive distinct sorted values whose
    children both keep at least ``min_samples_leaf`` rows. Ties go to the
    lowest feature index, then the lowest threshold.
    """
    n, n_features = X.shape
    if n < 2 * min_samples_leaf:
        return None
    total_sq = float(np.dot(y, y))
    n_left = np.arange(1, n)
    n_right = n - n_left
    size_ok = (n_left >= min_samples_leaf) & (n_right >= min_samples_leaf)
    best = None
    best_gain = -np.inf
    for j in range(n_features):
        order = np.argsort(X[:, j], kind="mergesort")
        xs = X[order, j]
        csum = np.cumsum(y[order])
        valid = size_ok & (xs[:-1] < xs[1:])
        if not valid.any():
            continue
        left_sum = csum[:-1]
        right_sum = csum[-1] - left_sum
        # child SSE = total_sq - gain, so maximizing gain minimizes SSE
        gain = np.where(valid, left_sum ** 2 / n_left + right_sum ** 2 / n_right, -np.inf)
        k = int(np.argmax(gain))
        if gain[k] > best_gain:
            lo, hi = xs[k], xs[k + 1]
            thr = lo + (hi - lo) / 2.0
            if not lo <= thr < hi:
                thr = lo
            best_gain = gain[k]
            best = (j, float(thr), total_sq - float(gain[k]))
    return best


def fit_tree(X, y, max_depth: Optional[int] = None, min_samples_split: int = 2,
             min_samples_leaf: int = 1) -> RegressionTree:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    max_depth = np.inf if max_depth is None else max_depth
    feature, threshold, left, right, value, count = [], [], [], [], [], []
    deepest = 0

    def new_node(idx):
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(float(y[idx].mean()))
        count.append(idx.size)
        return len(feature) - 1

    stack = [(new_node(np.arange(y.size)), np.arange(y.size), 0)]
    while stack:
        node, idx, depth = stack.pop()
        deepest = max(deepest, depth)
        if depth >= max_depth or idx.size < max(min_samples_split, 2):
            continue
        ys = y[idx]
        node_sse = float(np.dot(ys, ys)) - ys.sum() ** 2 / ys.size
        if node_sse <= 1e-12 * max(1.0, float(np.dot(ys, ys))):
            continue
        found = best_split(X[idx], ys, min_samples_leaf)
        if found is None:
            continue
        j, thr, child_sse = found
        if child_sse >= node_sse:
            continue
        mask = X[idx, j] <= thr
        li, ri = idx[mask], idx[~mask]
        feature[node], threshold[node] = j, thr
        left[node], right[node] = new_node(li), new_node(ri)
        stack.append((right[node], ri, depth + 1))
        stack.append((left[node], li, depth + 1))
    return RegressionTree(np.asarray(feature, dtype=np.int64), np.asarray(threshold),
                          np.asarray(left, dtype=np.int64), np.asarray(right, dtype=np.int64),
                          np.asarray(value), np.asarray(count, dtype=np.int64), int(deepest))


@dataclass
class ForestParams:
    trees: list
    hyperparams: dict = field(default_factory=dict)

    def predict(self, X, n_trees: Optional[int] = None) -> np.ndarray:
        return forest_predict(self, X, n_trees)

    def to_json(self) -> dict:
        return {"hyperparams": self.hyperparams, "trees": [t.to_json() for t in self.trees]}

    @classmethod
    def from_json(cls, obj: dict) -> "ForestParams":
        return cls([RegressionTree.from_json(t) for t in obj["trees"]], dict(obj["hyperparams"]))


def forest_fit(X, y, hyperparams: Optional[Mapping] = None, **overrides) -> ForestParams:
    """Fit a bagged regression forest; see ``DEFAULT_HYPERPARAMS``."""
    hp = {**DEFAULT_HYPERPARAMS, **(hyperparams or {}), **overrides}
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    if y.size == 0 or X.shape[0] != y.size:
        raise ValueError(f"need matching nonempty X and y, got {X.shape[0]} rows and {y.size} labels")
    n = y.size
    seeds = np.random.SeedSequence(int(hp["random_state"])).spawn(int(hp["n_estimators"]))

    def grow(seed):
        if hp["bootstrap"]:
            idx = np.random.default_rng(seed).integers(0, n, size=n)
            Xb, yb = X[idx], y[idx]
        else:
            Xb, yb = X, y
        return fit_tree(Xb, yb, hp["max_depth"], int(hp["min_samples_split"]), int(hp["min_samples_leaf"]))

    workers = min(worker_count(), len(seeds))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            trees = list(pool.map(grow, seeds))
    else:
        trees = [grow(s) for s in seeds]
    return ForestParams(trees, hp)


def forest_predict(params: ForestParams, X, n_trees: Optional[int] = None) -> np.ndarray:
    """Mean prediction of the first ``n_trees`` trees (all by default).

    Per-row tree outputs are sorted before averaging so the result does not
    depend on tree order.
    """
    trees = params.trees if n_trees is None else params.trees[:n_trees]
    if not trees:
        raise ValueError("forest has no trees")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    preds = np.sort(np.stack([t.predict(X) for t in trees]), axis=0)
    return preds.sum(axis=0) / len(trees)
