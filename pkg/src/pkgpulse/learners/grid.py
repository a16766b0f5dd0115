"""Exhaustive hyperparameter search for the forest regressor."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from ..metrics import UndefinedCorrelationError, spearman_rho
from .forest import forest_fit, forest_predict

# n_estimators / max_depth / min_samples_split / min_samples_leaf / random_state
DEFAULT_GRID = {
    "n_estimators": [100, 300, 500, 700, 900],
    "max_depth": [4, 5, 6, 7],
    "min_samples_split": [4, 10, 16, 22, 28],
    "min_samples_leaf": [20, 40, 60, 80],
    "random_state": [0, 4, 8],
}


def expand_grid(grid: Mapping[str, Sequence]) -> list:
    """Every combination, in row-major order of the grid's key order."""
    keys = list(grid)
    if not keys or any(len(grid[k]) == 0 for k in keys):
        raise ValueError("grid must be nonempty")
    return [dict(zip(keys, combo)) for combo in itertools.product(*(grid[k] for k in keys))]


@dataclass
class GridResult:
    best: dict
    best_score: float
    table: list          # [{"params": ..., "score": ...}] in grid order


def _safe_metric(metric, gold, pred) -> float:
    try:
        value = float(metric(gold, pred))
    except UndefinedCorrelationError:
        return float("nan")
    return value


def grid_search(grid: Mapping[str, Sequence], train: tuple, validation: tuple,
                metric: Callable = spearman_rho) -> GridResult:
    """Fit a forest per grid point on ``train`` = (X, y) and score it on
    ``validation`` = (X, y) with ``metric(gold, pred)``.

    The highest score wins; ties (and undefined scores, which rank last) keep
    the earliest grid point. Forests that differ only in ``n_estimators``
    share one fit: their trees are prefixes of the largest forest.
    """
    points = expand_grid(grid)
    X_tr, y_tr = train
    X_va, y_va = validation
    scores = [float("nan")] * len(points)
    groups: dict = {}
    for i, p in enumerate(points):
        key = tuple(sorted((k, v) for k, v in p.items() if k != "n_estimators"))
        groups.setdefault(key, []).append(i)
    for members in groups.values():
        sizes = [points[i].get("n_estimators", 100) for i in members]
        forest = forest_fit(X_tr, y_tr, {**points[members[0]], "n_estimators": max(sizes)})
        for i, size in zip(members, sizes):
            scores[i] = _safe_metric(metric, y_va, forest_predict(forest, X_va, n_trees=size))
    best_i = 0
    for i, s in enumerate(scores):
        if not math.isnan(s) and (math.isnan(scores[best_i]) or s > scores[best_i]):
            best_i = i
    table = [{"params": p, "score": s} for p, s in zip(points, scores)]
    return GridResult(dict(points[best_i]), scores[best_i], table)
