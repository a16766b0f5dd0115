"""Bug-urgency ranking: regress next-release bug counts with a forest trained
on the preceding horizons, then rank packages by the prediction."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from .featurize import urgency_features
from .learners import forest_fit, forest_predict, grid_search
from .learners.forest import DEFAULT_HYPERPARAMS
from .metrics import UndefinedCorrelationError, at_k, average_ranks, kendall_tau, spearman_rho
from .tgraph import Corpus, DistributionId

log = logging.getLogger(__name__)


class InsufficientHistoryError(ValueError):
    pass


def _resolve_t(corpus: Corpus, t: Union[int, str]) -> int:
    return corpus.index_of(t) if isinstance(t, str) else int(t)


def eligible_packages(corpus: Corpus, t: int, window: int = 10) -> set:
    """Packages present at t with at least one bug in [t-window, t-1]."""
    if t <= 1:
        raise ValueError("eligibility needs t > 1")
    lo = max(1, t - window)
    return {s for s in corpus.at(t).packages
            if any(corpus.bug_count(s, tau) for tau in range(lo, t))}


def design_matrix(corpus: Corpus, packages: Sequence[str], t: int, mode: str,
                  neighbor_lag: int = 0, has_neighbors: bool = False):
    """(X, feature names) for ``packages`` at time t, rows in the given order."""
    rows, names = [], None
    for s in packages:
        fv = urgency_features(corpus, s, t, mode, neighbor_lag, has_neighbors)
        rows.append(fv.values)
        names = fv.names
    if names is None:
        names = urgency_features(corpus, next(iter(corpus.at(t).packages), ""), t, mode,
                                 neighbor_lag, has_neighbors).names
    return np.asarray(rows, dtype=float).reshape(len(rows), len(names)), names


def training_set(corpus: Corpus, horizons: Sequence[int], mode: str, window: int = 10,
                 neighbor_lag: int = 0, has_neighbors: bool = False):
    """Stacked (X, y) over eligible packages at each horizon; labels are
    |bugs(s, tau)| at that horizon."""
    Xs, ys = [], []
    for tau in horizons:
        pkgs = sorted(eligible_packages(corpus, tau, window))
        X, _ = design_matrix(corpus, pkgs, tau, mode, neighbor_lag, has_neighbors)
        Xs.append(X)
        ys.append(np.asarray([corpus.bug_count(s, tau) for s in pkgs], dtype=float))
    return np.vstack(Xs), np.concatenate(ys)


def _maybe(fn, *args, **kwargs) -> Optional[float]:
    try:
        return float(fn(*args, **kwargs))
    except (UndefinedCorrelationError, ValueError):
        return None


def correlation_summary(gold: Sequence[float], pred: Sequence[float], names: Sequence[str],
                        k: int = 25) -> dict:
    out = {"rho": _maybe(spearman_rho, gold, pred), "tau": _maybe(kendall_tau, gold, pred)}
    for by, suffix in (("gold", ""), ("pred", "_predtop")):
        try:
            rho_k, tau_k = at_k(gold, pred, k, names=names, by=by)
        except (UndefinedCorrelationError, ValueError):
            rho_k = tau_k = None
        out[f"rho@{k}{suffix}"] = rho_k
        out[f"tau@{k}{suffix}"] = tau_k
    return out


@dataclass
class UrgencyRun:
    test_distribution: DistributionId
    feature_mode: str
    K_train: int
    filter_window: int
    predictions: dict
    gold: dict
    hyperparams: dict = field(default_factory=dict)
    grid_table: list = field(default_factory=list)
    metrics: dict = field(default_factory=dict)
    feature_names: tuple = ()

    @property
    def packages(self) -> list:
        return sorted(self.predictions)

    def ranks(self) -> tuple:
        """(gold ranks, predicted ranks) by package, rank 1 = most bugs."""
        pkgs = self.packages
        g = average_ranks([self.gold[s] for s in pkgs], descending=True)
        p = average_ranks([self.predictions[s] for s in pkgs], descending=True)
        return dict(zip(pkgs, g)), dict(zip(pkgs, p))

    def rank_errors(self) -> dict:
        g, p = self.ranks()
        return {s: abs(g[s] - p[s]) for s in g}

    def top(self, k: int = 25) -> list:
        """(package, predicted, gold) rows for the k highest predictions."""
        order = sorted(self.packages, key=lambda s: (-self.predictions[s], s))
        return [(s, self.predictions[s], self.gold[s]) for s in order[:k]]


def run_urgency(corpus: Corpus, t: Union[int, str], mode: str = "auto", K_train: int = 5,
                filter_window: int = 10, grid: Optional[Mapping] = None,
                neighbor_lag: int = 0, has_neighbors: bool = False, k: int = 25) -> UrgencyRun:
    """Train on horizons [t-K_train, t-1] and predict |bugs(s,t)| for every
    package eligible at t.

    With a multi-point ``grid`` the forest hyperparameters are chosen by
    Spearman rho at horizon t-1 after training on [t-K_train, t-2]; the chosen
    point is then refit on all K_train horizons.
    """
    t = _resolve_t(corpus, t)
    if t - K_train < 3 or t > corpus.T:
        raise InsufficientHistoryError(
            f"t={t} with K_train={K_train} needs 3 <= t-K_train and t <= {corpus.T}")
    feats = dict(window=filter_window, neighbor_lag=neighbor_lag, has_neighbors=has_neighbors)
    horizons = list(range(t - K_train, t))
    grid = dict(grid) if grid else {k_: [v] for k_, v in DEFAULT_HYPERPARAMS.items()}
    table: list = []
    points = 1
    for v in grid.values():
        points *= len(v)
    if points > 1 and len(horizons) >= 2:
        train = training_set(corpus, horizons[:-1], mode, **feats)
        val = training_set(corpus, horizons[-1:], mode, **feats)
        result = grid_search(grid, train, val)
        best, table = result.best, result.table
        log.info("grid search over %d points: best %s (rho=%.4f)", points, best, result.best_score)
    else:
        best = {k_: v[0] for k_, v in grid.items()}
    X_tr, y_tr = training_set(corpus, horizons, mode, **feats)
    forest = forest_fit(X_tr, y_tr, best)

    pkgs = sorted(eligible_packages(corpus, t, filter_window))
    X_te, names = design_matrix(corpus, pkgs, t, mode, neighbor_lag, has_neighbors)
    pred = forest_predict(forest, X_te) if pkgs else np.zeros(0)
    predictions = {s: float(v) for s, v in zip(pkgs, pred)}
    gold = {s: corpus.bug_count(s, t) for s in pkgs}
    metrics = {}
    if pkgs:
        metrics = correlation_summary([gold[s] for s in pkgs], [predictions[s] for s in pkgs], pkgs, k)
    metrics["n_packages"] = len(pkgs)
    metrics["n_train_rows"] = int(y_tr.size)
    return UrgencyRun(corpus.at(t).distribution, mode, K_train, filter_window, predictions, gold,
                      dict(forest.hyperparams), table, metrics, tuple(names))
