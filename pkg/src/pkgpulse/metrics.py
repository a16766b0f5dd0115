"""Rank-evaluation primitives: average ranks, Spearman rho, Kendall tau-b,
top-k restricted correlations, MRR and the Mann-Whitney U test."""

from __future__ import annotations

import math
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np


class UndefinedCorrelationError(ValueError):
    """Raised when a rank correlation is undefined (constant input)."""


class MannWhitneyResult(NamedTuple):
    u: float
    p: float
    method: str


def _as_vector(values, name="values") -> np.ndarray:
    a = np.asarray(values, dtype=float)
    if a.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    if a.size == 0:
        raise ValueError(f"{name} must be nonempty")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains NaN or infinite entries")
    return a


def average_ranks(scores: Sequence[float], descending: bool = False) -> np.ndarray:
    """Rank ``scores`` from 1 to n, giving tied values the mean of the
    positions they occupy.

    With ``descending=True`` the largest score receives rank 1.
    """
    a = _as_vector(scores, "scores")
    if descending:
        a = -a
    order = np.argsort(a, kind="mergesort")
    ordered = a[order]
    starts_mask = np.r_[True, ordered[1:] != ordered[:-1]]
    group = np.cumsum(starts_mask) - 1
    starts = np.flatnonzero(starts_mask)
    ends = np.r_[starts[1:], a.size]
    # positions start+1 .. end (1-based, inclusive)
    mean_position = (starts + 1 + ends) / 2.0
    ranks = np.empty(a.size, dtype=float)
    ranks[order] = mean_position[group]
    return ranks


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    xc = x - x.mean()
    yc = y - y.mean()
    sxx = float(np.dot(xc, xc))
    syy = float(np.dot(yc, yc))
    if sxx == 0.0 or syy == 0.0:
        raise UndefinedCorrelationError("correlation undefined for constant input")
    r = float(np.dot(xc, yc)) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def _paired(gold, pred) -> tuple[np.ndarray, np.ndarray]:
    g = _as_vector(gold, "gold")
    p = _as_vector(pred, "pred")
    if g.size != p.size:
        raise ValueError(f"length mismatch: {g.size} gold vs {p.size} pred")
    return g, p


def spearman_rho(gold: Sequence[float], pred: Sequence[float]) -> float:
    """Spearman's rho: Pearson correlation of the average ranks."""
    g, p = _paired(gold, pred)
    return _pearson(average_ranks(g), average_ranks(p))


def _tie_pairs(a: np.ndarray) -> int:
    _, counts = np.unique(a, return_counts=True)
    return int(np.sum(counts * (counts - 1) // 2))


def kendall_tau(gold: Sequence[float], pred: Sequence[float]) -> float:
    """Kendall's tau-b (tie-corrected)."""
    g, p = _paired(gold, pred)
    n = g.size
    n0 = n * (n - 1) // 2
    denom = (n0 - _tie_pairs(g)) * (n0 - _tie_pairs(p))
    if denom == 0:
        raise UndefinedCorrelationError("tau-b undefined for constant input")
    net = 0  # concordant minus discordant
    for i in range(n - 1):
        net += int(np.sum(np.sign(g[i + 1:] - g[i]) * np.sign(p[i + 1:] - p[i])))
    tau = net / math.sqrt(denom)
    return max(-1.0, min(1.0, tau))


def top_k_indices(values: Sequence[float], k: int,
                  names: Optional[Sequence[str]] = None) -> list[int]:
    """Indices of the k largest ``values``; ties broken by name, else position."""
    keys = names if names is not None else range(len(values))
    order = sorted(range(len(values)), key=lambda i: (-float(values[i]), keys[i]))
    return order[:k]


def at_k(gold_counts: Sequence[float], pred_scores: Sequence[float], k: int = 25,
         names: Optional[Sequence[str]] = None, by: str = "gold") -> tuple[float, float]:
    """(rho@k, tau@k) over the k items ranked highest by ``by``.

    ``by="gold"`` selects the top-k by gold count (the canonical variant);
    ``by="pred"`` selects by predicted score. Both correlations are computed
    on the restricted lists, re-ranked within the selection.
    """
    g, p = _paired(gold_counts, pred_scores)
    if g.size < k:
        raise ValueError(f"need at least {k} items, got {g.size}")
    if by not in ("gold", "pred"):
        raise ValueError(f"unknown selection {by!r}")
    idx = top_k_indices(g if by == "gold" else p, k, names)
    return spearman_rho(g[idx], p[idx]), kendall_tau(g[idx], p[idx])


def reciprocal_rank(ranked: Sequence[str], gold: Iterable[str]) -> float:
    """1 / position of the best-ranked gold item in ``ranked``; 0 on a miss."""
    gold = set(gold)
    for pos, item in enumerate(ranked, start=1):
        if item in gold:
            return 1.0 / pos
    return 0.0


def mrr(positions: Iterable[Optional[int]]) -> float:
    """Mean reciprocal rank. Each entry is the 1-based rank of the best gold
    item for one query, or None for a miss (contributes 0)."""
    total = 0.0
    n = 0
    for pos in positions:
        n += 1
        if pos is None:
            continue
        if pos < 1:
            raise ValueError(f"rank must be >= 1, got {pos}")
        total += 1.0 / pos
    if n == 0:
        raise ValueError("mrr of an empty query set")
    return total / n


def _exact_two_sided(ranks: np.ndarray, n: int, u_obs: float) -> float:
    """Permutation p-value for U by dynamic programming over rank sums.

    Ranks are half-integers, so everything runs on doubled ranks.
    """
    r2 = np.rint(2 * ranks).astype(np.int64)
    total_sum = int(r2.sum())
    ways = np.zeros((n + 1, total_sum + 1), dtype=np.float64)
    ways[0, 0] = 1.0
    for i, r in enumerate(r2):
        for k in range(min(i + 1, n), 0, -1):
            ways[k, r:] += ways[k - 1, :total_sum + 1 - r]
    m = ranks.size - n
    dist = ways[n]
    sums = np.arange(total_sum + 1)
    u2 = sums - n * (n + 1)           # doubled U
    dev_obs = abs(round(2 * u_obs) - n * m)
    extreme = np.abs(u2 - n * m) >= dev_obs
    return float(dist[extreme].sum() / dist.sum())


def mann_whitney_u(sample_a: Sequence[float], sample_b: Sequence[float],
                   method: str = "auto") -> MannWhitneyResult:
    """Two-sided Mann-Whitney U test; U is reported for ``sample_a``.

    ``method="auto"`` enumerates the exact permutation distribution when both
    samples have at most 8 observations and otherwise uses the tie-corrected
    normal approximation with continuity correction.
    """
    a = _as_vector(sample_a, "sample_a")
    b = _as_vector(sample_b, "sample_b")
    n, m = a.size, b.size
    ranks = average_ranks(np.concatenate([a, b]))
    u = float(ranks[:n].sum() - n * (n + 1) / 2.0)
    if method == "auto":
        method = "exact" if n <= 8 and m <= 8 else "normal"
    if method == "exact":
        return MannWhitneyResult(u, min(1.0, _exact_two_sided(ranks, n, u)), "exact")
    if method != "normal":
        raise ValueError(f"unknown method {method!r}")
    big_n = n + m
    _, ties = np.unique(ranks, return_counts=True)
    tie_term = float(np.sum(ties ** 3 - ties)) / (big_n * (big_n - 1)) if big_n > 1 else 0.0
    var = n * m / 12.0 * ((big_n + 1) - tie_term)
    if var <= 0:
        return MannWhitneyResult(u, 1.0, "normal")
    z = (abs(u - n * m / 2.0) - 0.5) / math.sqrt(var)
    p = math.erfc(z / math.sqrt(2.0)) if z > 0 else 1.0
    return MannWhitneyResult(u, min(1.0, p), "normal")


class RankedList:
    """Items in rank order with their scores.

    Built with :meth:`from_scores`, which sorts by descending score and breaks
    ties by item id so the order is deterministic.
    """

    __slots__ = ("items", "scores")

    def __init__(self, items: Sequence = (), scores: Sequence[float] = ()):
        if len(items) != len(scores):
            raise ValueError("items and scores differ in length")
        if len(set(items)) != len(items):
            raise ValueError("ranked items must be unique")
        self.items = tuple(items)
        self.scores = tuple(float(s) for s in scores)

    @classmethod
    def from_scores(cls, scores) -> "RankedList":
        pairs = sorted(dict(scores).items(), key=lambda kv: (-kv[1], kv[0]))
        return cls([k for k, _ in pairs], [v for _, v in pairs])

    def __len__(self):
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    def __eq__(self, other):
        if not isinstance(other, RankedList):
            return NotImplemented
        return self.items == other.items and self.scores == other.scores

    def __repr__(self):
        return f"RankedList({list(zip(self.items, self.scores))!r})"

    def tie_groups(self) -> list:
        """Runs of equal scores as tuples of 0-based positions."""
        groups: list = []
        for i, s in enumerate(self.scores):
            if groups and self.scores[groups[-1][0]] == s:
                groups[-1].append(i)
            else:
                groups.append([i])
        return [tuple(g) for g in groups]

    def position(self, item) -> Optional[int]:
        try:
            return self.items.index(item) + 1
        except ValueError:
            return None
