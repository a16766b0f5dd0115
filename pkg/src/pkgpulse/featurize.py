"""Feature families for bug-urgency regression and developer ranking."""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .tgraph import Corpus

URGENCY_AUTO_NAMES = ("bugs_t-1", "bugs_t-2", "size_t-1", "size_t")
URGENCY_DEP_NAMES = ("in_max_bugs_t-1", "in_median_bugs_t-1", "out_max_bugs_t-1", "out_median_bugs_t-1")
HAS_NEIGHBOR_NAMES = ("has_in_neighbors", "has_out_neighbors")
DEVREC_AUTO_NAMES = ("n_high", "n_medium", "n_low", "n_bugs_closed", "worked_t-1")

URGENCY_MODES = ("auto", "auto+depn")


@dataclass(frozen=True)
class FeatureVector:
    names: tuple
    values: tuple

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if len(self.names) != len(self.values):
            raise ValueError(f"{len(self.names)} names for {len(self.values)} values")
        if not all(math.isfinite(v) for v in self.values):
            raise ValueError("feature values must be finite")

    def __len__(self):
        return len(self.values)

    def __add__(self, other: "FeatureVector") -> "FeatureVector":
        return FeatureVector(self.names + other.names, self.values + other.values)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)


def _check_t(corpus: Corpus, t: int, lowest: int) -> None:
    if not lowest <= t <= corpus.T:
        raise IndexError(f"t={t} outside feature range {lowest}..{corpus.T}")


def last_known_size(corpus: Corpus, s, t: int) -> int:
    """ps(s, tau) at the latest tau <= t where s is present; 0 if never seen."""
    for tau in range(min(t, corpus.T), 0, -1):
        size = corpus.at(tau).size(s)
        if size is not None:
            return size
    return 0


def urgency_auto_features(corpus: Corpus, s, t: int) -> FeatureVector:
    """Bug counts at t-1 and t-2 plus package sizes at t-1 and t.

    An absent package contributes 0 bugs and carries its last known size.
    """
    _check_t(corpus, t, 3)
    return FeatureVector(URGENCY_AUTO_NAMES, (
        corpus.bug_count(s, t - 1), corpus.bug_count(s, t - 2),
        last_known_size(corpus, s, t - 1), last_known_size(corpus, s, t)))


def _max_median(counts: list) -> tuple:
    if not counts:
        return 0.0, 0.0
    return float(max(counts)), float(statistics.median(counts))


def urgency_dep_features(corpus: Corpus, s, t: int, neighbor_lag: int = 0,
                         has_neighbors: bool = False) -> FeatureVector:
    """Max and median bug counts at t-1 over the in- and out-neighbors of s.

    Neighbor sets come from snapshot ``t - neighbor_lag`` (0 by default);
    an empty neighborhood yields zeros. ``has_neighbors`` appends two
    indicator bits so "no neighbors" is distinguishable from "quiet neighbors".
    """
    _check_t(corpus, t, 2)
    if neighbor_lag not in (0, 1):
        raise ValueError("neighbor_lag must be 0 or 1")
    snap = corpus.at(t - neighbor_lag)
    if s in snap:
        ins, outs = snap.in_neighbors(s), snap.out_neighbors(s)
    else:
        ins = outs = frozenset()
    in_max, in_med = _max_median([corpus.bug_count(n, t - 1) for n in ins])
    out_max, out_med = _max_median([corpus.bug_count(n, t - 1) for n in outs])
    fv = FeatureVector(URGENCY_DEP_NAMES, (in_max, in_med, out_max, out_med))
    if has_neighbors:
        fv = fv + FeatureVector(HAS_NEIGHBOR_NAMES, (float(bool(ins)), float(bool(outs))))
    return fv


def urgency_features(corpus: Corpus, s, t: int, mode: str = "auto", neighbor_lag: int = 0,
                     has_neighbors: bool = False) -> FeatureVector:
    if mode not in URGENCY_MODES:
        raise ValueError(f"unknown feature mode {mode!r}")
    fv = urgency_auto_features(corpus, s, t)
    if mode == "auto+depn":
        fv = fv + urgency_dep_features(corpus, s, t, neighbor_lag, has_neighbors)
    return fv


def _window(t: int, K: int) -> range:
    return range(max(1, t - K), t)


def devrec_auto_features(corpus: Corpus, s, d, t: int, K: int) -> FeatureVector:
    """Urgency-level and closed-bug counts of d over [t-K, t-1], counted across
    every package d worked on, plus whether d worked on s at t-1."""
    high = medium = low = closed = 0
    for tau in _window(t, K):
        act = corpus.activity(d, tau)
        high += act.high
        medium += act.medium
        low += act.low
        closed += act.bugs_closed
    recent = float(d in corpus.devs(s, t - 1))
    return FeatureVector(DEVREC_AUTO_NAMES, (high, medium, low, closed, recent))


def devrec_dep_names(K: int) -> tuple:
    return (tuple(f"main_t-{i}" for i in range(2, K + 1))
            + tuple(f"nbr_t-{i}" for i in range(1, K + 1))
            + ("main_t-1_and_nbr_earlier", "nbr_t-1_and_main_earlier", "nbr_t-1_and_nbr_earlier"))


def devrec_dep_features(corpus: Corpus, s, d, t: int, K: int) -> FeatureVector:
    """Membership bits of d in the main and neighbor developer lists of s over
    the previous K distributions, plus three cross-lag conjunctions."""
    if K < 2:
        raise ValueError("dependency features need K >= 2")
    # index i holds lag i; slot 0 is padding so time t itself is never read
    main = [False] + [d in corpus.devs(s, t - i) for i in range(1, K + 1)]
    nbr = [False] + [d in corpus.neighbor_devs(s, t - i) for i in range(1, K + 1)]
    main_earlier = any(main[2:])
    nbr_earlier = any(nbr[2:])
    bits = (main[2:] + nbr[1:]
            + [main[1] and nbr_earlier, nbr[1] and main_earlier, nbr[1] and nbr_earlier])
    return FeatureVector(devrec_dep_names(K), tuple(float(b) for b in bits))


def devrec_features(corpus: Corpus, s, d, t: int, K: int, mode: str = "auto") -> FeatureVector:
    if mode not in URGENCY_MODES:
        raise ValueError(f"unknown feature mode {mode!r}")
    fv = devrec_auto_features(corpus, s, d, t, K)
    if mode == "auto+depn":
        fv = fv + devrec_dep_features(corpus, s, d, t, K)
    return fv


class MinMaxScaler:
    """Per-feature min-max scaling; constant features map to 0."""

    def __init__(self, low=None, high=None):
        self.low = None if low is None else np.asarray(low, dtype=float)
        self.high = None if high is None else np.asarray(high, dtype=float)

    def fit(self, X) -> "MinMaxScaler":
        X = np.atleast_2d(np.asarray(X, dtype=float))
        self.low, self.high = X.min(axis=0), X.max(axis=0)
        return self

    def transform(self, X) -> np.ndarray:
        if self.low is None:
            raise RuntimeError("scaler is not fitted")
        X = np.asarray(X, dtype=float)
        span = self.high - self.low
        safe = np.where(span > 0, span, 1.0)
        return np.where(span > 0, (X - self.low) / safe, 0.0)

    def to_json(self) -> dict:
        return {"low": self.low.tolist(), "high": self.high.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "MinMaxScaler":
        return cls(obj["low"], obj["high"])


def write_design_matrix(path, names: Sequence[str], rows: Iterable[Sequence[float]],
                        keys: Optional[Sequence[Sequence[str]]] = None,
                        key_names: Sequence[str] = ()) -> None:
    """TSV with a header row of (key columns +) feature names."""
    lines = ["\t".join(list(key_names) + list(names))]
    for i, row in enumerate(rows):
        prefix = list(keys[i]) if keys is not None else []
        lines.append("\t".join(prefix + [repr(float(v)) for v in row]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
