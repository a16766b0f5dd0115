"""Comparison systems for developer recommendation: the achievable upper
bound, a majority-vote ranker and a sequence-of-sets sampler."""

from __future__ import annotations

import zlib
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .devrec import Evaluation, candidates, evaluate, evaluation_packages
from .metrics import RankedList
from .tgraph import Corpus

P_CORR_SWEEP = tuple(round(0.1 * i, 1) for i in range(1, 10))


def upper_bound_evaluation(corpus: Corpus, policy: str = "main", K: int = 5,
                           T: Optional[int] = None) -> Evaluation:
    """Per package: RR 1 when some gold developer is a candidate, else 0."""
    T = corpus.T if T is None else T
    rankings = {}
    for s in evaluation_packages(corpus, T):
        hit = sorted(candidates(corpus, s, T, policy, K) & corpus.devs(s, T))
        if hit:
            rankings[s] = hit[:1]
    ev = evaluate(corpus, rankings, T)
    ev.coverage = sum(bool(candidates(corpus, s, T, policy, K))
                      for s in evaluation_packages(corpus, T)) / ev.n_packages
    return ev


def upper_bound(corpus: Corpus, policy: str = "main", K: int = 5, T: Optional[int] = None) -> float:
    return upper_bound_evaluation(corpus, policy, K, T).mrr


def majority(corpus: Corpus, policy: str, K_maj: Optional[int], s, T: int, K: int = 5) -> RankedList:
    """Candidates ranked by how many of the last ``K_maj`` distributions (all
    when None) they worked on package s itself; ties by developer id."""
    cand = candidates(corpus, s, T, policy, K)
    lo = 1 if K_maj is None else max(1, T - K_maj)
    counts = {d: sum(d in corpus.devs(s, tau) for tau in range(lo, T)) for d in cand}
    return RankedList.from_scores(counts)


def run_majority(corpus: Corpus, policy: str = "main", K: int = 5, T: Optional[int] = None,
                 K_maj: Optional[int] = 1) -> tuple:
    T = corpus.T if T is None else T
    rankings = {}
    for s in sorted(corpus.at(T).packages):
        ranked = majority(corpus, policy, K_maj, s, T, K)
        if len(ranked):
            rankings[s] = ranked
    return rankings, evaluate(corpus, rankings, T)


def history_sets(corpus: Corpus, s, T: int, history: Optional[int] = 5) -> list:
    """Nonempty (tau, devs(s,tau)) for tau in the last ``history``
    distributions before T (all of them when None), oldest first."""
    lo = 1 if history is None else max(1, T - history)
    return [(tau, corpus.devs(s, tau)) for tau in range(lo, T) if corpus.devs(s, tau)]


def sampler_probabilities(sets: Sequence, T: int, p_corr: float, gamma: float = 0.5) -> dict:
    """Closed-form draw probabilities of the sequence-of-sets sampler."""
    if not sets:
        return {}
    probs: dict = {}
    recent = sets[-1][1]
    for d in recent:
        probs[d] = probs.get(d, 0.0) + p_corr / len(recent)
    weights = np.asarray([gamma ** (T - 1 - tau) for tau, _ in sets])
    weights = weights / weights.sum()
    for w, (_, members) in zip(weights, sets):
        for d in members:
            probs[d] = probs.get(d, 0.0) + (1 - p_corr) * w / len(members)
    return probs


def seq_of_sets(corpus: Corpus, s, T: int, p_corr: float, runs: int = 20, seed: int = 0,
                gamma: float = 0.5, history: Optional[int] = 5) -> RankedList:
    """Monte-Carlo ranking of developers from the package's past sets.

    Each run draws one developer: with probability ``p_corr`` uniformly from
    the most recent nonempty set, otherwise from a set picked with weight
    gamma**age (age 0 = distribution T-1) and then uniformly within it.
    Developers are ranked by draw count; everyone in the history appears,
    ties broken by id.
    """
    sets = history_sets(corpus, s, T, history)
    if not sets:
        return RankedList()
    rng = np.random.default_rng([seed, zlib.crc32(str(s).encode())])
    recent = sorted(sets[-1][1])
    members = [sorted(m) for _, m in sets]
    weights = np.asarray([gamma ** (T - 1 - tau) for tau, _ in sets])
    weights = weights / weights.sum()
    counts = {d: 0 for m in members for d in m}
    repeat = rng.random(runs) < p_corr
    picks = rng.choice(len(sets), size=runs, p=weights)
    u = rng.random(runs)
    for r in range(runs):
        pool = recent if repeat[r] else members[picks[r]]
        counts[pool[min(int(u[r] * len(pool)), len(pool) - 1)]] += 1
    return RankedList.from_scores(counts)


@dataclass
class SweepResult:
    best_p: float
    evaluation: Evaluation
    rankings: dict
    table: dict          # p_corr -> MRR


def run_seq_of_sets(corpus: Corpus, T: Optional[int] = None, runs: int = 20, seed: int = 0,
                    gamma: float = 0.5, history: Optional[int] = 5,
                    p_grid: Sequence[float] = P_CORR_SWEEP) -> SweepResult:
    """Sweep ``p_corr`` and keep the value with the highest MRR at T."""
    T = corpus.T if T is None else T
    best = None
    table = {}
    for p in p_grid:
        rankings = {}
        for s in sorted(corpus.at(T).packages):
            ranked = seq_of_sets(corpus, s, T, p, runs, seed, gamma, history)
            if len(ranked):
                rankings[s] = ranked
        ev = evaluate(corpus, rankings, T)
        table[p] = ev.mrr
        if best is None or ev.mrr > best.evaluation.mrr:
            best = SweepResult(p, ev, rankings, table)
    return best
