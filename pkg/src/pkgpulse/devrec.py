"""Developer recommendation: candidate policies, training instances over the
last K horizons, pairwise ranker training and test-time ranking."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from .featurize import MinMaxScaler, devrec_features
from .learners.rankers import RankerParams, score, sgd_fit
from .metrics import RankedList, mrr
from .tgraph import Corpus

log = logging.getLogger(__name__)

POLICIES = ("main", "main+depn")
POLICY_FEATURES = {"main": "auto", "main+depn": "auto+depn"}
FEATURE_MODEL = {"auto": "lr", "auto+depn": "mlp"}


def _check_policy(policy: str) -> None:
    if policy not in POLICIES:
        raise ValueError(f"unknown candidate policy {policy!r}")


def candidates(corpus: Corpus, s, t: int, policy: str = "main", K: int = 5) -> frozenset:
    """Candidate developers for (s, t) drawn from distributions [t-K, t-1].

    ``main`` uses the developers of s itself; ``main+depn`` adds developers of
    the in- and out-neighbors of s at each of those distributions.
    """
    _check_policy(policy)
    if t < 2:
        raise ValueError("candidates need t >= 2")
    out: set = set()
    for tau in range(max(1, t - K), t):
        out |= corpus.devs(s, tau)
        if policy == "main+depn":
            out |= corpus.neighbor_devs(s, tau)
    return frozenset(out)


@dataclass
class Instance:
    package: str
    horizon: int
    positives: np.ndarray
    negatives: np.ndarray
    positive_ids: tuple = ()
    negative_ids: tuple = ()


def _feature_rows(corpus, s, devs, t, K, mode) -> np.ndarray:
    return np.asarray([devrec_features(corpus, s, d, t, K, mode).values for d in devs], dtype=float)


def build_instances(corpus: Corpus, policy: str = "main", K: int = 5, T: Optional[int] = None,
                    features: Optional[str] = None) -> list:
    """Training instances for horizons h = T-K .. T-1.

    At each horizon the candidates are split into developers who stay on the
    package at h (positives) and those who do not (negatives); only packages
    with both kinds produce an instance.
    """
    _check_policy(policy)
    T = corpus.T if T is None else T
    if T < K + 1 or T > corpus.T:
        raise ValueError(f"T={T} needs at least K+1={K + 1} distributions")
    mode = features or POLICY_FEATURES[policy]
    out = []
    for h in range(max(2, T - K), T):
        for s in sorted(corpus.at(h).packages):
            cand = candidates(corpus, s, h, policy, K)
            gold = corpus.devs(s, h)
            pos, neg = sorted(cand & gold), sorted(cand - gold)
            if pos and neg:
                out.append(Instance(s, h, _feature_rows(corpus, s, pos, h, K, mode),
                                    _feature_rows(corpus, s, neg, h, K, mode), tuple(pos), tuple(neg)))
    return out


@dataclass
class DevRecModel:
    policy: str
    features: str
    K: int
    params: RankerParams
    scaler: MinMaxScaler
    config: dict = field(default_factory=dict)

    @property
    def kind(self) -> str:
        return self.params.kind

    def score(self, X) -> np.ndarray:
        return np.atleast_1d(score(self.params, self.scaler.transform(X)))

    def to_json(self) -> dict:
        return {"policy": self.policy, "features": self.features, "K": self.K,
                "params": self.params.to_json(), "scaler": self.scaler.to_json(),
                "config": self.config}

    @classmethod
    def from_json(cls, obj: dict) -> "DevRecModel":
        return cls(obj["policy"], obj["features"], int(obj["K"]), RankerParams.from_json(obj["params"]),
                   MinMaxScaler.from_json(obj["scaler"]), dict(obj.get("config", {})))


def train(corpus: Corpus, policy: str = "main", K: int = 5, T: Optional[int] = None,
          model: Optional[str] = None, features: Optional[str] = None, epochs: int = 10,
          lr: float = 0.005, seed: int = 0, hidden: int = 16, l2: float = 1e-4,
          batch: str = "pair", alpha: float = 1.0, beta: float = 0.0) -> DevRecModel:
    """Fit a ranker on instances from horizons before T.

    Defaults pair the ``main`` policy with autoregressive features and LR, and
    ``main+depn`` with autoregressive + dependency features and the MLP.
    Features are min-max scaled with statistics from the training rows only.
    """
    T = corpus.T if T is None else T
    features = features or POLICY_FEATURES[policy]
    model = model or FEATURE_MODEL[features]
    instances = build_instances(corpus, policy, K, T, features)
    if instances:
        scaler = MinMaxScaler().fit(np.vstack([np.vstack([i.positives, i.negatives]) for i in instances]))
    else:
        scaler = MinMaxScaler()
    scaled = [Instance(i.package, i.horizon, scaler.transform(i.positives), scaler.transform(i.negatives),
                       i.positive_ids, i.negative_ids) for i in instances]
    params = sgd_fit(model, scaled, epochs=epochs, lr=lr, seed=seed, hidden=hidden, l2=l2,
                     batch=batch, alpha=alpha, beta=beta)
    log.info("trained %s on %d instances, final loss %.5f", model, len(instances), params.history[-1])
    config = {"model": model, "epochs": epochs, "lr": lr, "seed": seed, "hidden": hidden, "l2": l2,
              "batch": batch, "alpha": alpha, "beta": beta, "T": T, "n_instances": len(instances)}
    return DevRecModel(policy, features, K, params, scaler, config)


@dataclass
class Recommendation:
    package: str
    ranked: RankedList


def recommend(corpus: Corpus, model: DevRecModel, T: Optional[int] = None) -> tuple:
    """Rank the candidates of every package present at T.

    Returns ``(recommendations, n_skipped)``; packages without candidates are
    skipped. Gold developers at T are never read.
    """
    T = corpus.T if T is None else T
    recs, skipped = [], 0
    for s in sorted(corpus.at(T).packages):
        cand = sorted(candidates(corpus, s, T, model.policy, model.K))
        if not cand:
            skipped += 1
            continue
        scores = model.score(_feature_rows(corpus, s, cand, T, model.K, model.features))
        recs.append(Recommendation(s, RankedList.from_scores(zip(cand, scores.tolist()))))
    return recs, skipped


@dataclass
class Evaluation:
    mrr: float
    reciprocal_ranks: dict
    coverage: float
    n_packages: int

    def to_json(self) -> dict:
        return {"mrr": self.mrr, "coverage": self.coverage, "n_packages": self.n_packages,
                "reciprocal_ranks": dict(sorted(self.reciprocal_ranks.items()))}


def evaluation_packages(corpus: Corpus, T: int) -> list:
    """Packages present at T with at least one gold developer."""
    snap = corpus.at(T)
    return sorted(s for s in snap.packages if snap.devs(s))


def evaluate(corpus: Corpus, rankings: Mapping[str, Sequence], T: Optional[int] = None) -> Evaluation:
    """MRR at T over every package with gold developers.

    ``rankings`` maps package -> ranked developer ids (a RankedList works);
    packages without a ranking count as misses.
    """
    T = corpus.T if T is None else T
    pkgs = evaluation_packages(corpus, T)
    if not pkgs:
        raise ValueError(f"no package has gold developers at t={T}")
    rr, positions, covered = {}, [], 0
    for s in pkgs:
        ranked = list(rankings.get(s, ()))
        covered += bool(ranked)
        gold = corpus.devs(s, T)
        pos = next((i for i, d in enumerate(ranked, start=1) if d in gold), None)
        positions.append(pos)
        rr[s] = 0.0 if pos is None else 1.0 / pos
    return Evaluation(mrr(positions), rr, covered / len(pkgs), len(pkgs))


def run_devrec(corpus: Corpus, T: Union[int, str, None] = None, policy: str = "main", K: int = 5,
               **train_kwargs) -> tuple:
    """Train, recommend and evaluate at T; returns (model, recommendations, evaluation)."""
    if isinstance(T, str):
        T = corpus.index_of(T)
    T = corpus.T if T is None else T
    model = train(corpus, policy, K, T, **train_kwargs)
    recs, _ = recommend(corpus, model, T)
    ev = evaluate(corpus, {r.package: r.ranked for r in recs}, T)
    return model, recs, ev
