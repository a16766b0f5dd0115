"""Pairwise developer rankers trained by SGD.

``lr``  scores with sigmoid(x.W + b) and takes a unit-margin hinge on the
        difference of the post-sigmoid scores of a (positive, negative) pair.
``mlp`` scores with W2.tanh(x.W1 + b1) + b2; the pair cost is
        sigmoid(a * (s_neg - s_pos - m)) with a = softplus(alpha) and
        m = softplus(beta), plus an L2 penalty on every learnable parameter.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

KINDS = ("lr", "mlp")


class UntrainedModelError(ValueError):
    """Raised when asked to fit on an empty instance list."""


def sigmoid(z):
    z = np.asarray(z, dtype=float)
    e = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def softplus(z):
    return np.logaddexp(0.0, z)


@dataclass
class RankerParams:
    kind: str
    weights: dict
    l2: float = 0.0
    history: list = field(default_factory=list)

    @property
    def n_features(self) -> int:
        return self.weights["W" if self.kind == "lr" else "W1"].shape[0]

    @property
    def a(self) -> float:
        return float(softplus(self.weights["alpha"]))

    @property
    def b(self) -> float:
        """The margin softplus(beta) of the MLP cost (not a bias)."""
        return float(softplus(self.weights["beta"]))

    def copy(self) -> "RankerParams":
        return RankerParams(self.kind, {k: v.copy() for k, v in self.weights.items()},
                            self.l2, list(self.history))

    def score(self, X):
        return score(self, X)

    def to_json(self) -> dict:
        return {"kind": self.kind, "l2": self.l2, "history": self.history,
                "weights": {k: v.tolist() for k, v in self.weights.items()}}

    @classmethod
    def from_json(cls, obj: dict) -> "RankerParams":
        return cls(obj["kind"], {k: np.asarray(v, dtype=float) for k, v in obj["weights"].items()},
                   float(obj.get("l2", 0.0)), list(obj.get("history", [])))


def init_params(kind: str, n_features: int, hidden: int = 16, seed: int = 0,
                init_scale: float = 0.05, alpha: float = 1.0, beta: float = 0.0,
                l2: float = 1e-4) -> RankerParams:
    """Uniform(-init_scale, init_scale) weights from a seeded generator."""
    rng = np.random.default_rng(seed)
    u = lambda *shape: rng.uniform(-init_scale, init_scale, size=shape)  # noqa: E731
    if kind == "lr":
        return RankerParams("lr", {"W": u(n_features), "b": np.asarray(u(1)[0])}, 0.0)
    if kind == "mlp":
        if hidden < 1:
            raise ValueError("hidden width must be >= 1")
        return RankerParams("mlp", {
            "W1": u(n_features, hidden), "b1": u(hidden), "W2": u(hidden),
            "b2": np.asarray(u(1)[0]), "alpha": np.asarray(float(alpha)),
            "beta": np.asarray(float(beta))}, float(l2))
    raise ValueError(f"unknown model kind {kind!r}")


def _check_dim(params: RankerParams, *xs):
    for x in xs:
        if np.shape(x)[-1] != params.n_features:
            raise ValueError(f"feature dimension {np.shape(x)[-1]} != model dimension {params.n_features}")


def lr_score(params: RankerParams, x):
    _check_dim(params, x)
    w = params.weights
    out = sigmoid(np.asarray(x, dtype=float) @ w["W"] + w["b"])
    return float(out) if out.ndim == 0 else out


def lr_pair_loss(params: RankerParams, x_pos, x_neg) -> float:
    return max(0.0, lr_score(params, x_neg) - lr_score(params, x_pos) + 1.0)


def lr_pair_grad(params: RankerParams, x_pos, x_neg):
    """(loss, gradient dict) for one pair."""
    x_pos = np.asarray(x_pos, dtype=float)
    x_neg = np.asarray(x_neg, dtype=float)
    s_pos, s_neg = lr_score(params, x_pos), lr_score(params, x_neg)
    loss = s_neg - s_pos + 1.0
    if loss <= 0:
        return 0.0, {k: np.zeros_like(v) for k, v in params.weights.items()}
    d_pos, d_neg = s_pos * (1 - s_pos), s_neg * (1 - s_neg)
    return loss, {"W": d_neg * x_neg - d_pos * x_pos, "b": np.asarray(d_neg - d_pos)}


def _mlp_forward(w, x):
    h = np.tanh(x @ w["W1"] + w["b1"])
    return h, h @ w["W2"] + w["b2"]


def mlp_score(params: RankerParams, x):
    _check_dim(params, x)
    _, out = _mlp_forward(params.weights, np.asarray(x, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def l2_penalty(params: RankerParams) -> float:
    return params.l2 * sum(float(np.sum(v * v)) for v in params.weights.values())


def mlp_pair_loss(params: RankerParams, x_pos, x_neg) -> float:
    w = params.weights
    gap = mlp_score(params, x_neg) - mlp_score(params, x_pos) - softplus(w["beta"])
    return float(sigmoid(softplus(w["alpha"]) * gap)) + l2_penalty(params)


def mlp_pair_grad(params: RankerParams, x_pos, x_neg):
    """(loss, gradient dict) for one pair, L2 term included."""
    _check_dim(params, x_pos, x_neg)
    w = params.weights
    x_pos = np.asarray(x_pos, dtype=float)
    x_neg = np.asarray(x_neg, dtype=float)
    h_pos, s_pos = _mlp_forward(w, x_pos)
    h_neg, s_neg = _mlp_forward(w, x_neg)
    scale, margin = softplus(w["alpha"]), softplus(w["beta"])
    gap = s_neg - s_pos - margin
    cost = sigmoid(scale * gap)
    g = cost * (1 - cost)          # d cost / dz
    g_neg, g_pos = g * scale, -g * scale
    back_neg = w["W2"] * (1 - h_neg ** 2)
    back_pos = w["W2"] * (1 - h_pos ** 2)
    grads = {
        "W1": g_neg * np.outer(x_neg, back_neg) + g_pos * np.outer(x_pos, back_pos),
        "b1": g_neg * back_neg + g_pos * back_pos,
        "W2": g_neg * h_neg + g_pos * h_pos,
        "b2": np.asarray(0.0),
        "alpha": np.asarray(g * gap * sigmoid(w["alpha"])),
        "beta": np.asarray(-g * scale * sigmoid(w["beta"])),
    }
    for k, v in w.items():
        grads[k] = grads[k] + 2 * params.l2 * v
    return float(cost) + l2_penalty(params), grads


def score(params: RankerParams, X):
    return lr_score(params, X) if params.kind == "lr" else mlp_score(params, X)


def pair_loss(params: RankerParams, x_pos, x_neg) -> float:
    return lr_pair_loss(params, x_pos, x_neg) if params.kind == "lr" else mlp_pair_loss(params, x_pos, x_neg)


def pair_grad(params: RankerParams, x_pos, x_neg):
    return lr_pair_grad(params, x_pos, x_neg) if params.kind == "lr" else mlp_pair_grad(params, x_pos, x_neg)


def mean_pair_loss(params: RankerParams, pos: np.ndarray, neg: np.ndarray) -> float:
    """Average pair loss over stacked pair matrices (rows aligned)."""
    s_pos, s_neg = score(params, pos), score(params, neg)
    if params.kind == "lr":
        return float(np.mean(np.maximum(0.0, s_neg - s_pos + 1.0)))
    w = params.weights
    cost = sigmoid(softplus(w["alpha"]) * (s_neg - s_pos - softplus(w["beta"])))
    return float(np.mean(cost)) + l2_penalty(params)


def _pairs(instances: Sequence):
    """Stacked (pos, neg, owner) arrays over every pair of every instance."""
    pos, neg, owner = [], [], []
    for k, inst in enumerate(instances):
        P = np.atleast_2d(np.asarray(inst.positives, dtype=float))
        N = np.atleast_2d(np.asarray(inst.negatives, dtype=float))
        if P.shape[0] == 0 or N.shape[0] == 0 or P.size == 0 or N.size == 0:
            raise ValueError(f"instance {k} needs nonempty positives and negatives")
        pos.append(np.repeat(P, N.shape[0], axis=0))
        neg.append(np.tile(N, (P.shape[0], 1)))
        owner.append(np.full(P.shape[0] * N.shape[0], k))
    return np.vstack(pos), np.vstack(neg), np.concatenate(owner)


def sgd_fit(model_kind: str, instances: Sequence, epochs: int = 10, lr: float = 0.005,
            seed: int = 0, hidden: int = 16, l2: float = 1e-4, batch: str = "pair",
            init_scale: float = 0.05, alpha: float = 1.0, beta: float = 0.0) -> RankerParams:
    """Fit a pairwise ranker with plain SGD.

    ``instances`` are objects with ``positives`` and ``negatives`` feature
    matrices. With ``batch="pair"`` every (positive, negative) pair is one
    step and pairs are shuffled each epoch; with ``batch="instance"`` one
    step averages the gradients of all pairs of one instance. The mean pair
    loss after each epoch is recorded in ``params.history``.
    """
    if not instances:
        raise UntrainedModelError("no training instances")
    if batch not in ("pair", "instance"):
        raise ValueError(f"unknown batch mode {batch!r}")
    pos, neg, owner = _pairs(instances)
    rng = np.random.default_rng(seed)
    params = init_params(model_kind, pos.shape[1], hidden=hidden, seed=int(rng.integers(2**31)),
                         init_scale=init_scale, alpha=alpha, beta=beta, l2=l2)
    w = params.weights
    groups = [np.flatnonzero(owner == k) for k in range(len(instances))] if batch == "instance" else None
    for _ in range(epochs):
        if batch == "pair":
            for i in rng.permutation(pos.shape[0]):
                _, grads = pair_grad(params, pos[i], neg[i])
                for k, g in grads.items():
                    w[k] = w[k] - lr * g
        else:
            for k_inst in rng.permutation(len(instances)):
                total = None
                for i in groups[k_inst]:
                    _, grads = pair_grad(params, pos[i], neg[i])
                    total = grads if total is None else {k: total[k] + grads[k] for k in total}
                n = len(groups[k_inst])
                for k, g in total.items():
                    w[k] = w[k] - lr * g / n
        params.history.append(mean_pair_loss(params, pos, neg))
    return params
