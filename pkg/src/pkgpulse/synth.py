"""Synthetic evolving package ecosystems for tests and demos.

The dependency graph grows by preferential attachment (a new package depends
on existing ones with probability proportional to in-degree + 1). Developer
teams churn with a per-release retention probability, and replacements are
hired from neighboring packages with probability ``neighbor_hire``. Bug
counts are Poisson with a per-package base rate plus ``coupling`` times the
largest neighbor bug count of the previous release.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import asdict, dataclass

import numpy as np

from .corpus import BugRecord, ChangeEvent
from .tgraph import Corpus, DistributionId, Snapshot

_URGENCY = ("low", "medium", "high", "critical")
_URGENCY_P = (0.3, 0.5, 0.15, 0.05)


@dataclass
class SynthConfig:
    seed: int = 0
    T: int = 12
    n_packages: int = 200
    n_devs: int = 60
    coupling: float = 0.5
    retention: float = 0.8
    neighbor_hire: float = 0.5
    growth: float = 0.25
    deps_per_package: int = 2
    bug_shape: float = 0.8
    bug_scale: float = 2.5
    autoregressive: bool = False

    def validate(self) -> None:
        if self.T < 2:
            raise ValueError("T must be >= 2")
        if self.n_packages < 2 or self.n_devs < 1:
            raise ValueError("need at least 2 packages and 1 developer")
        if not 0 <= self.growth < 1:
            raise ValueError("growth must be in [0, 1)")


def release_date(t: int) -> dt.date:
    year = 2010 + (t - 1) // 2
    return dt.date(year, 4 if t % 2 else 10, 22)


def _arrivals(cfg: SynthConfig) -> list:
    n0 = max(cfg.deps_per_package + 1, round(cfg.n_packages * (1 - cfg.growth)))
    n0 = min(n0, cfg.n_packages)
    late = cfg.n_packages - n0
    out = [1] * n0
    for k in range(late):
        out.append(2 + k * (cfg.T - 1) // late)
    return out


def synth_corpus(cfg: SynthConfig = None, **overrides) -> Corpus:
    """Generate a :class:`Corpus`; identical configs give identical corpora."""
    cfg = SynthConfig(**{**(asdict(cfg) if cfg else {}), **overrides})
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    n, T = cfg.n_packages, cfg.T
    pkgs = [f"pkg{i:04d}" for i in range(n)]
    devs = [f"dev{j:03d}@example.org" for j in range(cfg.n_devs)]
    dists = [DistributionId(t, f"r{t:02d}", release_date(t)) for t in range(1, T + 1)]
    arrive = _arrivals(cfg)

    indeg = np.zeros(n)
    edges = []            # (dependent, dependee, first t)
    for i in range(1, n):
        m = min(cfg.deps_per_package, i)
        w = indeg[:i] + 1.0
        for j in rng.choice(i, size=m, replace=False, p=w / w.sum()):
            edges.append((i, int(j), max(arrive[i], arrive[j])))
            indeg[j] += 1

    base_size = rng.lognormal(13.0, 1.2, size=n)
    rate = rng.gamma(cfg.bug_shape, cfg.bug_scale, size=n)
    fixed_bugs = rng.integers(1, 6, size=n)

    bugs = np.zeros((T + 1, n), dtype=np.int64)
    teams = [dict() for _ in range(T + 1)]
    snapshots, events, bug_records = [], [], []
    bug_id = 100000
    size = base_size.copy()
    for t in range(1, T + 1):
        present = [i for i in range(n) if arrive[i] <= t]
        live = [(a, b) for a, b, first in edges if first <= t]
        nbrs = {i: set() for i in present}
        for a, b in live:
            nbrs[a].add(b)
            nbrs[b].add(a)
        size = size * np.exp(rng.normal(0.03, 0.08, size=n))
        for i in present:
            if cfg.autoregressive:
                bugs[t, i] = fixed_bugs[i]
            else:
                nb = max((bugs[t - 1, j] for j in nbrs[i]), default=0)
                bugs[t, i] = rng.poisson(rate[i] + cfg.coupling * nb)
        for i in present:
            prev = teams[t - 1].get(i, [])
            team = [d for d in prev if rng.random() < cfg.retention]
            hires = (1 if rng.random() < 0.75 else 2) if not prev else int(not team) + int(rng.random() < 0.1)
            pool = sorted({d for j in nbrs[i] for d in teams[t - 1].get(j, [])} - set(team))
            for _ in range(hires):
                if pool and rng.random() < cfg.neighbor_hire:
                    d = pool[int(rng.integers(len(pool)))]
                    pool.remove(d)
                else:
                    d = int(rng.integers(cfg.n_devs))
                if d not in team and len(team) < 3:
                    team.append(d)
            teams[t][i] = team
        start = dt.datetime.combine(release_date(t), dt.time(), tzinfo=dt.timezone.utc)
        pkg_bugs = {}
        for i in present:
            ids = []
            for _ in range(bugs[t, i]):
                bug_id += 1
                ids.append(bug_id)
                created = start + dt.timedelta(days=float(rng.uniform(0, 180)))
                bug_records.append(BugRecord(bug_id, pkgs[i], created, dists[t - 1]))
            pkg_bugs[pkgs[i]] = frozenset(ids)
        prev_ids = {s: sorted(v) for s, v in (snapshots[-1].bugs.items() if snapshots else [])}
        for i in present:
            for k, d in enumerate(teams[t][i]):
                for e in range(1 + int(rng.poisson(0.5))):
                    closable = prev_ids.get(pkgs[i], [])
                    n_close = min(len(closable), int(rng.poisson(1.0)))
                    closed = rng.choice(closable, size=n_close, replace=False) if n_close else []
                    events.append(ChangeEvent(
                        source_name=pkgs[i], version=f"{t}.{k}.{e}", target_distribution=dists[t - 1].name,
                        urgency=str(rng.choice(_URGENCY, p=_URGENCY_P)), developer_id=devs[d],
                        developer_name=f"Developer {d}",
                        timestamp=start - dt.timedelta(days=float(rng.uniform(1, 150))),
                        bugs_closed=frozenset(int(x) for x in closed), distribution=t))
        snapshots.append(Snapshot(
            distribution=dists[t - 1],
            packages=frozenset(pkgs[i] for i in present),
            dep_edges=frozenset((pkgs[a], pkgs[b]) for a, b in live),
            dev_edges=frozenset((pkgs[i], devs[d]) for i in present for d in teams[t][i]),
            bugs=pkg_bugs,
            sizes={pkgs[i]: int(size[i]) for i in present},
            binaries={pkgs[i]: frozenset([pkgs[i]]) for i in present}))
    events.sort(key=ChangeEvent.sort_key)
    return Corpus(tuple(snapshots), tuple(events), tuple(bug_records))


def neighbor_bug_correlation(corpus: Corpus, which: str = "all") -> float:
    """Pearson correlation over (s, t >= 2) between |bugs(s,t)| and the largest
    |bugs(s',t-1)| among the neighbors s' of s at t (``in``, ``out`` or
    ``all``). Packages without such neighbors are left out."""
    xs, ys = [], []
    for t in range(2, corpus.T + 1):
        snap = corpus.at(t)
        for s in snap.packages:
            if which == "in":
                nb = snap.in_neighbors(s)
            elif which == "out":
                nb = snap.out_neighbors(s)
            else:
                nb = snap.neighbors(s)
            if not nb:
                continue
            xs.append(max(corpus.bug_count(x, t - 1) for x in nb))
            ys.append(snap.bug_count(s))
    if len(xs) < 2 or np.std(xs) == 0 or np.std(ys) == 0:
        return 0.0
    return float(np.corrcoef(xs, ys)[0, 1])
