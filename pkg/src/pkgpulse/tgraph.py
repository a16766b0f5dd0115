"""Per-distribution heterogeneous package/developer graphs.

A :class:`Snapshot` is one release: source packages, ``depends`` edges between
them (dependent -> dependee), ``contributed by`` edges (package -> developer),
package sizes and the bug ids attached to each package. A :class:`Corpus` is
the ordered sequence of snapshots plus the changelog events they were built
from.
"""

from __future__ import annotations

import datetime as dt
from collections import defaultdict
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import TYPE_CHECKING, Iterable, Mapping, NamedTuple, Optional

if TYPE_CHECKING:
    from .corpus import BugRecord, ChangeEvent

URGENCY_LEVELS = ("high", "medium", "low")


class AbsentPackageError(KeyError):
    """Raised when querying a package that is not part of a snapshot."""


@dataclass(frozen=True, order=True)
class DistributionId:
    index: int
    name: str
    release_date: Optional[dt.date] = field(default=None, compare=False)

    def __post_init__(self):
        if self.index < 1:
            raise ValueError(f"distribution index must be >= 1, got {self.index}")
        if not self.name or self.name != self.name.lower():
            raise ValueError(f"distribution name must be nonempty lowercase: {self.name!r}")


_EMPTY: frozenset = frozenset()


@dataclass(frozen=True, eq=False)
class Snapshot:
    """The graph G_t of one distribution. Immutable once built."""

    distribution: DistributionId
    packages: frozenset
    dep_edges: frozenset
    dev_edges: frozenset
    bugs: Mapping[str, frozenset] = field(default_factory=dict)
    sizes: Mapping[str, int] = field(default_factory=dict)
    binaries: Mapping[str, frozenset] = field(default_factory=dict)
    _out: dict = field(init=False, repr=False)
    _in: dict = field(init=False, repr=False)
    _devs: dict = field(init=False, repr=False)

    def __post_init__(self):
        set_ = lambda name, value: object.__setattr__(self, name, value)  # noqa: E731
        set_("packages", frozenset(self.packages))
        set_("dep_edges", frozenset(self.dep_edges))
        set_("dev_edges", frozenset(self.dev_edges))
        for s, s2 in self.dep_edges:
            if s == s2:
                raise ValueError(f"self-loop dependency on {s!r}")
            if s not in self.packages or s2 not in self.packages:
                raise ValueError(f"dependency edge {s!r}->{s2!r} names an absent package")
        out, inn, devs = defaultdict(set), defaultdict(set), defaultdict(set)
        for s, s2 in self.dep_edges:
            out[s].add(s2)
            inn[s2].add(s)
        for s, d in self.dev_edges:
            if s not in self.packages:
                raise ValueError(f"developer edge for absent package {s!r}")
            devs[s].add(d)
        set_("_out", {k: frozenset(v) for k, v in out.items()})
        set_("_in", {k: frozenset(v) for k, v in inn.items()})
        set_("_devs", {k: frozenset(v) for k, v in devs.items()})
        set_("bugs", MappingProxyType({s: frozenset(b) for s, b in self.bugs.items() if b}))
        set_("sizes", MappingProxyType(dict(self.sizes)))
        set_("binaries", MappingProxyType({s: frozenset(b) for s, b in self.binaries.items()}))

    def __eq__(self, other):
        if not isinstance(other, Snapshot):
            return NotImplemented
        return (self.distribution == other.distribution
                and self.distribution.name == other.distribution.name
                and self.packages == other.packages
                and self.dep_edges == other.dep_edges
                and self.dev_edges == other.dev_edges
                and dict(self.bugs) == dict(other.bugs)
                and dict(self.sizes) == dict(other.sizes)
                and dict(self.binaries) == dict(other.binaries))

    __hash__ = None

    @property
    def t(self) -> int:
        return self.distribution.index

    def __contains__(self, s) -> bool:
        return s in self.packages

    def _check(self, s):
        if s not in self.packages:
            raise AbsentPackageError(f"{s!r} not present in {self.distribution.name}")

    def out_neighbors(self, s) -> frozenset:
        """Dependees of ``s``."""
        self._check(s)
        return self._out.get(s, _EMPTY)

    def in_neighbors(self, s) -> frozenset:
        """Dependents of ``s``."""
        self._check(s)
        return self._in.get(s, _EMPTY)

    def neighbors(self, s) -> frozenset:
        self._check(s)
        return self._out.get(s, _EMPTY) | self._in.get(s, _EMPTY)

    def devs(self, s) -> frozenset:
        """devs(s,t); empty for packages that are absent or have no events."""
        return self._devs.get(s, _EMPTY)

    def bug_count(self, s) -> int:
        return len(self.bugs.get(s, _EMPTY))

    @property
    def bug_counts(self) -> dict:
        return {s: len(self.bugs.get(s, _EMPTY)) for s in self.packages}

    def size(self, s) -> Optional[int]:
        return self.sizes.get(s)


class DevActivity(NamedTuple):
    high: int = 0
    medium: int = 0
    low: int = 0
    bugs_closed: int = 0


@dataclass(frozen=True, eq=False)
class Corpus:
    """Snapshots ordered by distribution index, plus the changelog events and
    bug records they share."""

    snapshots: tuple
    events: tuple = ()
    bug_records: tuple = ()
    _activity: dict = field(init=False, repr=False)
    _cache: dict = field(init=False, repr=False)

    def __post_init__(self):
        snaps = tuple(sorted(self.snapshots, key=lambda s: s.t))
        for i, snap in enumerate(snaps, start=1):
            if snap.t != i:
                raise ValueError(f"distribution indexes must be 1..T, got {snap.t} at position {i}")
        names = [s.distribution.name for s in snaps]
        if len(set(names)) != len(names):
            raise ValueError("distribution names must be unique")
        object.__setattr__(self, "snapshots", snaps)
        object.__setattr__(self, "events", tuple(self.events))
        object.__setattr__(self, "bug_records", tuple(self.bug_records))
        activity: dict = defaultdict(lambda: defaultdict(lambda: [0, 0, 0, 0]))
        for ev in self.events:
            if ev.distribution is None:
                continue
            row = activity[ev.distribution][ev.developer_id]
            if ev.urgency in URGENCY_LEVELS:
                row[URGENCY_LEVELS.index(ev.urgency)] += 1
            row[3] += len(ev.bugs_closed)
        object.__setattr__(self, "_activity", {
            t: {d: DevActivity(*row) for d, row in per.items()} for t, per in activity.items()})
        object.__setattr__(self, "_cache", {})

    @property
    def T(self) -> int:
        return len(self.snapshots)

    def at(self, t: int) -> Snapshot:
        if not 1 <= t <= self.T:
            raise IndexError(f"distribution index {t} outside 1..{self.T}")
        return self.snapshots[t - 1]

    def index_of(self, name: str) -> int:
        for snap in self.snapshots:
            if snap.distribution.name == name:
                return snap.t
        raise KeyError(f"unknown distribution {name!r}")

    @property
    def distributions(self) -> list:
        return [s.distribution for s in self.snapshots]

    def devs(self, s, t) -> frozenset:
        """devs(s,t), empty when t falls outside 1..T."""
        if not 1 <= t <= self.T:
            return _EMPTY
        return self.snapshots[t - 1].devs(s)

    def bug_count(self, s, t) -> int:
        if not 1 <= t <= self.T:
            return 0
        return self.snapshots[t - 1].bug_count(s)

    def activity(self, d, t) -> DevActivity:
        return self._activity.get(t, {}).get(d, DevActivity())

    def neighbor_devs(self, s, t) -> frozenset:
        """Union of devs(s', t) over the in- and out-neighbors s' of s at t."""
        key = ("ndevs", s, t)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        if not 1 <= t <= self.T or s not in self.snapshots[t - 1]:
            out = _EMPTY
        else:
            snap = self.snapshots[t - 1]
            out = frozenset().union(*(snap.devs(n) for n in snap.neighbors(s)))
        self._cache[key] = out
        return out

    def developers(self) -> frozenset:
        return frozenset(d for snap in self.snapshots for _, d in snap.dev_edges)

    def replace(self, t: int, snapshot: Snapshot) -> "Corpus":
        """Copy of this corpus with snapshot ``t`` swapped out."""
        snaps = list(self.snapshots)
        snaps[t - 1] = snapshot
        return Corpus(tuple(snaps), self.events, self.bug_records)


def lift_dependencies(binary_depends: Iterable[tuple], binary_to_source: Mapping[str, str],
                      report: Optional[dict] = None) -> set:
    """Lift binary-level ``depends`` pairs to deduplicated source-level edges.

    Pairs naming a binary without a known source are dropped and counted in
    ``report["unknown_binary"]``; pairs within one source are dropped silently.
    """
    edges = set()
    dropped = 0
    for b, b2 in binary_depends:
        s, s2 = binary_to_source.get(b), binary_to_source.get(b2)
        if s is None or s2 is None:
            dropped += 1
            continue
        if s != s2:
            edges.add((s, s2))
    if report is not None:
        report["unknown_binary"] = report.get("unknown_binary", 0) + dropped
    return edges


def out_neighbors(snapshot: Snapshot, s) -> frozenset:
    return snapshot.out_neighbors(s)


def in_neighbors(snapshot: Snapshot, s) -> frozenset:
    return snapshot.in_neighbors(s)


def devs_of(snapshot: Snapshot, s) -> frozenset:
    return snapshot.devs(s)


def devs_window(corpus: Corpus, s, from_t: int, to_t: int) -> frozenset:
    """Union of devs(s, tau) for tau in [from_t, to_t]."""
    if from_t > to_t:
        raise ValueError(f"empty window [{from_t}, {to_t}]")
    return frozenset().union(*(corpus.devs(s, tau) for tau in range(from_t, to_t + 1)))
