import datetime as dt
import itertools

from pkgpulse.corpus import ChangeEvent
from pkgpulse.tgraph import Corpus, DistributionId, Snapshot


def make_snapshot(t, packages, edges=(), devs=None, bugs=None, sizes=None, name=None, first_bug=None):
    devs = devs or {}
    bugs = bugs or {}
    counter = itertools.count(first_bug if first_bug is not None else t * 10000)
    return Snapshot(
        distribution=DistributionId(t, name or f"d{t:02d}", dt.date(2000 + t, 1, 1)),
        packages=frozenset(packages),
        dep_edges=frozenset(edges),
        dev_edges=frozenset((s, d) for s, ds in devs.items() for d in ds),
        bugs={s: frozenset(next(counter) for _ in range(n)) for s, n in bugs.items()},
        sizes=dict(sizes or {s: 1000 for s in packages}))


def make_corpus(steps, events=()):
    """``steps`` is a list of dicts with keys packages/edges/devs/bugs/sizes."""
    return Corpus(tuple(make_snapshot(t, **step) for t, step in enumerate(steps, start=1)), tuple(events))


def event(s, d, t, urgency="medium", closed=()):
    return ChangeEvent(source_name=s, version=f"{t}", target_distribution=f"d{t:02d}", urgency=urgency,
                       developer_id=d, timestamp=dt.datetime(2000 + t, 1, 1, tzinfo=dt.timezone.utc),
                       bugs_closed=frozenset(closed), distribution=t)
