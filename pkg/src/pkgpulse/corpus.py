"""Parse raw repository artifacts into a normalized, versioned dataset.

Raw layout::

    raw/releases.tsv               distro, index, release_date
    raw/<distro>/Sources           source stanzas (Package, Binary, ...)
    raw/<distro>/Packages          binary stanzas (Package, Source, Size, Depends, ...)
    raw/changelogs/*.changelog     Debian-format changelogs
    raw/bugs.tsv                   bug_id, source_name, created_at (ISO-8601)

Normalized layout (byte-stable: sorted rows, sorted keys)::

    normalized/manifest.json
    normalized/releases.tsv
    normalized/events.jsonl
    normalized/parse_errors.jsonl
    normalized/<distro>/packages.jsonl
    normalized/<distro>/edges.tsv
    normalized/<distro>/devs.tsv
    normalized/<distro>/bugs.tsv
"""

from __future__ import annotations

import bisect
import dataclasses
import datetime as dt
import email.utils
import hashlib
import json
import logging
import re
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple, Optional, Sequence, Union

from .tgraph import Corpus, DistributionId, Snapshot, lift_dependencies

log = logging.getLogger(__name__)

SIX_MONTHS = dt.timedelta(days=183)
URGENCIES = ("low", "medium", "high", "other")
FORMAT_VERSION = 1


class ParseIssue(NamedTuple):
    source: str
    line: int
    kind: str
    message: str


@dataclass(frozen=True)
class PackageRecord:
    """One source package as listed in a distribution's Sources index."""

    source_name: str
    binaries: frozenset = frozenset()
    size: Optional[int] = None
    version: Optional[str] = None


@dataclass(frozen=True)
class BinaryRecord:
    name: str
    source: str
    size: int = 0
    depends: tuple = ()
    provides: tuple = ()


@dataclass(frozen=True)
class ChangeEvent:
    source_name: str
    version: str
    target_distribution: str
    urgency: str
    developer_id: str
    timestamp: Optional[dt.datetime]
    bugs_closed: frozenset = frozenset()
    developer_name: str = ""
    distribution: Optional[int] = None
    flags: frozenset = frozenset()

    def to_json(self) -> dict:
        return {
            "source": self.source_name,
            "version": self.version,
            "target_distribution": self.target_distribution,
            "urgency": self.urgency,
            "developer": self.developer_id,
            "developer_name": self.developer_name,
            "timestamp": self.timestamp.isoformat() if self.timestamp else None,
            "bugs_closed": sorted(self.bugs_closed),
            "distribution": self.distribution,
            "flags": sorted(self.flags),
        }

    @classmethod
    def from_json(cls, row: dict) -> "ChangeEvent":
        ts = row.get("timestamp")
        return cls(
            source_name=row["source"], version=row["version"],
            target_distribution=row["target_distribution"], urgency=row["urgency"],
            developer_id=row["developer"], developer_name=row.get("developer_name", ""),
            timestamp=dt.datetime.fromisoformat(ts) if ts else None,
            bugs_closed=frozenset(row.get("bugs_closed", ())),
            distribution=row.get("distribution"), flags=frozenset(row.get("flags", ())))

    def sort_key(self):
        return (self.source_name, self.timestamp.isoformat() if self.timestamp else "",
                self.version, self.developer_id, self.target_distribution,
                self.urgency, tuple(sorted(self.bugs_closed)))


@dataclass(frozen=True)
class BugRecord:
    bug_id: int
    source_name: str
    created_at: dt.datetime
    assigned_distribution: Optional[DistributionId] = None


# --------------------------------------------------------------------------
# deb822 stanzas

def _to_text(data: Union[str, bytes]) -> str:
    if isinstance(data, bytes):
        data = data.decode("utf-8", errors="replace")
    return data.replace("\r\n", "\n").replace("\r", "\n")


def iter_stanzas(text: Union[str, bytes], origin: str = "<input>",
                 errors: Optional[list] = None):
    """Yield ``(first_line, fields)`` for each blank-line separated stanza.

    Keys are lowercased; continuation lines are folded into the previous
    field, joined with a single space.
    """
    fields: dict = {}
    first = 0
    key = None
    for lineno, line in enumerate(_to_text(text).split("\n"), start=1):
        if not line.strip():
            if fields:
                yield first, fields
            fields, key = {}, None
            continue
        if line.startswith("#"):
            continue
        if line[0] in " \t":
            if key is None:
                if errors is not None:
                    errors.append(ParseIssue(origin, lineno, "continuation", "continuation without field"))
                continue
            extra = line.strip()
            if extra and extra != ".":
                fields[key] = f"{fields[key]} {extra}".strip()
            continue
        name, sep, value = line.partition(":")
        if not sep or not name.strip():
            if errors is not None:
                errors.append(ParseIssue(origin, lineno, "field", f"not a field line: {line[:60]!r}"))
            continue
        if not fields:
            first = lineno
        key = name.strip().lower()
        fields[key] = value.strip()
    if fields:
        yield first, fields


def _split_list(value: str) -> list:
    return [v.strip() for v in value.split(",") if v.strip()]


def _parse_size(value, origin, lineno, errors) -> Optional[int]:
    if value is None:
        return None
    try:
        size = int(value)
        if size < 0:
            raise ValueError
        return size
    except ValueError:
        if errors is not None:
            errors.append(ParseIssue(origin, lineno, "size", f"bad size {value!r}"))
        return None


def parse_sources_index(stanza_text: Union[str, bytes], origin: str = "Sources",
                        errors: Optional[list] = None) -> list:
    """Parse a Sources index into one :class:`PackageRecord` per stanza.

    Stanzas without a ``Package`` key are skipped and reported in ``errors``.
    """
    out = []
    for lineno, fields in iter_stanzas(stanza_text, origin, errors):
        name = fields.get("package", "").strip()
        if not name:
            if errors is not None:
                errors.append(ParseIssue(origin, lineno, "stanza", "stanza without Package"))
            continue
        out.append(PackageRecord(
            source_name=name,
            binaries=frozenset(_split_list(fields.get("binary", ""))),
            size=_parse_size(fields.get("size"), origin, lineno, errors),
            version=fields.get("version")))
    return out


_DEP_NAME = re.compile(r"^([A-Za-z0-9][A-Za-z0-9+.\-]*)")


def parse_relation(value: str) -> list:
    """Package names from a Depends-style field.

    Version constraints, architecture qualifiers and restriction lists are
    dropped; for ``a | b`` alternatives only the first is kept.
    """
    names = []
    for group in _split_list(value):
        first = group.split("|")[0].strip()
        m = _DEP_NAME.match(first)
        if m:
            names.append(m.group(1))
    return names


def parse_packages_index(stanza_text: Union[str, bytes], origin: str = "Packages",
                         errors: Optional[list] = None) -> list:
    """Parse a binary Packages index into :class:`BinaryRecord` objects."""
    out = []
    for lineno, fields in iter_stanzas(stanza_text, origin, errors):
        name = fields.get("package", "").strip()
        if not name:
            if errors is not None:
                errors.append(ParseIssue(origin, lineno, "stanza", "stanza without Package"))
            continue
        source = fields.get("source", "").split("(")[0].strip() or name
        out.append(BinaryRecord(
            name=name, source=source,
            size=_parse_size(fields.get("size"), origin, lineno, errors) or 0,
            depends=tuple(parse_relation(fields.get("depends", ""))),
            provides=tuple(parse_relation(fields.get("provides", "")))))
    return out


def write_stanzas(stanzas: Iterable[dict], fold: int = 0) -> str:
    """Serialize dicts back to deb822 text; ``fold`` > 0 wraps comma lists
    onto continuation lines of at most that many items."""
    chunks = []
    for fields in stanzas:
        lines = []
        for key, value in fields.items():
            items = _split_list(value) if fold and "," in value else None
            if items and len(items) > fold:
                lines.append(f"{key}: " + ", ".join(items[:fold]) + ",")
                rest = items[fold:]
                while rest:
                    part, rest = rest[:fold], rest[fold:]
                    lines.append(" " + ", ".join(part) + ("," if rest else ""))
            else:
                lines.append(f"{key}: {value}")
        chunks.append("\n".join(lines))
    return "\n\n".join(chunks) + ("\n" if chunks else "")


# --------------------------------------------------------------------------
# changelogs

_HEADER = re.compile(
    r"^(?P<source>[A-Za-z0-9][A-Za-z0-9+.\-]*)\s+\((?P<version>[^()\s]+)\)"
    r"\s+(?P<dists>[^;()]+?)\s*;(?P<opts>.*)$")
_TRAILER_START = re.compile(r"^ ?-- ")
_TRAILER = re.compile(r"^ ?--\s*(?P<name>[^<]*?)\s*<(?P<email>[^<>]*)>\s*(?P<date>.*?)\s*$")
_TRAILER_NOMAIL = re.compile(r"^ ?--\s*(?P<name>.*?)\s{2,}(?P<date>\S.*?)\s*$")
_URGENCY = re.compile(r"urgency\s*=\s*([A-Za-z]+)", re.IGNORECASE)
_LP_BLOCK = re.compile(r"LP:\s*(#\d+(?:[\s,]+#\d+)*)", re.IGNORECASE)


def parse_date(value: str) -> Optional[dt.datetime]:
    """RFC-2822 date to an aware UTC datetime, or None if unparseable."""
    try:
        stamp = email.utils.parsedate_to_datetime(value.strip())
    except (TypeError, ValueError, IndexError, OverflowError):
        return None
    if stamp is None:
        return None
    if stamp.tzinfo is None:
        stamp = stamp.replace(tzinfo=dt.timezone.utc)
    try:
        return stamp.astimezone(dt.timezone.utc)
    except (OverflowError, ValueError):
        return None


def normalize_urgency(value: Optional[str]) -> str:
    value = (value or "").lower()
    return value if value in ("low", "medium", "high") else "other"


def developer_identity(name: str, mail: Optional[str]) -> str:
    mail = (mail or "").strip().lower()
    return mail if mail else name.strip().lower()


def _finish_stanza(header, body, trailer_line, origin, lineno, errors):
    m = _TRAILER.match(trailer_line)
    if m:
        name, mail, date = m.group("name"), m.group("email"), m.group("date")
    else:
        m = _TRAILER_NOMAIL.match(trailer_line)
        if not m:
            errors.append(ParseIssue(origin, lineno, "trailer", "unparseable trailer"))
            return None
        name, mail, date = m.group("name"), None, m.group("date")
    flags = set()
    stamp = parse_date(date)
    if stamp is None:
        flags.add("bad_date")
        errors.append(ParseIssue(origin, lineno, "date", f"unparseable date {date[:40]!r}"))
    level = _URGENCY.search(header.group("opts"))
    if level is None:
        flags.add("no_urgency")
    bugs = set()
    for block in _LP_BLOCK.findall("\n".join(body)):
        bugs.update(int(x) for x in re.findall(r"#(\d+)", block))
    return ChangeEvent(
        source_name=header.group("source"),
        version=header.group("version"),
        target_distribution=header.group("dists").split()[0].lower(),
        urgency=normalize_urgency(level.group(1) if level else None),
        developer_id=developer_identity(name, mail),
        developer_name=name.strip(),
        timestamp=stamp,
        bugs_closed=frozenset(bugs),
        flags=frozenset(flags))


def parse_changelog(text: Union[str, bytes], origin: str = "<changelog>",
                    errors: Optional[list] = None) -> list:
    """Parse Debian-format changelog text into :class:`ChangeEvent` objects.

    Never raises on malformed input: stanzas with an unparseable header or
    missing trailer are skipped and reported in ``errors``.
    """
    if errors is None:
        errors = []
    events = []
    header = None
    body: list = []
    skipping = False
    for lineno, line in enumerate(_to_text(text).split("\n"), start=1):
        line = line.rstrip()
        if header is None:
            if not line.strip():
                continue
            m = _HEADER.match(line)
            if m:
                header, body, skipping = m, [], False
            elif skipping:
                if _TRAILER_START.match(line):
                    skipping = False
            elif not line[0].isspace():
                errors.append(ParseIssue(origin, lineno, "header", f"unparseable header {line[:60]!r}"))
                skipping = True
            continue
        if _TRAILER_START.match(line):
            ev = _finish_stanza(header, body, line, origin, lineno, errors)
            if ev is not None:
                events.append(ev)
            header = None
            continue
        if line and not line[0].isspace():
            m = _HEADER.match(line)
            if m:
                errors.append(ParseIssue(origin, lineno, "trailer", "stanza without trailer"))
                header, body = m, []
                continue
        body.append(line)
    if header is not None:
        errors.append(ParseIssue(origin, lineno, "trailer", "stanza without trailer at end of file"))
    for issue in errors:
        log.debug("%s:%d %s: %s", *issue)
    return events


def map_events(events: Iterable[ChangeEvent], releases: Sequence[DistributionId],
               by_date: bool = False) -> list:
    """Attach a distribution index to each event.

    Events are mapped by target distribution name (pocket suffixes such as
    ``-proposed`` stripped). With ``by_date`` an event whose target is not a
    known release falls back to the first release dated on or after its
    timestamp.
    """
    by_name = {d.name: d.index for d in releases}
    dated = sorted((d.release_date, d.index) for d in releases if d.release_date)
    out = []
    for ev in events:
        idx = by_name.get(ev.target_distribution.split("-")[0])
        if idx is None and by_date and ev.timestamp is not None and dated:
            pos = bisect.bisect_left([d for d, _ in dated], ev.timestamp.date())
            if pos < len(dated):
                idx = dated[pos][1]
        out.append(dataclasses.replace(ev, distribution=idx))
    return out


# --------------------------------------------------------------------------
# bugs

def parse_timestamp(value: str) -> dt.datetime:
    value = value.strip()
    if value.endswith("Z"):
        value = value[:-1] + "+00:00"
    stamp = dt.datetime.fromisoformat(value)
    if stamp.tzinfo is None:
        stamp = stamp.replace(tzinfo=dt.timezone.utc)
    return stamp.astimezone(dt.timezone.utc)


def _release_start(day: dt.date) -> dt.datetime:
    return dt.datetime(day.year, day.month, day.day, tzinfo=dt.timezone.utc)


def assign_bugs(bugs: Iterable[BugRecord], releases: Sequence[tuple]) -> list:
    """Assign each bug to the release whose [date, date + 183 days) window
    contains its creation time; when windows overlap the latest release wins.

    ``releases`` is a sequence of ``(DistributionId, release_date)``.
    """
    dates = [_release_start(day) for _, day in releases]
    if any(b <= a for a, b in zip(dates, dates[1:])):
        raise ValueError("release dates must be strictly increasing")
    out = []
    for bug in bugs:
        pos = bisect.bisect_right(dates, bug.created_at) - 1
        target = None
        if pos >= 0 and bug.created_at < dates[pos] + SIX_MONTHS:
            target = releases[pos][0]
        out.append(dataclasses.replace(bug, assigned_distribution=target))
    return out


def parse_bugs_tsv(text: Union[str, bytes], origin: str = "bugs.tsv",
                   errors: Optional[list] = None) -> list:
    out = []
    for lineno, line in enumerate(_to_text(text).split("\n"), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if lineno == 1 and parts[0].strip().lower() == "bug_id":
            continue
        try:
            bug_id, source, created = parts[0], parts[1], parts[2]
            out.append(BugRecord(int(bug_id), source.strip(), parse_timestamp(created)))
        except (IndexError, ValueError) as exc:
            if errors is not None:
                errors.append(ParseIssue(origin, lineno, "bug", f"bad bug row: {exc}"))
    return out


def parse_releases_tsv(text: str, origin: str = "releases.tsv") -> list:
    """``(DistributionId, date)`` pairs; raises ValueError on bad rows."""
    rows = []
    for lineno, line in enumerate(_to_text(text).split("\n"), start=1):
        if not line.strip():
            continue
        parts = [p.strip() for p in line.split("\t")]
        if lineno == 1 and parts[0].lower() in ("distro", "name"):
            continue
        if len(parts) < 3:
            raise ValueError(f"{origin}:{lineno}: expected distro, index, release_date")
        day = dt.date.fromisoformat(parts[2])
        rows.append((DistributionId(int(parts[1]), parts[0].lower(), day), day))
    rows.sort(key=lambda r: r[0].index)
    if [r[0].index for r in rows] != list(range(1, len(rows) + 1)):
        raise ValueError(f"{origin}: release indexes must be consecutive from 1")
    return rows


# --------------------------------------------------------------------------
# snapshots

def build_snapshot(distribution: DistributionId, records: Sequence[PackageRecord],
                   binaries: Sequence[BinaryRecord] = (), events: Iterable[ChangeEvent] = (),
                   bugs: Iterable[BugRecord] = (), report: Optional[dict] = None) -> Snapshot:
    """Assemble G_t for one distribution.

    Package sizes are summed over the distribution's binaries (falling back
    to a Size field on the source stanza). Dependency edges are lifted from
    binary ``Depends``; edges that name a package absent from this
    distribution are dropped and counted in ``report``.
    """
    report = report if report is not None else {}
    packages = {r.source_name for r in records}
    if not packages:
        packages = {b.source for b in binaries}
    listed: dict = {}
    conflicts = 0
    for rec in sorted(records, key=lambda r: r.source_name):
        for b in sorted(rec.binaries):
            if b not in listed:
                listed[b] = rec.source_name
            elif listed[b] != rec.source_name:
                conflicts += 1
    report["binary_conflicts"] = report.get("binary_conflicts", 0) + conflicts
    binary_to_source = dict(listed)
    binary_to_source.update({b.name: b.source for b in binaries})
    providers = defaultdict(set)
    for b in binaries:
        for virtual in b.provides:
            providers[virtual].add(b.source)
    for virtual, srcs in providers.items():
        if virtual not in binary_to_source and len(srcs) == 1:
            binary_to_source[virtual] = next(iter(srcs))

    sizes: dict = {}
    for b in binaries:
        if b.source in packages:
            sizes[b.source] = sizes.get(b.source, 0) + b.size
    for rec in records:
        if rec.source_name not in sizes:
            sizes[rec.source_name] = rec.size or 0
    for s in packages:
        sizes.setdefault(s, 0)

    pairs = [(b.name, dep) for b in binaries for dep in b.depends]
    lifted = lift_dependencies(pairs, binary_to_source, report)
    edges = {(s, s2) for s, s2 in lifted if s in packages and s2 in packages}
    report["dangling_edges"] = report.get("dangling_edges", 0) + len(lifted) - len(edges)

    dev_edges = set()
    skipped = 0
    for ev in events:
        if ev.distribution != distribution.index:
            continue
        if ev.source_name in packages:
            dev_edges.add((ev.source_name, ev.developer_id))
        else:
            skipped += 1
    report["events_absent_package"] = report.get("events_absent_package", 0) + skipped

    bug_sets = defaultdict(set)
    skipped = 0
    for bug in bugs:
        if bug.assigned_distribution is None or bug.assigned_distribution.index != distribution.index:
            continue
        if bug.source_name in packages:
            bug_sets[bug.source_name].add(bug.bug_id)
        else:
            skipped += 1
    report["bugs_absent_package"] = report.get("bugs_absent_package", 0) + skipped

    bins = defaultdict(set)
    for b, s in listed.items():
        if s in packages:
            bins[s].add(b)
    for b in binaries:
        if b.source in packages:
            bins[b.source].add(b.name)
    return Snapshot(distribution=distribution, packages=frozenset(packages),
                    dep_edges=frozenset(edges), dev_edges=frozenset(dev_edges),
                    bugs={s: frozenset(v) for s, v in bug_sets.items()},
                    sizes=sizes, binaries={s: frozenset(v) for s, v in bins.items()})


@dataclass
class IngestResult:
    corpus: Corpus
    issues: list = field(default_factory=list)
    report: dict = field(default_factory=dict)


def ingest(raw_dir: Union[str, Path], map_by_date: bool = False) -> IngestResult:
    """Read the raw layout and build a :class:`Corpus`.

    Raises FileNotFoundError when ``releases.tsv`` is missing. Every other
    problem is recorded in the returned issue list and never aborts.
    """
    raw = Path(raw_dir)
    rel_path = raw / "releases.tsv"
    if not rel_path.is_file():
        raise FileNotFoundError(f"missing {rel_path}")
    releases = parse_releases_tsv(rel_path.read_text(encoding="utf-8"))
    issues: list = []
    report: dict = {}

    events: list = []
    for path in sorted((raw / "changelogs").glob("*.changelog")):
        events.extend(parse_changelog(path.read_bytes(), origin=f"changelogs/{path.name}", errors=issues))
    events = map_events(events, [d for d, _ in releases], by_date=map_by_date)

    bugs_path = raw / "bugs.tsv"
    bugs: list = []
    if bugs_path.is_file():
        bugs = parse_bugs_tsv(bugs_path.read_bytes(), "bugs.tsv", issues)
    else:
        issues.append(ParseIssue("bugs.tsv", 0, "missing", "no bug dump"))
    ids = Counter(b.bug_id for b in bugs)
    for bug_id, n in ids.items():
        if n > 1:
            issues.append(ParseIssue("bugs.tsv", 0, "duplicate", f"bug {bug_id} listed {n} times"))
    seen = set()
    bugs = [b for b in bugs if not (b.bug_id in seen or seen.add(b.bug_id))]
    bugs = assign_bugs(bugs, releases)
    known = {b.bug_id for b in bugs}
    events = [dataclasses.replace(ev, flags=ev.flags | {"unmatched_bugs"})
              if ev.bugs_closed - known else ev for ev in events]

    snapshots = []
    for dist, _ in releases:
        sources_path, packages_path = raw / dist.name / "Sources", raw / dist.name / "Packages"
        records, binaries = [], []
        if sources_path.is_file():
            records = parse_sources_index(sources_path.read_bytes(), f"{dist.name}/Sources", issues)
        if packages_path.is_file():
            binaries = parse_packages_index(packages_path.read_bytes(), f"{dist.name}/Packages", issues)
        if not records and not binaries:
            issues.append(ParseIssue(dist.name, 0, "missing", "no package indexes"))
        snap_report: dict = {}
        snapshots.append(build_snapshot(dist, records, binaries, events, bugs, snap_report))
        for key, value in snap_report.items():
            report[key] = report.get(key, 0) + value
    in_graph = {bug for snap in snapshots for ids_ in snap.bugs.values() for bug in ids_}
    kept = tuple(sorted((b for b in bugs if b.bug_id in in_graph), key=lambda b: b.bug_id))
    report["bugs_unassigned"] = sum(1 for b in bugs if b.assigned_distribution is None)
    corpus = Corpus(tuple(snapshots), tuple(sorted(events, key=ChangeEvent.sort_key)), kept)
    return IngestResult(corpus, issues, report)


# --------------------------------------------------------------------------
# normalized dataset

def _json_line(obj) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(text.encode("utf-8"))


def _tsv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    lines = ["\t".join(header)] + ["\t".join(str(c) for c in row) for row in rows]
    return "\n".join(lines) + "\n"


def corpus_counts(corpus: Corpus) -> dict:
    per = {}
    for snap in corpus.snapshots:
        per[snap.distribution.name] = {
            "packages": len(snap.packages), "dep_edges": len(snap.dep_edges),
            "dev_edges": len(snap.dev_edges),
            "bugs": sum(len(v) for v in snap.bugs.values())}
    return {
        "distributions": per,
        "events": len(corpus.events),
        "developers": len(corpus.developers()),
        "packages": len({s for snap in corpus.snapshots for s in snap.packages}),
        "bugs": sum(v["bugs"] for v in per.values()),
    }


def write_normalized(corpus: Corpus, out_dir: Union[str, Path], issues: Sequence[ParseIssue] = (),
                     report: Optional[dict] = None) -> dict:
    """Write ``corpus`` in the normalized layout; returns the manifest."""
    out = Path(out_dir)
    created = {b.bug_id: b.created_at for b in corpus.bug_records}
    _write(out / "releases.tsv", _tsv(("name", "index", "release_date"), (
        (d.name, d.index, d.release_date.isoformat() if d.release_date else "")
        for d in corpus.distributions)))
    _write(out / "events.jsonl", "".join(
        _json_line(ev.to_json()) + "\n" for ev in sorted(corpus.events, key=ChangeEvent.sort_key)))
    _write(out / "parse_errors.jsonl", "".join(
        _json_line(issue._asdict()) + "\n" for issue in sorted(issues)))
    for snap in corpus.snapshots:
        d = out / snap.distribution.name
        rows = [{"source": s, "size": snap.sizes.get(s, 0),
                 "binaries": sorted(snap.binaries.get(s, ()))} for s in sorted(snap.packages)]
        _write(d / "packages.jsonl", "".join(_json_line(r) + "\n" for r in rows))
        _write(d / "edges.tsv", _tsv(("src", "dst"), sorted(snap.dep_edges)))
        _write(d / "devs.tsv", _tsv(("source", "developer"), sorted(snap.dev_edges)))
        bug_rows = sorted((b, s, created[b].isoformat() if b in created else "")
                          for s, ids in snap.bugs.items() for b in ids)
        _write(d / "bugs.tsv", _tsv(("bug_id", "source", "created_at"), bug_rows))
    manifest = {
        "format": FORMAT_VERSION,
        "distributions": [d.name for d in corpus.distributions],
        "counts": corpus_counts(corpus),
        "parse_errors": {"total": len(issues), **dict(sorted(Counter(i.kind for i in issues).items()))},
        "report": dict(sorted((report or {}).items())),
    }
    _write(out / "manifest.json", json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    return manifest


def _read_tsv(path: Path) -> list:
    lines = path.read_text(encoding="utf-8").split("\n")
    return [line.split("\t") for line in lines[1:] if line]


def load_normalized(data_dir: Union[str, Path]) -> Corpus:
    """Load a normalized dataset back into a :class:`Corpus`."""
    root = Path(data_dir)
    if not (root / "releases.tsv").is_file():
        raise FileNotFoundError(f"{root} is not a normalized dataset (no releases.tsv)")
    dists = [DistributionId(int(idx), name, dt.date.fromisoformat(day) if day else None)
             for name, idx, day in _read_tsv(root / "releases.tsv")]
    events = []
    if (root / "events.jsonl").is_file():
        with open(root / "events.jsonl", encoding="utf-8") as fh:
            events = [ChangeEvent.from_json(json.loads(line)) for line in fh if line.strip()]
    snapshots, bug_records = [], []
    for dist in dists:
        d = root / dist.name
        with open(d / "packages.jsonl", encoding="utf-8") as fh:
            rows = [json.loads(line) for line in fh if line.strip()]
        bugs = defaultdict(set)
        for bug_id, source, created in _read_tsv(d / "bugs.tsv"):
            bugs[source].add(int(bug_id))
            if created:
                bug_records.append(BugRecord(int(bug_id), source, parse_timestamp(created), dist))
        snapshots.append(Snapshot(
            distribution=dist,
            packages=frozenset(r["source"] for r in rows),
            dep_edges=frozenset(tuple(e) for e in _read_tsv(d / "edges.tsv")),
            dev_edges=frozenset(tuple(e) for e in _read_tsv(d / "devs.tsv")),
            bugs=bugs,
            sizes={r["source"]: r["size"] for r in rows},
            binaries={r["source"]: frozenset(r["binaries"]) for r in rows}))
    return Corpus(tuple(snapshots), tuple(events), tuple(sorted(bug_records, key=lambda b: b.bug_id)))


def dataset_fingerprint(data_dir: Union[str, Path]) -> str:
    """SHA-256 over every file of a normalized dataset (paths and bytes)."""
    root = Path(data_dir)
    h = hashlib.sha256()
    for path in sorted(p for p in root.rglob("*") if p.is_file()):
        h.update(path.relative_to(root).as_posix().encode())
        h.update(b"\0")
        h.update(path.read_bytes())
    return h.hexdigest()


def mean_bugs_per_buggy_package(corpus: Corpus) -> float:
    """Mean |bugs(s,t)| over all (s,t) pairs with at least one bug."""
    counts = [len(ids) for snap in corpus.snapshots for ids in snap.bugs.values() if ids]
    return sum(counts) / len(counts) if counts else 0.0
