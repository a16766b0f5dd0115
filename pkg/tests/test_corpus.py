import datetime as dt
import filecmp
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pkgpulse.corpus import (SIX_MONTHS, BugRecord, PackageRecord, assign_bugs, build_snapshot,
                             dataset_fingerprint, ingest, iter_stanzas, load_normalized,
                             map_events, mean_bugs_per_buggy_package, parse_changelog,
                             parse_packages_index, parse_relation, parse_releases_tsv,
                             parse_sources_index, write_normalized, write_stanzas)
from pkgpulse.tgraph import DistributionId

from mini_raw import EXPECTED_COUNTS, write_mini_raw

UTC = dt.timezone.utc


# ---- Sources / Packages ---------------------------------------------------

def test_sources_0ad_binaries():
    recs = parse_sources_index("Package: 0ad\nBinary: 0ad, 0ad-dbg\nVersion: 0.0.21-2\n")
    assert recs == [PackageRecord("0ad", frozenset({"0ad", "0ad-dbg"}), None, "0.0.21-2")]


def test_sources_empty():
    assert parse_sources_index("") == []
    assert parse_sources_index("\n\n\n") == []


def test_sources_missing_package_is_reported_and_skipped():
    errors = []
    recs = parse_sources_index("Binary: x\n\nPackage: y\nSize: -3\n", errors=errors)
    assert [r.source_name for r in recs] == ["y"]
    assert recs[0].size is None
    assert sorted(e.kind for e in errors) == ["size", "stanza"]


def test_unknown_keys_and_case_ignored():
    recs = parse_sources_index("PACKAGE: a\nX-Whatever: 1\nbinary: a1\n")
    assert recs[0].source_name == "a" and recs[0].binaries == {"a1"}


binary_name = st.from_regex(r"[a-z0-9][a-z0-9+.\-]{0,10}", fullmatch=True)


@given(st.lists(st.tuples(binary_name, st.lists(binary_name, min_size=1, max_size=12, unique=True)),
                min_size=1, max_size=5, unique_by=lambda x: x[0]),
       st.integers(1, 4))
def test_folded_binary_field_round_trip(stanzas, fold):
    dicts = [{"Package": name, "Binary": ", ".join(bins)} for name, bins in stanzas]
    flat = parse_sources_index(write_stanzas(dicts))
    folded_text = write_stanzas(dicts, fold=fold)
    assert parse_sources_index(folded_text) == flat
    assert [r.binaries for r in flat] == [frozenset(b) for _, b in stanzas]


def test_parse_relation():
    assert parse_relation("libc6 (>= 2.15) | libc6-alt, foo:any, bar [amd64] <!nocheck>, ") == \
        ["libc6", "foo", "bar"]
    assert parse_relation("") == []


def test_packages_index_source_field():
    bins = parse_packages_index("Package: libfoo1\nSource: foo (1.2-1)\nSize: 10\nDepends: libc6\n\n"
                                "Package: bar\nSize: 5\n")
    assert bins[0].source == "foo" and bins[0].depends == ("libc6",) and bins[0].size == 10
    assert bins[1].source == "bar"


@settings(max_examples=200, deadline=None)
@given(st.binary(max_size=2000))
def test_parsers_never_raise_on_bytes(data):
    errors = []
    events = parse_changelog(data, errors=errors)
    assert isinstance(events, list)
    parse_sources_index(data, errors=errors)
    parse_packages_index(data, errors=errors)


@settings(max_examples=200, deadline=None)
@given(st.text(alphabet=st.sampled_from(list("ab (); =<>@-.:#,\n LP0123urgency")), max_size=400))
def test_changelog_never_raises_on_near_miss_text(text):
    parse_changelog(text, errors=[])


# ---- changelogs -------------------------------------------------------------

SYSTEMD = """\
systemd (232-21ubuntu2) zesty; urgency=medium

  * Fix something (LP: #1642966, #1652101)
  * Other thing. LP: #1

 -- Martin Pitt <Martin.Pitt@Ubuntu.com>  Tue, 28 Mar 2017 09:55:03 +0200
"""


def test_systemd_header():
    (ev,) = parse_changelog(SYSTEMD)
    assert (ev.source_name, ev.version, ev.target_distribution, ev.urgency) == \
        ("systemd", "232-21ubuntu2", "zesty", "medium")
    assert ev.developer_id == "martin.pitt@ubuntu.com"
    assert ev.developer_name == "Martin Pitt"
    assert ev.timestamp == dt.datetime(2017, 3, 28, 7, 55, 3, tzinfo=UTC)


def test_lp_bug_lists():
    (ev,) = parse_changelog(SYSTEMD)
    assert ev.bugs_closed == {1642966, 1652101, 1}


@pytest.mark.parametrize("line,expected", [
    ("(LP: #1642966, #1652101)", {1642966, 1652101}),
    ("LP: #5 #6", {5, 6}),
    ("lp: #7,#8", {7, 8}),
    ("Closes: #9", set()),
    ("see bug #10", set()),
])
def test_lp_regex_hand_labeled(line, expected):
    text = f"p (1) z; urgency=low\n\n  * {line}\n\n -- A <a@b>  Tue, 28 Mar 2017 09:55:03 +0200\n"
    assert parse_changelog(text)[0].bugs_closed == expected


def test_changelog_empty():
    assert parse_changelog("") == []


def test_urgency_case_and_other():
    text = SYSTEMD.replace("urgency=medium", "urgency=CRITICAL")
    assert parse_changelog(text)[0].urgency == "other"
    assert parse_changelog(SYSTEMD.replace("medium", "High"))[0].urgency == "high"


def test_bad_header_and_date():
    errors = []
    text = "garbage line\n  * x\n -- A <a@b>  Tue, 28 Mar 2017 09:55:03 +0200\n\n" + \
        SYSTEMD.replace("Tue, 28 Mar 2017 09:55:03 +0200", "yesterday")
    (ev,) = parse_changelog(text, errors=errors)
    assert ev.timestamp is None and "bad_date" in ev.flags
    assert sorted(e.kind for e in errors) == ["date", "header"]


def test_missing_trailer_reported():
    errors = []
    evs = parse_changelog("p (1) z; urgency=low\n\n  * x\n\n" + SYSTEMD, errors=errors)
    assert [e.source_name for e in evs] == ["systemd"]
    assert [e.kind for e in errors] == ["trailer"]


def test_map_events_by_name_and_date():
    rel = [DistributionId(1, "yakkety", dt.date(2016, 10, 13)), DistributionId(2, "zesty", dt.date(2017, 4, 13))]
    evs = parse_changelog(SYSTEMD.replace("zesty", "zesty-proposed")) + \
        parse_changelog(SYSTEMD.replace("zesty", "unstable"))
    assert [e.distribution for e in map_events(evs, rel)] == [2, None]
    assert [e.distribution for e in map_events(evs, rel, by_date=True)] == [2, 2]


# ---- bugs -------------------------------------------------------------------

ZESTY = DistributionId(1, "zesty")
ARTFUL = DistributionId(2, "artful")
RELEASES = [(ZESTY, dt.date(2017, 4, 13)), (ARTFUL, dt.date(2017, 10, 19))]


def _bug(days, base=dt.datetime(2017, 4, 13, tzinfo=UTC)):
    return BugRecord(1, "systemd", base + dt.timedelta(days=days))


def test_assign_bug_inside_window():
    assert assign_bugs([_bug(90)], RELEASES)[0].assigned_distribution == ZESTY


def test_assign_bug_after_window_before_next_release():
    rel = [(ZESTY, dt.date(2017, 4, 13)), (ARTFUL, dt.date(2018, 4, 13))]
    assert assign_bugs([_bug(210)], rel)[0].assigned_distribution is None


def test_assign_bug_boundaries():
    rel = [(ZESTY, dt.date(2017, 4, 13))]
    start = dt.datetime(2017, 4, 13, tzinfo=UTC)
    got = assign_bugs([BugRecord(1, "s", start), BugRecord(2, "s", start + SIX_MONTHS - dt.timedelta(seconds=1)),
                       BugRecord(3, "s", start + SIX_MONTHS), BugRecord(4, "s", start - dt.timedelta(seconds=1))],
                      rel)
    assert [b.assigned_distribution for b in got] == [ZESTY, ZESTY, None, None]


def test_overlapping_windows_latest_release_wins():
    # artful opens 189 days after zesty; a bug 5 days into artful sits in both windows
    rel = [(ZESTY, dt.date(2017, 4, 13)), (ARTFUL, dt.date(2017, 6, 1))]
    assert assign_bugs([_bug(60)], rel)[0].assigned_distribution == ARTFUL


def test_assign_requires_increasing_dates():
    with pytest.raises(ValueError):
        assign_bugs([], [(ZESTY, dt.date(2017, 1, 1)), (ARTFUL, dt.date(2017, 1, 1))])


def test_releases_tsv_validation():
    rows = parse_releases_tsv("distro\tindex\trelease_date\nZesty\t1\t2017-04-13\n")
    assert rows[0][0] == ZESTY
    with pytest.raises(ValueError):
        parse_releases_tsv("a\t1\t2017-01-01\nb\t3\t2017-06-01\n")


# ---- snapshots and ingestion ------------------------------------------------

def test_empty_snapshot():
    snap = build_snapshot(ZESTY, [])
    assert snap.packages == frozenset() and snap.dep_edges == frozenset()


def test_build_snapshot_counts_dangling():
    report = {}
    recs = [PackageRecord("app", frozenset({"app"}))]
    bins = parse_packages_index("Package: app\nDepends: libgone\n\nPackage: libgone\nSource: gone\n")
    snap = build_snapshot(ZESTY, recs, bins, report=report)
    assert snap.dep_edges == frozenset()
    assert report["dangling_edges"] == 1


def test_ingest_mini_corpus(tmp_path):
    res = ingest(write_mini_raw(tmp_path / "raw"))
    c = res.corpus
    from pkgpulse.corpus import corpus_counts
    assert corpus_counts(c) == EXPECTED_COUNTS
    alpha, beta, gamma = c.snapshots
    assert alpha.dep_edges == {("0ad", "0ad-data"), ("0ad", "systemd")}
    assert alpha.sizes == {"0ad": 6000, "0ad-data": 7300, "systemd": 6120001}
    assert alpha.binaries["0ad-data"] == {"0ad-data", "0ad-data-common"}
    assert beta.bugs["systemd"] == {1652101, 2002}
    assert c.devs("0ad", 2) == {"bob@example.org"}
    assert c.devs("0ad", 3) == {"alice@example.org"}
    assert c.activity("bob@example.org", 2).high == 1
    assert c.activity("alice@example.org", 1).high + c.activity("alice@example.org", 1).medium == 0
    assert sorted(i.kind for i in res.issues) == ["bug", "date", "header", "stanza"]
    assert res.report["dangling_edges"] == 1
    assert res.report["unknown_binary"] == 3
    assert res.report["bugs_absent_package"] == 1
    assert res.report["bugs_unassigned"] == 1
    # each bug attaches to exactly one (s, t)
    seen = [b for snap in c.snapshots for ids in snap.bugs.values() for b in ids]
    assert len(seen) == len(set(seen))


def test_unmatched_changelog_bugs_are_flagged(tmp_path):
    raw = write_mini_raw(tmp_path / "raw")
    (raw / "bugs.tsv").write_text("bug_id\tsource_name\tcreated_at\n1001\t0ad\t2017-05-01T00:00:00Z\n")
    evs = ingest(raw).corpus.events
    flagged = {e.version for e in evs if "unmatched_bugs" in e.flags}
    assert "0.0.21-1" in flagged and "232-21ubuntu2" in flagged


def test_ingest_requires_releases(tmp_path):
    with pytest.raises(FileNotFoundError):
        ingest(tmp_path)


def test_normalized_round_trip_and_idempotence(tmp_path):
    res = ingest(write_mini_raw(tmp_path / "raw"))
    m1 = write_normalized(res.corpus, tmp_path / "n1", res.issues, res.report)
    loaded = load_normalized(tmp_path / "n1")
    assert loaded.snapshots == res.corpus.snapshots
    assert sorted(loaded.events, key=lambda e: e.sort_key()) == list(res.corpus.events)
    res2 = ingest(tmp_path / "raw")
    write_normalized(res2.corpus, tmp_path / "n2", res2.issues, res2.report)
    assert dataset_fingerprint(tmp_path / "n1") == dataset_fingerprint(tmp_path / "n2")
    assert filecmp.cmp(tmp_path / "n1" / "manifest.json", tmp_path / "n2" / "manifest.json", shallow=False)
    assert m1["parse_errors"]["total"] == 4
    assert json.loads((tmp_path / "n1" / "manifest.json").read_text())["counts"] == EXPECTED_COUNTS


def test_round_trip_synthetic(tmp_path):
    from pkgpulse.synth import synth_corpus
    c = synth_corpus(seed=4, T=8, n_packages=40, n_devs=15)
    write_normalized(c, tmp_path / "d")
    back = load_normalized(tmp_path / "d")
    assert back.snapshots == c.snapshots
    write_normalized(back, tmp_path / "e")
    assert dataset_fingerprint(tmp_path / "d") == dataset_fingerprint(tmp_path / "e")


def test_mean_bugs_per_buggy_package(tmp_path):
    c = ingest(write_mini_raw(tmp_path / "raw")).corpus
    # (s,t) pairs with bugs: alpha 0ad=1, beta 0ad=1, beta systemd=2, gamma 0ad=1, gamma systemd=1
    assert mean_bugs_per_buggy_package(c) == pytest.approx(6 / 5)


def test_iter_stanzas_comments_and_orphans():
    errors = []
    got = list(iter_stanzas("# comment\n continuation\nA: 1\n b\n .\nnot a field\n", errors=errors))
    assert got == [(3, {"a": "1 b"})]
    assert sorted(e.kind for e in errors) == ["continuation", "field"]
