"""A three-release raw corpus with known bookkeeping, written on demand."""

from pathlib import Path

SOURCES_FULL = """\
Package: 0ad
Binary: 0ad, 0ad-dbg
Version: 0.0.20-1
Size: 999

Package: 0ad-data
Binary: 0ad-data,
 0ad-data-common
Version: 0.0.20-1

Package: systemd
Binary: systemd, libsystemd0, udev
"""

SOURCES_NO_DATA = """\
Package: 0ad
Binary: 0ad, 0ad-dbg

Package: systemd
Binary: systemd, libsystemd0, udev
"""

PACKAGES = """\
Package: 0ad
Source: 0ad (0.0.20-1)
Size: 5000
Depends: 0ad-data (>= 0.0.20), libc6 (>= 2.15) | libc6-alt, libsystemd0

Package: 0ad-dbg
Source: 0ad
Size: 1000
Depends: 0ad (= 0.0.20-1)

Package: 0ad-data
Size: 7000

Package: 0ad-data-common
Source: 0ad-data
Size: 300

Package: systemd
Size: 6000000
Depends: libsystemd0 (= 232)
Provides: init-system

Package: libsystemd0
Source: systemd
Size: 120000

Package: udev
Source: systemd
Size: 1
Depends: init-system
"""

CHANGELOG_0AD = """\
0ad (0.0.21-1) gamma; urgency=medium

  * New upstream release (LP: #1001, #1002)

 -- Alice Example <Alice@Example.org>  Thu, 13 Apr 2017 10:00:00 +0000

0ad (0.0.20-2) beta-proposed; urgency=HIGH

  * Fix crash. LP: #1003

 -- Bob <bob@example.org>  Mon, 10 Oct 2016 10:00:00 +0200

0ad (0.0.20-1) alpha; urgency=critical

  * Initial.

 -- Alice Example <alice@example.org>  Wed, 20 Apr 2016 10:00:00 +0000
"""

CHANGELOG_SYSTEMD = """\
systemd (232-21ubuntu2) gamma; urgency=medium

  * debian/extra: fix (LP: #1642966, #1652101)

 -- Carol <carol@example.org>  Wed, 05 Apr 2017 12:00:00 +0000

this is not a header

  * whatever

 -- Dave <dave@example.org>  Wed, 05 Apr 2017 12:00:00 +0000

systemd (231-1) alpha; urgency=low

  * thing

 -- Carol <carol@example.org>  not a date
"""

BUGS = """\
bug_id\tsource_name\tcreated_at
1001\t0ad\t2017-05-01T00:00:00Z
1002\t0ad\t2016-05-01T00:00:00Z
1003\t0ad\t2016-11-01T00:00:00Z
1642966\tsystemd\t2017-04-20T00:00:00+00:00
1652101\tsystemd\t2016-12-01T00:00:00Z
2000\tsystemd\t2015-01-01T00:00:00Z
2001\t0ad-data\t2016-11-01T00:00:00Z
2002\tsystemd\t2016-10-15T00:00:00Z
oops
"""

RELEASES = "distro\tindex\trelease_date\nalpha\t1\t2016-04-21\nbeta\t2\t2016-10-13\ngamma\t3\t2017-04-13\n"

EXPECTED_COUNTS = {
    "distributions": {
        "alpha": {"packages": 3, "dep_edges": 2, "dev_edges": 2, "bugs": 1},
        "beta": {"packages": 2, "dep_edges": 1, "dev_edges": 1, "bugs": 3},
        "gamma": {"packages": 3, "dep_edges": 2, "dev_edges": 2, "bugs": 2},
    },
    "events": 5,
    "developers": 3,
    "packages": 3,
    "bugs": 6,
}


def write_mini_raw(root) -> Path:
    root = Path(root)
    files = {
        "releases.tsv": RELEASES,
        "bugs.tsv": BUGS,
        "alpha/Sources": SOURCES_FULL + "\nFormat: 3.0 (quilt)\nVersion: 1\n",
        "alpha/Packages": PACKAGES,
        "beta/Sources": SOURCES_NO_DATA,
        "beta/Packages": PACKAGES,
        "gamma/Sources": SOURCES_FULL,
        "gamma/Packages": PACKAGES,
        "changelogs/0ad.changelog": CHANGELOG_0AD,
        "changelogs/systemd.changelog": CHANGELOG_SYSTEMD,
    }
    for rel, text in files.items():
        path = root / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    return root
