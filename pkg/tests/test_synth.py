import numpy as np
import pytest

from pkgpulse.synth import SynthConfig, neighbor_bug_correlation, release_date, synth_corpus


def test_fixed_seed_identical():
    a = synth_corpus(seed=3, T=8, n_packages=30, n_devs=10)
    b = synth_corpus(SynthConfig(seed=3, T=8, n_packages=30, n_devs=10))
    assert a.snapshots == b.snapshots and a.events == b.events
    c = synth_corpus(seed=4, T=8, n_packages=30, n_devs=10)
    assert a.snapshots != c.snapshots


def test_growth_and_shape():
    c = synth_corpus(seed=0, T=10, n_packages=100, n_devs=20, growth=0.3)
    sizes = [len(s.packages) for s in c.snapshots]
    assert sizes == sorted(sizes) and sizes[0] == 70 and sizes[-1] == 100
    assert all(len(s.devs(p)) >= 1 for s in c.snapshots for p in s.packages)
    assert release_date(2) > release_date(1)


def test_preferential_attachment_makes_hubs():
    c = synth_corpus(seed=1, T=8, n_packages=300, n_devs=30)
    indeg = np.bincount([int(b[3:]) for _, b in c.at(8).dep_edges], minlength=300)
    assert indeg.max() >= 10 * max(1.0, np.median(indeg))


def test_autoregressive_mode_constant_bugs():
    c = synth_corpus(seed=2, T=8, n_packages=30, n_devs=10, autoregressive=True, growth=0.0)
    for s in c.at(1).packages:
        assert len({c.bug_count(s, t) for t in range(1, 9)}) == 1
        assert 1 <= c.bug_count(s, 1) <= 5


def test_events_match_dev_edges():
    c = synth_corpus(seed=5, T=8, n_packages=30, n_devs=10)
    for snap in c.snapshots:
        from_events = {(e.source_name, e.developer_id) for e in c.events if e.distribution == snap.t}
        assert from_events == set(snap.dev_edges)
    assert {e.urgency for e in c.events} <= {"low", "medium", "high", "critical"}


def test_config_validation():
    with pytest.raises(ValueError):
        synth_corpus(T=1)
    with pytest.raises(ValueError):
        synth_corpus(growth=1.0)


def test_no_coupling_means_no_correlation():
    vals = [neighbor_bug_correlation(synth_corpus(seed=s, coupling=0.0)) for s in range(20)]
    assert abs(float(np.mean(vals))) < 0.1


def test_coupling_produces_positive_correlation():
    vals = [neighbor_bug_correlation(synth_corpus(seed=s, coupling=0.5)) for s in range(20)]
    assert float(np.mean(vals)) > 0.15
    assert min(vals) > 0.15
