import json

import numpy as np
import pytest

from pkgpulse.devrec import (DevRecModel, build_instances, candidates, evaluate, evaluation_packages,
                             recommend, run_devrec, train)
from pkgpulse.learners.rankers import UntrainedModelError
from pkgpulse.synth import synth_corpus

from helpers import make_corpus


@pytest.fixture(scope="module")
def corpus():
    return synth_corpus(seed=8, T=9, n_packages=40, n_devs=15)


def test_candidates_window_union(corpus):
    for s in sorted(corpus.at(9).packages):
        for K in (1, 3, 5):
            main = set()
            full = set()
            for tau in range(max(1, 9 - K), 9):
                main |= corpus.devs(s, tau)
                full |= corpus.devs(s, tau)
                if s in corpus.at(tau):
                    for n in corpus.at(tau).neighbors(s):
                        full |= corpus.devs(n, tau)
            assert candidates(corpus, s, 9, "main", K) == main
            assert candidates(corpus, s, 9, "main+depn", K) == full
            assert main <= full


def test_candidates_validation(corpus):
    with pytest.raises(ValueError):
        candidates(corpus, "pkg0000", 1)
    with pytest.raises(ValueError):
        candidates(corpus, "pkg0000", 5, "everyone")


def _history(*sets):
    return make_corpus([{"packages": {"s"}, "devs": {"s": list(d)}} for d in sets])


def test_instance_set_algebra_example():
    c = _history({"d1"}, {"d2"}, {"d3"}, {"d2"}, {"d9"})
    (inst,) = [i for i in build_instances(c, "main", K=3, T=5) if i.horizon == 4]
    assert inst.positive_ids == ("d2",) and inst.negative_ids == ("d1", "d3")
    assert inst.positives.shape == (1, 5) and inst.negatives.shape == (2, 5)


def test_instance_skipped_without_negatives():
    c = _history({"d1"}, {"d1", "d2"}, {"d1", "d2"})
    assert build_instances(c, "main", K=2, T=3) == []


def test_build_instances_requires_history():
    with pytest.raises(ValueError):
        build_instances(_history({"a"}, {"a"}), "main", K=5)


def test_train_and_recommend(corpus):
    model = train(corpus, "main", K=5)
    assert model.kind == "lr" and model.features == "auto"
    recs, skipped = recommend(corpus, model)
    assert skipped + len(recs) == len(corpus.at(9).packages)
    for r in recs:
        assert list(r.ranked.scores) == sorted(r.ranked.scores, reverse=True)
        assert set(r.ranked) == candidates(corpus, r.package, 9, "main", 5)
    again, _ = recommend(corpus, model)
    assert [r.ranked for r in again] == [r.ranked for r in recs]


def test_mlp_pairing_and_round_trip(corpus):
    model = train(corpus, "main+depn", K=3, epochs=1)
    assert model.kind == "mlp" and model.features == "auto+depn"
    back = DevRecModel.from_json(json.loads(json.dumps(model.to_json())))
    X = np.random.default_rng(0).uniform(size=(3, 13))
    assert np.array_equal(back.score(X), model.score(X))
    with pytest.raises(ValueError):
        model.score(np.zeros((2, 5)))


def test_train_without_instances_raises():
    c = _history({"a"}, {"a"}, {"a"})
    with pytest.raises(UntrainedModelError):
        train(c, "main", K=2)


def test_single_candidate_gold_gets_rr_one():
    c = _history({"a"}, {"b"}, {"a"}, {"a"})
    ev = evaluate(c, {"s": ["a"]}, T=4)
    assert ev.mrr == 1.0 and ev.coverage == 1.0


def test_evaluate_counts_uncovered_as_miss():
    c = make_corpus([{"packages": {"x", "y"}, "devs": {"x": ["a"]}},
                     {"packages": {"x", "y"}, "devs": {"x": ["a"], "y": ["b"]}}])
    assert evaluation_packages(c, 2) == ["x", "y"]
    ev = evaluate(c, {"x": ["a"]}, 2)
    assert ev.mrr == 0.5 and ev.coverage == 0.5 and ev.reciprocal_ranks == {"x": 1.0, "y": 0.0}


def test_run_devrec(corpus):
    model, recs, ev = run_devrec(corpus, "r09", "main", K=5)
    assert 0 <= ev.mrr <= 1 and ev.n_packages == len(evaluation_packages(corpus, 9))
