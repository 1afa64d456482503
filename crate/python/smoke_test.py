"""Smoke test for the raidradar Python extension.

Build and install first:
    pip install maturin
    maturin build --release -m crates/python/Cargo.toml -o dist
    pip install dist/raidradar-*.whl
"""

import json
import math

import raidradar as rr


def main():
    assert rr.tokenize("Hello, World [noise]") == ["hello", "world", "[noise]"]
    assert rr.stem("running") == "run"
    assert abs(rr.idf(1, 3) - (math.log(2) + 1)) < 1e-12

    vocab = rr.Vocabulary([["a", "b"], ["b"]])
    assert vocab.terms() == ["a", "b"]
    assert vocab.transform(["b", "b"], l2_normalize=False) == [0.0, 2.0]

    auc, points = rr.roc_auc([0.9, 0.8, 0.3, 0.1], [True, False, True, False])
    assert auc == 0.75 and points[0] == (0.0, 0.0) and points[-1] == (1.0, 1.0)
    p, r, f = rr.precision_recall_f1([True, True, True, False, False], [True, True, False, True, True])
    assert abs(p - 2 / 3) < 1e-12 and r == 0.5 and abs(f - 4 / 7) < 1e-12

    splits = json.loads(rr.make_splits(1217, 14444, seed=1))
    assert len(splits["minority"]["train"]) == len(splits["majority"]["train"]) == 730

    rows = [[1.0], [2.0], [-1.0], [-2.0]]
    labels = [True, True, False, False]
    for kind in ["linear", "decision_tree", "random_forest", "extra_trees"]:
        model = rr.Model.train(kind, rows, labels, seed=3)
        assert model.predict_proba([1.5]) > 0.5 > model.predict_proba([-1.5]), kind
        again = rr.Model.from_json(model.to_json())
        assert again.predict_proba([1.5]) == model.predict_proba([1.5])

    avg = rr.Ensemble.average()
    assert avg.predict(0.8, 0.6, 0.4) == (True, 0.6)
    assert rr.Ensemble.average(thumbnail=0.0).predict(0.8, 0.6, 0.4)[1] == 0.7
    assert rr.Ensemble.majority().predict(metadata=0.8, transcript=0.2)[0]
    probs = [(0.9 if i % 2 else 0.1, 0.5, 0.3) for i in range(40)]
    stacked = rr.Ensemble.fit_weighted(probs, [bool(i % 2) for i in range(40)], seed=1)
    assert stacked.weights()["metadata"] > 0.8

    corpus = rr.planted_corpus(json.dumps({"n_raided": 40, "n_non_raided": 160, "seed": 2}))
    first = json.loads(corpus[0])
    assert rr.validate_record(corpus[0]) == []
    assert rr.label(corpus[0], ["slur1"]) == first["label"]
    report = json.loads(rr.run_experiment(corpus, "exp2", json.dumps({"split": {"rounds": 2}})))
    assert len(report["rounds"]) == 2
    assert report["summary"]["weighted_vote"]["mean"]["auc"] > 0.8

    print("raidradar", rr.__version__, "smoke test ok")


if __name__ == "__main__":
    main()
