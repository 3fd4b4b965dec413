import json
import os
import subprocess

import pytest

import ceilkit


def test_synth_is_deterministic():
    a = ceilkit.synth(k=3, n=10, seed=4)
    b = ceilkit.synth(k=3, n=10, seed=4)
    assert a == b
    texts, labels = a
    assert len(texts) == 30
    assert sorted(set(labels)) == ["0", "1", "2"]


def test_tokenize():
    assert ceilkit.tokenize("Hello, World!") == ["hello", "world"]


def test_cluster_and_metrics():
    texts, labels = ceilkit.synth(k=3, n=20, seed=1)
    pred = ceilkit.cluster(texts, {"k": 3, "backend": "kmeans", "seed": 2})
    assert len(pred) == len(texts)
    gold = [int(label) for label in labels]
    m = ceilkit.evaluate(pred, gold)
    assert m["n"] == 60
    assert m["acc"] == pytest.approx(ceilkit.accuracy(pred, gold))
    assert 0.0 <= m["nmi"] <= 1.0


def test_run_ceil_records():
    texts, labels = ceilkit.synth(k=3, n=20, noise=0.05, seed=1)
    config = {"k": 3, "iterations": 2, "bs_cluster": 20, "cluster_epochs": 3, "classifier_epochs": 2}
    out = ceilkit.run_ceil(texts, config, labels)
    assert len(out["records"]) == 2
    assert [r["mode"] for r in out["records"]] == ["mean_pool", "mask_slot"]
    assert len(out["metrics"]) == 2
    assert out["assignments"] == out["records"][-1]["assignments"]
    unlabelled = ceilkit.run_ceil(texts, config)
    assert unlabelled["metrics"] == []
    assert unlabelled["assignments"] == out["assignments"]


def test_errors_map_to_exceptions():
    with pytest.raises(ceilkit.ConfigError):
        ceilkit.cluster(["a b"], {"nope": 1})
    with pytest.raises(ceilkit.DataError):
        ceilkit.evaluate([0, 1], [0])
    assert issubclass(ceilkit.ConfigError, ceilkit.Error)


@pytest.mark.skipif("CEILKIT_CLI" not in os.environ, reason="CLI path not provided")
def test_cli_eval_round_trip(tmp_path):
    cli = os.environ["CEILKIT_CLI"]
    corpus = tmp_path / "c.jsonl"
    subprocess.run([cli, "synth", "--k", "2", "--n", "10", "--seed", "3", "--out", str(corpus)], check=True)
    pred = tmp_path / "p.tsv"
    pred.write_text("".join(f"{i}\t{i // 10}\n" for i in range(20)))
    res = subprocess.run([cli, "eval", "--pred", str(pred), "--gold", str(corpus)],
                         check=True, capture_output=True, text=True)
    assert json.loads(res.stdout)["acc"] == 1.0
