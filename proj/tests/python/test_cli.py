"""End-to-end tests of the command-line interface."""

import hashlib
import json
import os
import subprocess
import time

import pytest

CLI = os.environ.get("KTM_CLI")

pytestmark = pytest.mark.skipif(CLI is None, reason="KTM_CLI not set")


def run(*args, cwd=None):
    return subprocess.run([CLI, *args], capture_output=True, text=True, cwd=cwd)


def sha(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


SMALL = [
    "--set", "data.simulator.count=40",
    "--set", "mdn.epochs=8",
    "--set", "mdn.hidden_dim=8",
    "--set", "mdn.components=2",
]


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "corpus.csv"
    result = run("simulate", "--out", str(path), "--seed", "3", *SMALL)
    assert result.returncode == 0, result.stderr
    assert "40 trajectories" in result.stdout
    return path


def test_simulate_deterministic(tmp_path):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    c = tmp_path / "c.csv"
    assert run("simulate", "--out", str(a), "--seed", "5", *SMALL).returncode == 0
    assert run("simulate", "--out", str(b), "--seed", "5", *SMALL).returncode == 0
    assert run("simulate", "--out", str(c), "--seed", "6", *SMALL).returncode == 0
    assert sha(a) == sha(b)
    assert sha(a) != sha(c)
    assert a.read_text().splitlines()[0] == "id,t,x,y"
    assert (tmp_path / "a.csv.config.json").exists()


def test_train_deterministic_and_logs(corpus, tmp_path):
    m1 = tmp_path / "m1.ktm"
    m2 = tmp_path / "m2.ktm"
    r1 = run("train", str(corpus), "--out", str(m1), "--seed", "9", *SMALL)
    r2 = run("train", str(corpus), "--out", str(m2), "--seed", "9", *SMALL)
    assert r1.returncode == 0, r1.stderr
    assert r2.returncode == 0
    assert "epoch 1/8 loss" in r1.stdout
    assert "epoch 8/8 loss" in r1.stdout
    assert sha(m1) == sha(m2)


def test_simulate_default_count(tmp_path):
    result = run("simulate", "--out", str(tmp_path / "default.csv"))
    assert result.returncode == 0
    assert "wrote 600 trajectories" in result.stdout


def test_train_tiny_corpus_under_a_minute(tmp_path):
    corpus = tmp_path / "tiny.csv"
    assert run("simulate", "--out", str(corpus), "--seed", "1",
               "--set", "data.simulator.count=10").returncode == 0
    started = time.monotonic()
    result = run("train", str(corpus), "--out", str(tmp_path / "tiny.ktm"))
    elapsed = time.monotonic() - started
    assert result.returncode == 0, result.stderr
    assert elapsed < 60.0


def test_train_missing_corpus_exits_2(tmp_path):
    result = run("train", str(tmp_path / "nope.csv"), "--out", str(tmp_path / "m.ktm"))
    assert result.returncode == 2
    assert "cannot open" in result.stderr


def test_unknown_config_key_exits_2(corpus, tmp_path):
    result = run("train", str(corpus), "--out", str(tmp_path / "m.ktm"),
                 "--set", "mdn.hidden=8")
    assert result.returncode == 2
    assert "unknown key" in result.stderr


def test_usage_error_exits_2():
    assert run("train").returncode == 2
    assert run("frobnicate").returncode == 2


def test_predict_outputs(corpus, tmp_path):
    model = tmp_path / "model.ktm"
    assert run("train", str(corpus), "--out", str(model), "--seed", "4",
               *SMALL).returncode == 0

    # single-trajectory query file
    query = tmp_path / "query.csv"
    lines = corpus.read_text().splitlines()
    first_id = lines[1].split(",")[0]
    observed = [ln for ln in lines[1:] if ln.startswith(first_id + ",")][:10]
    query.write_text("id,t,x,y\n" + "\n".join(observed) + "\n")

    out = tmp_path / "pred"
    result = run("predict", "--model", str(model), "--query", str(query),
                 "--samples", "7", "--out", str(out), "--seed", "2",
                 "--set", "eval.horizon=12")
    assert result.returncode == 0, result.stderr

    mixture = json.loads((tmp_path / "pred_mixture.json").read_text())
    assert mixture["components"] == 2
    assert abs(sum(mixture["alphas"]) - 1.0) < 1e-6
    assert len(mixture["means"]) == 2

    samples = (tmp_path / "pred_samples.csv").read_text().splitlines()
    assert samples[0] == "sample,t,x,y"
    assert len(samples) == 1 + 7 * 12

    # n = 0: mixture only, no samples file
    out0 = tmp_path / "pred0"
    result = run("predict", "--model", str(model), "--query", str(query),
                 "--samples", "0", "--out", str(out0))
    assert result.returncode == 0
    assert (tmp_path / "pred0_mixture.json").exists()
    assert not (tmp_path / "pred0_samples.csv").exists()

    # multi-trajectory query rejected
    result = run("predict", "--model", str(model), "--query", str(corpus),
                 "--out", str(tmp_path / "bad"))
    assert result.returncode == 1
    assert "exactly one" in result.stderr


def test_eval_outputs_and_echo_rerun(corpus, tmp_path):
    out = tmp_path / "run1"
    result = run("eval", str(corpus), "--out", str(out), "--seed", "8",
                 "--repetitions", "2", *SMALL,
                 "--dump-samples", str(tmp_path / "dump.csv"))
    assert result.returncode == 0, result.stderr

    report = json.loads((tmp_path / "run1_report.json").read_text())
    assert report["repetitions"] == 2
    assert report["methods"] == ["KTM-C", "KTM-W", "CV", "DGM"]
    assert len(report["per_repetition"]) == 2
    table = (tmp_path / "run1_report.txt").read_text()
    assert "KTM-C" in table and "DGM" in table

    dump = (tmp_path / "dump.csv").read_text().splitlines()
    assert dump[0] == "method,sample,t,x,y"
    methods = {ln.split(",")[0] for ln in dump[1:]}
    assert {"observed", "truth", "KTM-C", "KTM-W", "CV", "KTM-sample"} <= methods

    # Re-running from the echoed config reproduces the report bytes.
    echo = tmp_path / "run1_config.json"
    assert echo.exists()
    out2 = tmp_path / "run2"
    result = run("eval", str(corpus), "--out", str(out2), "--config", str(echo))
    assert result.returncode == 0, result.stderr
    assert sha(tmp_path / "run1_report.json") == sha(tmp_path / "run2_report.json")


def test_eval_single_repetition_zero_std(corpus, tmp_path):
    out = tmp_path / "single"
    result = run("eval", str(corpus), "--out", str(out), "--seed", "4",
                 "--repetitions", "1", *SMALL)
    assert result.returncode == 0, result.stderr
    report = json.loads((tmp_path / "single_report.json").read_text())
    for method in ("KTM-C", "KTM-W", "CV"):
        assert report["metrics"]["ed"][method]["std"] == 0.0
