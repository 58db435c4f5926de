import csv
import io
import json

import numpy as np
import pytest

from scripts.cli import main
from src import storage

TINY = "the cat sat\nthe dog sat\na cat ran\nthe cat ran home\n"


@pytest.fixture
def tiny_file(tmp_path):
    path = tmp_path / "tiny.txt"
    path.write_text(TINY, encoding="utf-8")
    return path


def _json(capsys):
    return json.loads(capsys.readouterr().out)


def _csv(capsys):
    return list(csv.DictReader(io.StringIO(capsys.readouterr().out)))


def test_build_model_and_arp(tiny_file, tmp_path, capsys):
    model_path = tmp_path / "model.json"
    assert main(["--out", str(model_path), "build-model", "--corpus", str(tiny_file)]) == 0
    assert "n=7" in capsys.readouterr().out
    assert main(["arp", "--model", str(model_path)]) == 0
    report = _json(capsys)
    assert report["n"] == 7
    assert report["transform"] == "none"
    assert report["arp_exact"] is not None or report["diverged"]


def test_build_model_needs_out(tiny_file, capsys):
    assert main(["build-model", "--corpus", str(tiny_file)]) == 2
    assert "--out" in capsys.readouterr().err


def test_arp_on_two_state_model(two_state, tmp_path, capsys):
    path = tmp_path / "two.json"
    storage.save_model(two_state, path)
    assert main(["arp", "--model", str(path), "--tightened"]) == 0
    report = _json(capsys)
    assert report["arp_exact"] == pytest.approx(2 / 3)
    assert report["bound_spectral"] == pytest.approx(2 / 3)
    assert "bound_variance_tightened" in report
    assert main(["--format", "csv", "arp", "--model", str(path)]) == 0
    rows = _csv(capsys)
    assert float(rows[0]["arp.value"]) == pytest.approx(2 / 3)


def test_arp_with_transform_reports_divergence(model_factory, tmp_path, capsys):
    # greedy turns both self loops into certain transitions
    model = model_factory(np.diag([0.9, 0.9]), np.array([0.1, 0.1]), ("x", "y"))
    path = tmp_path / "loops.json"
    storage.save_model(model, path)
    assert main(["arp", "--model", str(path)]) == 0
    assert _json(capsys)["diverged"] is False
    assert main(["arp", "--model", str(path), "--transform", "greedy"]) == 0
    report = _json(capsys)
    assert report["diverged"] is True
    assert report["arp_exact"] is None
    assert "precondition_violated" in report["bound_spectral"]


def test_bad_transform_is_a_usage_error(tiny_file, capsys):
    assert main(["arp", "--corpus", str(tiny_file), "--transform", "beam:4"]) == 2
    assert "beam" in capsys.readouterr().err


def test_unknown_command_and_missing_file(tmp_path, capsys):
    assert main(["frobnicate"]) == 2
    assert main(["arp", "--corpus", str(tmp_path / "missing.txt")]) == 1
    assert "missing.txt" in capsys.readouterr().err


def test_generate_is_seeded(tiny_file, tmp_path, capsys):
    args = ["--seed", "5", "generate", "--corpus", str(tiny_file), "--budget", "4", "--max-len", "6"]
    assert main(args) == 0
    first = capsys.readouterr().out
    assert main(args) == 0
    assert capsys.readouterr().out == first
    lines = first.splitlines()
    assert len(lines) == 4
    assert all(1 <= len(line.split()) <= 6 for line in lines)
    out = tmp_path / "gen.txt"
    assert main(["--seed", "5", "--out", str(out), "generate", "--corpus", str(tiny_file), "--budget", "4", "--max-len", "6"]) == 0
    assert out.read_text(encoding="utf-8") == first


def test_score_and_ppl_c(tiny_file, tmp_path, capsys):
    seqs = tmp_path / "seqs.txt"
    seqs.write_text("a b a b a\nx\n", encoding="utf-8")
    assert main(["score", str(seqs), "--window", "2", "--orders", "2"]) == 0
    report = _json(capsys)
    assert report["rep_w"] == pytest.approx(0.3)
    assert report["n_sequences"] == 2
    assert "per_sequence" not in report
    assert main(["score", str(seqs), "--ppl-c"]) == 2
    assert main(["score", str(tiny_file), "--ppl-c", "--reference", str(tiny_file), "--corpus", str(tiny_file)]) == 0
    assert _json(capsys)["ppl_c"] == pytest.approx(1.0)
    assert main(["--format", "csv", "score", str(seqs), "--per-sequence", "--orders", "2"]) == 0
    rows = _csv(capsys)
    assert [row["length"] for row in rows] == ["5", "1"]


def test_encode_writes_tables(tiny_file, tmp_path, capsys):
    out_dir = tmp_path / "enc"
    assert main(["--out", str(out_dir), "encode", "--corpus", str(tiny_file), "--merges", "30", "--gamma", "0.5"]) == 0
    summary = _json(capsys)
    assert summary["round_trip"] is True
    assert summary["mode"] == "bpe+re"
    assert storage.load_merges(out_dir / "bpe.merges", expected_kind="bpe") is not None
    assert storage.load_merges(out_dir / "re.merges", expected_kind="re") is not None
    assert len((out_dir / "encoded.txt").read_text(encoding="utf-8").splitlines()) == 4
    assert main(["encode", "--corpus", str(tiny_file)]) == 2
    assert main(["--out", str(out_dir), "encode", "--corpus", str(tiny_file), "--gamma", "0"]) == 2


def test_exp_concentration_default_chain(capsys):
    args = ["--format", "json", "exp-concentration", "--trials", "20", "--a-grid", "0.1,0.5", "--moment-trials", "50"]
    assert main(args) == 0
    payload = _json(capsys)
    assert payload["zeta_n"] == pytest.approx(5.0)
    assert payload["violations"] == []
    assert [row["a"] for row in payload["grid"]] == [0.1, 0.5]
    assert "moments" in payload


def test_exp_concentration_sparse_model_fails_with_hint(tiny_file, capsys):
    assert main(["exp-concentration", "--corpus", str(tiny_file), "--trials", "5"]) == 1
    assert "--synthetic" in capsys.readouterr().err


def test_exp_correlation_csv(tiny_file, capsys):
    args = ["exp-correlation", "--corpus", str(tiny_file), "--temperatures", "1.0,0.5", "--budget", "5", "--max-len", "8"]
    assert main(args) == 0
    rows = _csv(capsys)
    assert [float(row["t"]) for row in rows] == [1.0, 0.5]
    assert set(rows[0]) == {"t", "arp", "rep_w", "rep_2", "rep_3", "rep_r", "diverged", "zeta_n"}


def test_exp_inflow_grouped(tiny_file, capsys):
    args = ["exp-inflow", "--corpus", str(tiny_file), "--gamma", "0.6", "--budget", "8", "--max-len", "6", "--grouped"]
    assert main(args) == 0
    rows = _csv(capsys)
    counts = [int(row["pair_count"]) for row in rows]
    assert counts == sorted(counts)
    assert sum(int(row["sequences"]) for row in rows) == 8


def test_exp_methods_and_balance(tiny_file, capsys):
    args = ["exp-methods", "--corpus", str(tiny_file), "--methods", "greedy", "topk:2", "--budget", "4", "--max-len", "6"]
    assert main(args) == 0
    rows = _csv(capsys)
    assert [row["method"] for row in rows] == ["greedy", "topk:2"]
    assert "ppl_c" in rows[0]
    args = [
        "exp-balance", "--corpus", str(tiny_file), "--prefixes", "topk:2",
        "--temperatures", "1.0,0.5", "--budget", "4", "--max-len", "6",
    ]
    assert main(args) == 0
    rows = _csv(capsys)
    assert [row["method"] for row in rows] == ["topk:2+temp:1.0", "topk:2+temp:0.5"]


def test_exp_rebalance(tiny_file, capsys):
    args = ["exp-rebalance", "--corpus", str(tiny_file), "--merges", "20", "--gamma", "0.5", "--budget", "4", "--max-len", "6"]
    assert main(args) == 0
    payload = _json(capsys)
    assert set(payload) >= {"bpe", "bpe+re", "re", "gamma"}
    assert payload["bpe+re"]["max_transition"] <= payload["bpe"]["max_transition"]


def test_rebalance_min_count_reaches_re(tiny_file, capsys):
    base = ["--format", "json", "exp-rebalance", "--corpus", str(tiny_file), "--merges", "20", "--gamma", "0.5", "--budget", "4", "--max-len", "6"]
    assert main(base) == 0
    assert _json(capsys)["re"]["min_count"] == 5
    assert main(base + ["--min-count", "1"]) == 0
    assert _json(capsys)["re"]["min_count"] == 1
    assert main(base + ["--min-count", "0"]) == 2


def test_missing_corpus_uses_generated_default(tiny_file, monkeypatch, capsys):
    calls = []

    def fake_default():
        calls.append(1)
        return tiny_file

    monkeypatch.setattr("scripts.cli.default_corpus", fake_default)
    args = ["exp-correlation", "--temperatures", "1.0", "--budget", "3", "--max-len", "6"]
    assert main(args) == 0
    assert calls == [1]
    assert len(_csv(capsys)) == 1
