import json

from scripts.run_experiments import main

TINY = "the cat sat\nthe dog sat\na cat ran\nthe cat ran home\n"


def test_suite_writes_every_artifact(tmp_path, capsys):
    corpus = tmp_path / "tiny.txt"
    corpus.write_text(TINY, encoding="utf-8")
    out = tmp_path / "results"
    main(["--corpus", str(corpus), "--output-dir", str(out), "--budget", "3", "--max-len", "6", "--trials", "20"])
    expected = {
        "arp.json",
        "correlation.csv",
        "inflow.csv",
        "inflow_groups.csv",
        "methods.csv",
        "balance.csv",
        "rebalance.json",
        "concentration.csv",
        "concentration.json",
    }
    assert {p.name for p in out.iterdir()} == expected
    assert json.loads((out / "concentration.json").read_text(encoding="utf-8"))["violations"] == []
    assert len((out / "methods.csv").read_text(encoding="utf-8").splitlines()) == 11
    assert "Results saved in" in capsys.readouterr().out
