import io
import json
import re

import pytest

from rcc8.algebra import default_table, parse_relation
from rcc8.cli import main
from rcc8.harness import ExperimentSpec, ScriptedEndpoint, TranscriptStore, run_experiment
from rcc8.scoring import render_relation_set

CELL = re.compile(r"If X?(\w+)\(x,y\) and X?(\w+)\(y,z\)")


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), out)
    return code, out.getvalue()


def test_compose():
    code, out = run("algebra", "compose", "DC", "DC")
    assert code == 0
    assert out.split() == ["DC", "EC", "PO", "TPP", "NTPP", "TPPi", "NTPPi", "EQ"]
    assert run("algebra", "compose", "tpp", "ntpp") == (0, "NTPP\n")


def test_converse_and_neighbors():
    assert run("algebra", "converse", "TPP") == (0, "TPPi\n")
    assert run("algebra", "neighbors", "DC") == (0, "EC\n")


def test_usage_errors(capsys):
    assert run("algebra", "compose", "DC", "XYZ")[0] == 2
    assert run("bogus")[0] == 2
    assert run()[0] == 2
    assert run("oracle", "soundness", "--grid", "six")[0] == 2


def test_network_solve(tmp_path):
    good = tmp_path / "good.json"
    good.write_text(json.dumps([{"x": "a", "y": "b", "rels": ["TPP"]},
                                {"x": "b", "y": "c", "rels": ["NTPP"]}]))
    code, out = run("network", "solve", str(good), "--scenario")
    assert code == 0
    assert "NTPP(a,c)" in out
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps([{"x": "a", "y": "b", "rels": ["NTPP"]},
                               {"x": "b", "y": "c", "rels": ["NTPP"]},
                               {"x": "a", "y": "c", "rels": ["DC", "EC"]}]))
    assert run("network", "solve", str(bad)) == (1, "INCONSISTENT\n")
    clash = tmp_path / "clash.json"
    clash.write_text(json.dumps([{"x": "a", "y": "b", "rels": ["DC"]},
                                 {"x": "a", "y": "b", "rels": ["EC"]}]))
    assert run("network", "solve", str(clash)) == (1, "INCONSISTENT\n")
    assert run("network", "solve", str(tmp_path / "missing.json"))[0] == 2


def test_seed_required_in_ci(monkeypatch):
    monkeypatch.setenv("RCC8_CI", "1")
    assert run("oracle", "soundness", "--samples", "10")[0] == 2
    assert run("oracle", "soundness", "--samples", "10", "--seed", "1")[0] == 0


def test_soundness_small(capsys):
    code, out = run("oracle", "soundness", "--samples", "2000", "--grid", "5x5", "--seed", "3")
    assert code == 0 and out == ""
    assert "0 violations in 2000 samples" in capsys.readouterr().err


def test_soundness_detects_corruption(tmp_path, table_doc):
    table_doc["DC|DC"] = ["DC", "EC"]
    path = tmp_path / "bad_table.json"
    path.write_text(json.dumps(table_doc))
    code, out = run("oracle", "soundness", "--samples", "5000", "--seed", "42", "--table", str(path))
    assert code == 1
    first = json.loads(out.splitlines()[0])
    assert set(first) >= {"x", "y", "z", "relations"}


def _answer(prompt):
    m = CELL.search(prompt)
    if not m:
        return "Understood."
    rels = default_table()[parse_relation(m.group(1)), parse_relation(m.group(2))]
    return "So the possible relationships between x and z are:\n" + render_relation_set(rels).replace(", ", "\n")


@pytest.fixture
def transcript(tmp_path):
    path = tmp_path / "run.jsonl"
    run_experiment(ExperimentSpec("composition"), ScriptedEndpoint(_answer),
                   TranscriptStore(path))
    return path


def test_eval_score_is_deterministic(tmp_path, transcript):
    a, b = tmp_path / "a", tmp_path / "b"
    code_a, out_a = run("eval", "score", "--experiment", "composition",
                        "--transcript", str(transcript), "--out", str(a))
    code_b, out_b = run("eval", "score", "--experiment", "composition",
                        "--transcript", str(transcript), "--out", str(b))
    assert code_a == code_b == 0
    assert out_a == out_b
    assert json.loads(out_a)["accuracy"] == "100.00%"
    for name in ("report.md", "verdicts.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_eval_report_and_corrections(tmp_path, transcript):
    code, md = run("eval", "report", "--transcript", str(transcript))
    assert code == 0 and "D (DC), E(EC)" in md
    code, csv_text = run("eval", "report", "--transcript", str(transcript), "--format", "csv")
    assert len(csv_text.splitlines()) == 393
    fix = tmp_path / "fix.json"
    fix.write_text(json.dumps({"DC|DC": ["DC"]}))
    code, out = run("eval", "score", "--transcript", str(transcript),
                    "--corrections", str(fix), "--out", str(tmp_path / "c"))
    assert json.loads(out)["fn"] == 7


def test_eval_score_wrong_kind(tmp_path, transcript):
    assert run("eval", "score", "--experiment", "continuity", "--transcript", str(transcript),
               "--out", str(tmp_path / "o"))[0] == 2


def test_eval_run_refuses_overwrite(tmp_path, transcript):
    code, _ = run("eval", "run", "--experiment", "composition", "--endpoint", "http://127.0.0.1:9",
                  "--model", "m", "--out", str(transcript))
    assert code == 2


def test_eval_run_unreachable(tmp_path):
    out = tmp_path / "new.jsonl"
    code, _ = run("eval", "run", "--experiment", "continuity", "--endpoint", "http://127.0.0.1:9",
                  "--model", "m", "--out", str(out), "--retries", "0", "--delay", "0",
                  "--timeout", "0.5")
    assert code == 1
    assert not out.exists() or out.read_text() == ""
