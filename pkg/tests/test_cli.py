import json
import os
from pathlib import Path

import pytest

from conftest import gate_netlist
from dft_forge.cli import main
from lint_fixtures import FIXTURES

GOLDEN = Path(__file__).parent / "golden"


def _golden(name: str, text: str) -> None:
    path = GOLDEN / name
    if os.environ.get("DFT_FORGE_UPDATE_GOLDEN"):
        path.write_text(text)
    assert text == path.read_text()


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def _fixture(tmp_path, name):
    fx = next(f for f in FIXTURES if f.name == name)
    path = tmp_path / f"fixture_{fx.kind.name.lower()}.json"
    path.write_text(fx.build())
    return path


def test_lint_ffcknp_json_strict(tmp_path, capsys):
    path = _fixture(tmp_path, "ffcknp_ripple")
    code, out, _ = run(capsys, "lint", path, "--json", "--strict")
    assert code == 1
    doc = json.loads(out)
    assert doc["root_causes"] == ["FFCKNP"]
    assert "FFCKNP" in {v["kind"] for v in doc["violations"]}
    _golden("lint_ffcknp.json", out)
    code, out, _ = run(capsys, "lint", path)
    assert code == 0 and out.startswith("DFT lint: ")


def test_lint_clean_is_zero_even_strict(tmp_path, capsys):
    path = tmp_path / "and.json"
    path.write_text(gate_netlist("and"))
    code, out, _ = run(capsys, "lint", path, "--strict", "--json")
    assert code == 0 and json.loads(out)["label"] == [0, 0, 0, 0]


def test_equiv_json_golden(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    a.write_text(gate_netlist("and"))
    b.write_text(gate_netlist("or"))
    code, out, _ = run(capsys, "equiv", a, b, "--json")
    assert code == 1
    _golden("equiv_and_or.json", out)
    code, out, _ = run(capsys, "equiv", a, a, "--json")
    assert code == 0 and json.loads(out)["verdict"] == "EQUIVALENT_BOUNDED"


def test_usage_errors(tmp_path, capsys):
    code, _, err = run(capsys, "lint")
    assert code == 2 and "usage" in err
    code, _, err = run(capsys, "lint", "x.json", "--bogus")
    assert code == 2
    code, _, err = run(capsys, "lint", tmp_path / "missing.json")
    assert code == 2 and "usage" in err and "missing.json" in err
    code, _, err = run(capsys, "frobnicate")
    assert code == 2


def test_bad_netlist_is_domain_failure(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{"modules": {}}')
    code, _, err = run(capsys, "lint", path)
    assert code == 1 and err.startswith("error:")


def test_refuses_to_escape_output_dir(tmp_path, capsys):
    designs = tmp_path / "d.json"
    designs.write_text(gate_netlist("and"))
    out = tmp_path / "out"
    code, _, err = run(capsys, "vectorize", designs, "--tfidf", tmp_path / "none.json", "--out", out)
    assert code == 2


def test_config_error_is_usage(tmp_path, capsys):
    cfg = tmp_path / "c.toml"
    cfg.write_text("nope = 1\n")
    path = _fixture(tmp_path, "ffcknp_ripple")
    code, _, err = run(capsys, "lint", path, "--config", cfg)
    assert code == 2 and "nope" in err


def test_repair_without_llm_is_usage(tmp_path, capsys):
    path = _fixture(tmp_path, "acncpi_const_reset")
    code, _, err = run(capsys, "repair", "--design", path, "--no-rag", "--out", tmp_path)
    assert code == 2 and "LLM" in err


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """generate -> admit -> partition -> vectorize-fit -> train -> index, through the CLI."""
    root = tmp_path_factory.mktemp("cli")
    out = root / "out"
    assert main(["generate", "--n", "40", "--seed", "1", "--out", str(out)]) == 0
    designs = sorted((out / "designs").glob("*.json"))
    assert main(["admit", *map(str, designs), "--out", str(out), "--jobs", "2"]) == 0
    assert main(["partition", "--admissions", str(out / "admissions.jsonl"), "--seed", "1", "--out", str(out)]) == 0
    assert main(["vectorize-fit", "--manifest", str(out / "manifest.jsonl"), "--out", str(out)]) == 0
    assert main(["train", "--manifest", str(out / "manifest.jsonl"), "--tfidf", str(out / "tfidf.json"),
                 "--epochs", "5", "--out", str(out)]) == 0
    assert main(["index", "--manifest", str(out / "manifest.jsonl"), "--tfidf", str(out / "tfidf.json"),
                 "--model", str(out / "model.npz"), "--fixes", str(out / "fixes"), "--out", str(out)]) == 0
    return out


def test_pipeline_outputs(workspace, capsys):
    capsys.readouterr()
    for name in ("admissions.jsonl", "manifest.jsonl", "manifest.config.json", "tfidf.json", "model.npz",
                 "training_log.csv", "index/index.json"):
        assert (workspace / name).exists(), name
    log = (workspace / "training_log.csv").read_text().splitlines()
    assert log[0] == "epoch,L1,L2,L3,L" and len(log) == 7
    entries = [json.loads(l) for l in (workspace / "manifest.jsonl").read_text().splitlines()]
    assert {e["split"] for e in entries} == {"train", "reference", "test"}


def test_retrieve_and_vectorize_schema(workspace, capsys):
    design = sorted((workspace / "designs").glob("*.json"))[0]
    code, out, _ = run(capsys, "retrieve", "--index", workspace / "index", "--design", design,
                       "--tfidf", workspace / "tfidf.json", "--model", workspace / "model.npz", "--json", "--top", 3)
    doc = json.loads(out)
    assert code == 0 and set(doc) == {"best", "s_max", "top"} and len(doc["top"]) == 3
    assert doc["top"][0]["id"] == doc["best"]
    code, out, _ = run(capsys, "retrieve", "--index", workspace / "index", "--design", design,
                       "--tfidf", workspace / "tfidf.json", "--model", workspace / "model.npz")
    best, score = out.split()
    assert best == doc["best"] and float(score) == pytest.approx(doc["s_max"], abs=1e-6)
    code, out, _ = run(capsys, "vectorize", design, "--tfidf", workspace / "tfidf.json", "--json")
    doc = json.loads(out)
    assert set(doc) == {"dim", "oov", "nonzero", "terms"} and doc["dim"] == 512


def test_partition_counts(workspace):
    counts = json.loads((workspace / "manifest.config.json").read_text())
    assert counts["seed"] == 1
    entries = [json.loads(l) for l in (workspace / "manifest.jsonl").read_text().splitlines()]
    per = {}
    for e in entries:
        per.setdefault(e["label"], []).append(e["split"])
    for splits in per.values():
        assert (splits.count("train"), splits.count("reference"), splits.count("test")) == (2, 1, 7)


def test_repair_with_mock(workspace, tmp_path, capsys):
    entries = [json.loads(l) for l in (workspace / "manifest.jsonl").read_text().splitlines()]
    test_id = next(e["id"] for e in entries if e["split"] == "test")
    buggy = workspace / "netlists" / f"{test_id}.json"
    mock = tmp_path / "mock"
    mock.mkdir()
    (mock / "1.txt").write_text("```json\n" + buggy.read_text() + "\n```\n")
    out = tmp_path / "out"
    code, text, _ = run(capsys, "repair", "--design", buggy, "--mock-llm", mock, "--index", workspace / "index",
                        "--tfidf", workspace / "tfidf.json", "--model", workspace / "model.npz", "--k", 2,
                        "--out", out, "--json")
    session = json.loads(text)
    assert code == 1 and session["status"] == "FAILED_MAX_ITER" and len(session["iterations"]) == 2
    assert session["reference_id"] is not None and session["provenance"]["k"] == 2
    assert (out / "sessions" / f"{test_id}.json").read_text() == text
