import json
from pathlib import Path

import pytest

from aqfp_sc.cli import main

CONFIGS = Path(__file__).resolve().parents[1] / "docs" / "configs"


def write(tmp_path, name, doc):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return p


def test_table_reproducible(tmp_path):
    cfg = write(tmp_path, "t.json", {"kind": "pool", "sizes": [4], "lengths": [128, 256], "trials": 20})
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["table", "--config", str(cfg), "--seed", "9", "--out", str(a)]) == 0
    assert main(["table", "--config", str(cfg), "--seed", "9", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert a.read_text().splitlines()[0] == "M,128,256"


def test_table_json(tmp_path):
    cfg = write(tmp_path, "t.json", {"kind": "fe", "sizes": [3], "lengths": [64], "trials": 5})
    out = tmp_path / "t.json.out.json"
    assert main(["table", "--config", str(cfg), "--seed", "1", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["cells"][0]["M"] == 3


def test_elaborate_csv_and_json(tmp_path):
    cfg = CONFIGS / "elaborate.json"
    out = tmp_path / "r.csv"
    assert main(["elaborate", "--config", str(cfg), "--seed", "0", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "block,M,N,jj_total,phase_depth,latency_ns,energy_units"
    assert len(lines) == 4
    js = tmp_path / "r.json"
    assert main(["elaborate", "--config", str(cfg), "--seed", "0", "--out", str(js)]) == 0
    doc = json.loads(js.read_text())
    cat = next(b for b in doc["blocks"] if b["block"] == "categorization")
    assert cat["pre_splitting_cells"]["MAJ3"] == 4


def test_unknown_kind_is_usage_error(tmp_path):
    cfg = write(tmp_path, "e.json", {"kind": "conv", "M": 9})
    assert main(["elaborate", "--config", str(cfg), "--out", str(tmp_path / "x.json")]) == 1
    assert not (tmp_path / "x.json").exists()


def test_usage_errors(tmp_path, capsys):
    assert main(["bogus"]) == 1
    assert main(["table", "--out", "x.csv"]) == 1
    assert main(["table", "--config", str(tmp_path / "missing.json"), "--out", "x.csv"]) == 1
    assert main(["rng", "--config", "x", "--seed", "-1", "--out", "y"]) == 1


def test_validation_error(tmp_path):
    cfg = write(tmp_path, "t.json", {"kind": "fe", "trials": 0})
    assert main(["table", "--config", str(cfg), "--out", str(tmp_path / "o.csv")]) == 2


def test_synth(tmp_path):
    out = tmp_path / "s.json"
    assert main(["synth", "--config", str(CONFIGS / "synth.json"), "--seed", "0", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["jj_after"] <= doc["jj_before"]


def test_synth_from_netlist(tmp_path):
    net = {
        "nodes": [{"id": 0, "kind": "INPUT"}, {"id": 1, "kind": "INPUT"}, {"id": 2, "kind": "AND2", "inputs": [0, 1]}],
        "inputs": [0, 1],
        "outputs": [2],
    }
    cfg = write(tmp_path, "s.json", {"netlist": net})
    out = tmp_path / "o.json"
    assert main(["synth", "--config", str(cfg), "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["equivalence"]["method"] == "exhaustive"


def test_rng(tmp_path, capsys):
    cfg = write(tmp_path, "r.json", {"size": 5, "cycles": 20000})
    out = tmp_path / "r.csv"
    assert main(["rng", "--config", str(cfg), "--seed", "3", "--out", str(out)]) == 0
    text = out.read_text()
    assert text.startswith("word,bias,")
    assert "max_overlap,1" in text


def test_network(tmp_path, monkeypatch):
    cfg = write(tmp_path, "n.json", {
        "network": str(CONFIGS / "demo_network.json"),
        "inputs": {"synthetic": 3},
        "stream_lengths": [64],
    })
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["network", "--config", str(cfg), "--seed", "2", "--out", str(a)]) == 0
    monkeypatch.setenv("AQFP_SC_THREADS", "2")
    assert main(["network", "--config", str(cfg), "--seed", "2", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert len(json.loads(a.read_text())["runs"][0]["sc_top"]) == 3


@pytest.mark.parametrize("name", ["table_fe.json", "table_pool.json", "table_cat.json", "network_run.json", "elaborate.json", "synth.json", "rng.json"])
def test_sample_configs_exist(name):
    assert json.loads((CONFIGS / name).read_text())
