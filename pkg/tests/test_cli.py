import json
import subprocess
import sys

import pytest

from udgembed.cli import EXIT_INFEASIBLE, EXIT_MALFORMED, EXIT_OK, EXIT_REJECTED, main
from udgembed.graph import Graph, save_graph
from udgembed.hardware import profile_aquila
from udgembed.oracle import plant


@pytest.fixture
def planted(tmp_path):
    inst = plant(6, profile_aquila(), seed=4, connected=True)
    gp, ep = inst.export(tmp_path, "p6")
    return inst, gp, ep


def test_traps_gen(tmp_path, capsys):
    out = tmp_path / "traps.json"
    assert main(["traps", "gen", "--profile", "orion-alpha", "--out", str(out)]) == EXIT_OK
    assert len(json.loads(out.read_text())["traps"]) == 61
    assert main(["traps", "gen", "--profile", "aquila"]) == EXIT_MALFORMED


def test_check_witness(planted, capsys):
    _, gp, ep = planted
    assert main(["check", "--embedding", str(ep), "--graph", str(gp), "--profile", "aquila"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["udg_feasible"] is True


def test_check_infeasible(tmp_path, capsys):
    save_graph(Graph(2), tmp_path / "g.json")
    (tmp_path / "e.json").write_text(json.dumps([[30.0, 30.0], [35.0, 30.0]]))
    code = main(["check", "--embedding", str(tmp_path / "e.json"), "--graph", str(tmp_path / "g.json")])
    assert code == EXIT_INFEASIBLE


def test_malformed_inputs(tmp_path, capsys):
    (tmp_path / "g.json").write_text("not a graph")
    (tmp_path / "e.json").write_text("[[0, 0]]")
    assert main(["check", "--embedding", str(tmp_path / "e.json"), "--graph", str(tmp_path / "g.json")]) == EXIT_MALFORMED
    assert main(["check", "--embedding", str(tmp_path / "missing.json"), "--graph", str(tmp_path / "g.json")]) == EXIT_MALFORMED
    assert main(["embed", "--graph", str(tmp_path / "g.json"), "--profile", "nowhere"]) == EXIT_MALFORMED


def test_embed_and_remap(planted, tmp_path, capsys):
    _, gp, _ = planted
    out = tmp_path / "run"
    assert main(["embed", "--graph", str(gp), "--profile", "aquila", "--seed", "1", "--max-iters", "5000", "--out", str(out)]) == EXIT_OK
    assert {"embedding.json", "train_report.json", "embedding.svg"} <= {p.name for p in out.iterdir()}
    assert main(["check", "--embedding", str(out / "embedding.json"), "--graph", str(gp), "--margin", "0.1"]) == EXIT_OK

    g = Graph(3, [(0, 1), (1, 2)])
    save_graph(g, tmp_path / "path.json")
    (tmp_path / "free.json").write_text(json.dumps({"coords": [[-6.0, 0.0], [0.0, 0.0], [6.0, 0.0]]}))
    remapped = tmp_path / "lattice.json"
    code = main(["remap", "--embedding", str(tmp_path / "free.json"), "--graph", str(tmp_path / "path.json"), "--profile", "orion-alpha", "--out", str(remapped)])
    assert code in (EXIT_OK, EXIT_INFEASIBLE)
    assert main(["check", "--embedding", str(remapped), "--graph", str(tmp_path / "path.json"), "--profile", "orion-alpha"]) == code


def test_embed_precheck_rejection(tmp_path, capsys):
    save_graph(Graph.complete(8), tmp_path / "k8.json")
    assert main(["embed", "--graph", str(tmp_path / "k8.json"), "--out", str(tmp_path / "o")]) == EXIT_REJECTED


def test_ingest_pipeline_report(tmp_path, capsys):
    csv = tmp_path / "sites.csv"
    csv.write_text("id,x,y\na,0,0\nb,100,0\nc,1000,0\nd,1100,0\ne,1050,80\n")
    out = tmp_path / "ant"
    assert main(["ingest-antennas", "--csv", str(csv), "--radius", "140", "--out", str(out)]) == EXIT_OK
    graph = json.loads((out / "graph.json").read_text())
    assert graph["n"] == 5

    data = tmp_path / "data"
    data.mkdir()
    for k in range(3):
        plant(5 + k, profile_aquila(), seed=k).export(data, f"s{k}")
    # embeddings in the data directory are not edge lists; keep graphs only
    for f in data.glob("*.embedding.json"):
        f.unlink()
    run = tmp_path / "run"
    code = main(["pipeline", "--input", str(data), "--profile", "aquila", "--n-max", "6", "--out", str(run)])
    assert code in (EXIT_OK, EXIT_INFEASIBLE)
    assert len(list((run / "samples").glob("*.json"))) == 2
    assert "skipped s2" in capsys.readouterr().err
    report = tmp_path / "summary.json"
    assert main(["report", "--in", str(run), "--out", str(report)]) == EXIT_OK
    doc = json.loads(report.read_text())
    assert doc["sample_count"] == 2
    assert (tmp_path / "summary_success.svg").exists() and (tmp_path / "summary.csv").exists()


def test_console_script_help():
    res = subprocess.run([sys.executable, "-m", "udgembed.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    for command in ("traps", "embed", "remap", "check", "ingest-antennas", "pipeline", "report"):
        assert command in res.stdout
