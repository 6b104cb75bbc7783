import json
import os

import pytest

from idgnn.cli import main
from idgnn.datasets import GraphRecord, load_jsonl, save_graph, save_jsonl
from idgnn.graph import build_graph, relabel_graph

TWO_K3 = build_graph(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)])
C6 = build_graph(6, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (0, 5)])


def run(argv):
    return main(argv)


class TestGenerate:
    def test_small_world_dataset(self, tmp_path, capsys):
        out = str(tmp_path / "d.jsonl")
        code = run(["generate", "--family", "small-world", "--n", "40", "--k", "4",
                    "--p", "0.2", "--count", "64", "--seed", "1", "--out", out])
        assert code == 0
        lines = open(out).read().strip().split("\n")
        assert len(lines) == 64
        assert os.path.exists(out + ".manifest.json")

    def test_rerun_byte_identical(self, tmp_path):
        a, b = str(tmp_path / "a.jsonl"), str(tmp_path / "b.jsonl")
        argv = ["generate", "--family", "scale-free", "--n", "30", "--m", "2",
                "--p-triad", "0.4", "--count", "8", "--seed", "3", "--out"]
        assert run(argv + [a]) == 0
        assert run(argv + [b]) == 0
        assert open(a, "rb").read() == open(b, "rb").read()

    def test_parity_error_exit_2(self, tmp_path, capsys):
        out = str(tmp_path / "d.jsonl")
        code = run(["generate", "--family", "d-regular", "--n", "5", "--d", "3",
                    "--count", "1", "--seed", "0", "--out", out])
        assert code == 2
        assert "even" in capsys.readouterr().err

    def test_missing_family_param(self, tmp_path):
        out = str(tmp_path / "d.jsonl")
        code = run(["generate", "--family", "d-regular", "--n", "8",
                    "--count", "1", "--seed", "0", "--out", out])
        assert code == 2


class TestFeatures:
    def test_triangle_free_third_column_zero(self, tmp_path):
        path = str(tmp_path / "in.jsonl")
        p4 = build_graph(4, [(0, 1), (1, 2), (2, 3)])
        save_jsonl([GraphRecord(p4)], path)
        out = str(tmp_path / "out.jsonl")
        assert run(["features", "--data", path, "--k", "3", "--out", out]) == 0
        rec = load_jsonl(out)[0]
        feats = rec.graph.node_features
        assert feats.shape == (4, 3)
        assert not feats[:, 2].any()

    def test_appends_to_existing_features(self, tmp_path):
        path = str(tmp_path / "in.jsonl")
        g = build_graph(3, [(0, 1), (1, 2), (0, 2)], node_features=[[5.0]] * 3)
        save_jsonl([GraphRecord(g, label=1)], path)
        out = str(tmp_path / "out.jsonl")
        assert run(["features", "--data", path, "--k", "2", "--out", out]) == 0
        rec = load_jsonl(out)[0]
        assert rec.label == 1
        assert rec.graph.node_features.shape == (3, 3)
        assert rec.graph.node_features[:, 0].tolist() == [5.0] * 3

    def test_malformed_jsonl_exit_2(self, tmp_path, capsys):
        path = tmp_path / "bad.jsonl"
        path.write_text("{}\n{broken\n")
        out = str(tmp_path / "out.jsonl")
        assert run(["features", "--data", str(path), "--k", "2", "--out", out]) == 2
        assert "line" in capsys.readouterr().err


class TestWl:
    def test_compare_blind_pair(self, tmp_path, capsys):
        a, b = str(tmp_path / "a.json"), str(tmp_path / "b.json")
        save_graph(TWO_K3, a)
        save_graph(C6, b)
        assert run(["wl", "compare", a, b]) == 0
        out = capsys.readouterr().out
        assert "WL-indistinguishable, NOT isomorphic" in out

    def test_compare_relabeled(self, tmp_path, capsys):
        g = build_graph(5, [(0, 1), (1, 2), (2, 3), (3, 4), (0, 4)])
        h = relabel_graph(g, [3, 1, 4, 0, 2])
        a, b = str(tmp_path / "a.json"), str(tmp_path / "b.json")
        save_graph(g, a)
        save_graph(h, b)
        assert run(["wl", "compare", a, b]) == 0
        assert "verdict: isomorphic" in capsys.readouterr().out

    def test_hash_prints_16_hex(self, tmp_path, capsys):
        a = str(tmp_path / "a.json")
        save_graph(C6, a)
        assert run(["wl", "hash", a]) == 0
        line = capsys.readouterr().out.strip()
        assert len(line) == 16
        int(line, 16)

    def test_dedupe(self, tmp_path, capsys):
        g = build_graph(4, [(0, 1), (1, 2), (2, 3)])
        h = relabel_graph(g, [2, 0, 3, 1])
        other = build_graph(4, [(0, 1), (1, 2), (2, 3), (3, 0)])
        path = str(tmp_path / "in.jsonl")
        save_jsonl([GraphRecord(g), GraphRecord(h), GraphRecord(other)], path)
        out = str(tmp_path / "out.jsonl")
        assert run(["wl", "dedupe", "--data", path, "--out", out]) == 0
        assert len(load_jsonl(out)) == 2

    def test_missing_file_exit_2(self, tmp_path):
        assert run(["wl", "hash", str(tmp_path / "nope.json")]) == 2


class TestExpressiveness:
    def test_small_run(self, tmp_path, capsys):
        out = str(tmp_path / "report.json")
        code = run(["expressiveness", "--n", "12", "--d", "3", "--count", "6",
                    "--k-list", "3,4,5", "--seed", "2", "--out", out])
        assert code == 0
        report = json.load(open(out))
        fracs = [report["fractions"][k] for k in ("3", "4", "5")]
        assert fracs == sorted(fracs)
        assert report["timestamp"] is None
        csv_path = str(tmp_path / "report.csv")
        header = open(csv_path).read().split("\n")[0]
        assert header == "n,d,graph_count,wl_baseline,K=3,K=4,K=5"

    def test_rerun_byte_identical(self, tmp_path):
        argv = ["expressiveness", "--n", "10", "--d", "3", "--count", "4",
                "--k-list", "3", "--seed", "5", "--out"]
        a, b = str(tmp_path / "a.json"), str(tmp_path / "b.json")
        assert run(argv + [a]) == 0
        assert run(argv + [b]) == 0
        assert open(a, "rb").read() == open(b, "rb").read()


@pytest.fixture()
def tiny_dataset(tmp_path):
    path = str(tmp_path / "data.jsonl")
    assert run(["generate", "--family", "small-world", "--n", "16", "--k", "4",
                "--p", "0.3", "--count", "8", "--seed", "4", "--out", path]) == 0
    return path


class TestTrainEval:
    def test_train_writes_checkpoint_and_report(self, tmp_path, tiny_dataset, capsys):
        ckpt = str(tmp_path / "m.ckpt")
        rep = str(tmp_path / "r.json")
        code = run(["train", "--data", tiny_dataset, "--task", "node-cc",
                    "--variant", "id-fast", "--epochs", "3", "--hidden", "8",
                    "--seed", "0", "--out", ckpt, "--report", rep])
        assert code == 0
        report = json.load(open(rep))
        assert report["wiring"] == "node_head"
        assert report["config"]["variant"] == "id_fast"
        assert len(report["train_losses"]) == 3
        assert report["wall_clock_seconds"] is None
        assert os.path.exists(ckpt)

    def test_train_rerun_identical_report(self, tmp_path, tiny_dataset):
        reports = []
        for name in ("r1.json", "r2.json"):
            rep = str(tmp_path / name)
            ckpt = str(tmp_path / (name + ".ckpt"))
            assert run(["train", "--data", tiny_dataset, "--task", "graph-cc",
                        "--epochs", "2", "--hidden", "6", "--seed", "1",
                        "--out", ckpt, "--report", rep]) == 0
            reports.append(open(rep, "rb").read())
        assert reports[0] == reports[1]

    def test_edge_task_id_full_wiring(self, tmp_path, tiny_dataset):
        ckpt = str(tmp_path / "m.ckpt")
        rep = str(tmp_path / "r.json")
        code = run(["train", "--data", tiny_dataset, "--task", "edge-spd",
                    "--flavor", "gcn", "--variant", "id-full", "--epochs", "1",
                    "--hidden", "6", "--pairs-per-graph", "4", "--seed", "0",
                    "--out", ckpt, "--report", rep])
        assert code == 0
        report = json.load(open(rep))
        assert report["wiring"] == "conditional"
        assert report["config"]["num_layers"] == 5  # edge default

    def test_missing_dataset_exit_2(self, tmp_path):
        code = run(["train", "--data", str(tmp_path / "nope.jsonl"),
                    "--task", "node-cc", "--epochs", "1",
                    "--out", str(tmp_path / "m.ckpt")])
        assert code == 2

    def test_eval_roundtrip(self, tmp_path, tiny_dataset, capsys):
        ckpt = str(tmp_path / "m.ckpt")
        assert run(["train", "--data", tiny_dataset, "--task", "node-cc",
                    "--epochs", "2", "--hidden", "6", "--seed", "0",
                    "--out", ckpt]) == 0
        capsys.readouterr()
        assert run(["eval", "--model", ckpt, "--data", tiny_dataset,
                    "--task", "node-cc"]) == 0
        result = json.loads(capsys.readouterr().out.strip().split("\n")[-1])
        assert 0.0 <= result["accuracy"] <= 1.0


class TestReport:
    def test_csv_summary(self, tmp_path, tiny_dataset, capsys):
        reports = []
        for seed in ("0", "1"):
            rep = str(tmp_path / f"r{seed}.json")
            ckpt = str(tmp_path / f"m{seed}.ckpt")
            assert run(["train", "--data", tiny_dataset, "--task", "node-cc",
                        "--epochs", "1", "--hidden", "6", "--seed", seed,
                        "--out", ckpt, "--report", rep]) == 0
            reports.append(rep)
        out = str(tmp_path / "summary.csv")
        assert run(["report", *reports, "--out", out]) == 0
        lines = open(out).read().strip().split("\n")
        assert lines[0] == "report,flavor,variant,task,seed,accuracy"
        assert len(lines) == 3


def test_capability_limit_exit_3(tmp_path, capsys):
    # K4 is the only 3-regular graph on 4 nodes, so a pool of 2 pairwise
    # non-isomorphic graphs exhausts the regeneration budget
    out = str(tmp_path / "r.json")
    code = run(["expressiveness", "--n", "4", "--d", "3", "--count", "2",
                "--k-list", "3", "--seed", "0", "--out", out])
    assert code == 3
    assert "capability" in capsys.readouterr().err


def test_numeric_failure_exit_4(tmp_path, monkeypatch, capsys):
    from idgnn import cli
    from idgnn.errors import NumericError

    def boom(*args, **kwargs):
        raise NumericError("loss went non-finite")

    monkeypatch.setattr(cli, "train", boom)
    data = str(tmp_path / "d.jsonl")
    assert run(["generate", "--family", "d-regular", "--n", "8", "--d", "3",
                "--count", "5", "--seed", "0", "--out", data]) == 0
    code = run(["train", "--data", data, "--task", "node-cc", "--epochs", "1",
                "--out", str(tmp_path / "m.ckpt")])
    assert code == 4
    assert "numeric" in capsys.readouterr().err


def test_manifest_contents(tmp_path):
    out = str(tmp_path / "d.jsonl")
    assert run(["generate", "--family", "d-regular", "--n", "8", "--d", "3",
                "--count", "2", "--seed", "9", "--out", out]) == 0
    manifest = json.load(open(out + ".manifest.json"))
    assert manifest["subcommand"] == "generate"
    assert manifest["flags"]["seed"] == 9
    assert manifest["rng"]["name"] == "pcg64"
