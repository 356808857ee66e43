import json

import numpy as np
import pytest

from mnci.cli import main
from mnci.formats import read_embeddings, write_embeddings
from mnci.ingest import read_edge_list, read_labels

FAST = ["--dim", "4", "--communities", "2", "--negatives", "2", "--epochs", "1", "--batch", "16"]


@pytest.fixture
def synth_dir(tmp_path):
    out = tmp_path / "data"
    assert main(["synth", "--nodes-per-community", "6", "--communities", "2", "--events-per-node", "3",
                 "--out", str(out)]) == 0
    return out


class TestUsage:
    def test_no_arguments(self, capsys):
        assert main([]) == 1
        assert "usage" in capsys.readouterr().err

    def test_train_without_edges(self, capsys):
        assert main(["train"]) == 1
        assert "--edges" in capsys.readouterr().err

    def test_odd_dim(self, synth_dir, tmp_path, capsys):
        code = main(["train", "--edges", str(synth_dir / "edges.txt"), "--dim", "7", "--out", str(tmp_path / "r")])
        assert code == 1
        assert "dim must be even" in capsys.readouterr().err

    def test_bad_flag_value_named(self, synth_dir, tmp_path, capsys):
        code = main(["train", "--edges", str(synth_dir / "edges.txt"), "--lr", "-1", "--out", str(tmp_path / "r")])
        assert code == 1
        assert "--lr" in capsys.readouterr().err

    def test_missing_input(self, tmp_path):
        assert main(["train", "--edges", str(tmp_path / "nope.txt")]) == 2


class TestSynth:
    def test_byte_identical_and_parses(self, tmp_path, synth_dir):
        again = tmp_path / "again"
        main(["synth", "--nodes-per-community", "6", "--communities", "2", "--events-per-node", "3",
              "--out", str(again)])
        for name in ("edges.txt", "labels.txt"):
            assert (again / name).read_bytes() == (synth_dir / name).read_bytes()
        assert len(read_edge_list(synth_dir / "edges.txt").events) == 36
        assert len(read_labels(synth_dir / "labels.txt")) == 12

    def test_pure_blocks(self, tmp_path):
        main(["synth", "--intra-p", "1.0", "--nodes-per-community", "5", "--out", str(tmp_path)])
        labels = read_labels(tmp_path / "labels.txt")
        assert all(labels[e.src] == labels[e.dst] for e in read_edge_list(tmp_path / "edges.txt").events)

    def test_invalid_probability(self, tmp_path):
        assert main(["synth", "--intra-p", "0.2", "--out", str(tmp_path)]) == 1


class TestTrain:
    def test_defaults_in_manifest(self, synth_dir, tmp_path):
        run = tmp_path / "r"
        assert main(["train", "--edges", str(synth_dir / "edges.txt"), "--epochs", "0", "--communities", "2",
                     "--out", str(run)]) == 0
        cfg = json.loads((run / "manifest.json").read_text())["config"]
        assert (cfg["dim"], cfg["learning_rate"], cfg["batch_size"], cfg["negatives"]) == (128, 0.001, 128, 10)
        assert cfg["history_cap"] == 10 and cfg["seed"] == 0

    def test_default_community_count(self, synth_dir, tmp_path):
        run = tmp_path / "r"
        assert main(["train", "--edges", str(synth_dir / "edges.txt"), "--epochs", "0", "--out", str(run)]) == 0
        assert json.loads((run / "manifest.json").read_text())["config"]["communities"] == 10

    def test_outputs_and_manifest_rerun(self, synth_dir, tmp_path):
        run, rerun = tmp_path / "r1", tmp_path / "r2"
        assert main(["train", "--edges", str(synth_dir / "edges.txt"), *FAST, "--out", str(run)]) == 0
        for name in ("checkpoint.txt", "embeddings.txt", "metrics.log", "manifest.json"):
            assert (run / name).exists()
        manifest = json.loads((run / "manifest.json").read_text())
        assert manifest["resolved"]["time_scale"] > 0
        assert main(["train", "--manifest", str(run / "manifest.json"), "--out", str(rerun)]) == 0
        a, b = read_embeddings(run / "embeddings.txt"), read_embeddings(rerun / "embeddings.txt")
        for node in a:
            np.testing.assert_allclose(a[node], b[node], rtol=0, atol=1e-12)
        assert len((run / "metrics.log").read_text().splitlines()) == 1

    def test_resume_continues(self, synth_dir, tmp_path):
        edges = str(synth_dir / "edges.txt")
        straight = tmp_path / "s"
        main(["train", "--edges", edges, *FAST[:-4], "--epochs", "2", "--batch", "16", "--out", str(straight)])
        first = tmp_path / "f"
        main(["train", "--edges", edges, *FAST, "--out", str(first)])
        second = tmp_path / "g"
        assert main(["train", "--edges", edges, *FAST[:-4], "--epochs", "2", "--batch", "16",
                     "--resume", str(first / "checkpoint.txt"), "--out", str(second)]) == 0
        assert (straight / "embeddings.txt").read_bytes() == (second / "embeddings.txt").read_bytes()


class TestEvalAndExport:
    def test_eval_prints_metrics(self, tmp_path, capsys):
        rng = np.random.default_rng(0)
        x = np.vstack([rng.normal(-4, 0.3, size=(10, 2)), rng.normal(4, 0.3, size=(10, 2))])
        write_embeddings(tmp_path / "e", range(20), x)
        (tmp_path / "l").write_text("".join(f"{i} {int(i >= 10)}\n" for i in range(20)))
        assert main(["eval", "--embeddings", str(tmp_path / "e"), "--labels", str(tmp_path / "l"),
                     "--out", str(tmp_path / "rep")]) == 0
        out = capsys.readouterr().out
        assert "accuracy 1.0000" in out and "weighted_f1 1.0000" in out
        assert (tmp_path / "rep").read_text().startswith("accuracy 1.0")

    def test_eval_lists_offenders(self, tmp_path, capsys):
        write_embeddings(tmp_path / "e", [0, 1], np.zeros((2, 2)))
        (tmp_path / "l").write_text("0 0\n1 1\n5 0\n6 1\n")
        assert main(["eval", "--embeddings", str(tmp_path / "e"), "--labels", str(tmp_path / "l")]) == 2
        assert "5, 6" in capsys.readouterr().err

    def test_export_matches_training(self, synth_dir, tmp_path):
        run = tmp_path / "r"
        main(["train", "--edges", str(synth_dir / "edges.txt"), *FAST, "--out", str(run)])
        assert main(["export", "--checkpoint", str(run / "checkpoint.txt"), "--edges", str(synth_dir / "edges.txt"),
                     "--out", str(tmp_path / "x.txt")]) == 0
        trained, exported = read_embeddings(run / "embeddings.txt"), read_embeddings(tmp_path / "x.txt")
        assert trained.keys() == exported.keys()
        assert all(np.all(np.isfinite(v)) for v in exported.values())
