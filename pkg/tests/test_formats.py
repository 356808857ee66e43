import numpy as np
import pytest

from mnci.errors import ParseError
from mnci.formats import (
    export_embeddings,
    load_checkpoint,
    read_embeddings,
    save_checkpoint,
    write_embeddings,
    write_metrics,
)
from mnci.synth import synth_planted_graph
from mnci.trainer import TrainConfig, Trainer


@pytest.fixture(scope="module")
def trained():
    g, _ = synth_planted_graph(5, 2, 0.9, 3, seed=0)
    t = Trainer(g, TrainConfig(dim=6, communities=2, negatives=2, epochs=1, batch_size=8))
    return t.fit()


class TestEmbeddings:
    def test_export_round_trip(self, trained, tmp_path):
        path = tmp_path / "emb.txt"
        export_embeddings(trained, path)
        back = read_embeddings(path)
        for node, row in trained.embedding_map().items():
            np.testing.assert_array_equal(back[node], row)

    def test_line_count_and_header(self, trained, tmp_path):
        path = tmp_path / "emb.txt"
        export_embeddings(trained, path)
        lines = path.read_text().splitlines()
        assert len(lines) == 10 + 1
        assert lines[0] == "10 6"

    def test_extreme_values_exact(self, tmp_path):
        x = np.array([[1e-310, -np.pi, 1 / 3], [5e300, 0.1, -0.0]])
        write_embeddings(tmp_path / "e", [3, 9], x)
        back = read_embeddings(tmp_path / "e")
        np.testing.assert_array_equal(back[9], x[1])
        np.testing.assert_array_equal(back[3], x[0])

    @pytest.mark.parametrize("text", ["", "2 x\n", "1 2\n0 1.0\n", "2 1\n0 1.0\n", "1 1\n0 abc\n"])
    def test_malformed(self, tmp_path, text):
        (tmp_path / "e").write_text(text)
        with pytest.raises(ParseError):
            read_embeddings(tmp_path / "e")


class TestCheckpoint:
    def test_round_trip(self, trained, tmp_path):
        t = trained.trainer
        save_checkpoint(tmp_path / "ck", t.model, t.optimizer, t.config, t.epochs_done)
        ck = load_checkpoint(tmp_path / "ck")
        assert ck.config == t.config and ck.epochs_done == 1
        for k, v in t.model.tensors().items():
            np.testing.assert_array_equal(ck.model.tensors()[k], v)
        np.testing.assert_array_equal(ck.model.delta_co, t.model.delta_co)
        np.testing.assert_array_equal(ck.model.community_init, t.model.community_init)
        assert ck.model.node_ids == t.model.node_ids
        assert ck.optimizer.step_count == t.optimizer.step_count
        for k in t.optimizer.m:
            np.testing.assert_array_equal(ck.optimizer.v[k], t.optimizer.v[k])

    def test_header(self, trained, tmp_path):
        t = trained.trainer
        save_checkpoint(tmp_path / "ck", t.model, t.optimizer, t.config, 1)
        assert (tmp_path / "ck").read_text().splitlines()[0] == "mnci-checkpoint v1 6 2"

    def test_rejects_foreign_file(self, tmp_path):
        (tmp_path / "ck").write_text("hello\n")
        with pytest.raises(ParseError):
            load_checkpoint(tmp_path / "ck")


def test_metrics_log(tmp_path):
    write_metrics(tmp_path / "m", [(0, -1.5, 0.25), (1, -2.0, 0.5)])
    assert (tmp_path / "m").read_text() == "0 -1.5 0.250\n1 -2.0 0.500\n"
