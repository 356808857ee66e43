import numpy as np
import pytest

from mnci.encoders import positional_encode
from mnci.errors import ConfigError, ContractError
from mnci.formats import load_checkpoint, save_checkpoint
from mnci.ingest import parse_edge_list
from mnci.sampler import NegativeSampler
from mnci.synth import synth_planted_graph
from mnci.trainer import (
    Model,
    StreamState,
    TrainConfig,
    Trainer,
    auto_time_scale,
    event_forward,
    process_event,
    replay,
    train,
)

from gradcheck import event_gradient_errors, tiny_graph

SMALL = dict(dim=8, communities=2, negatives=3, batch_size=16, epochs=2, learning_rate=0.01)


@pytest.fixture(scope="module")
def graph():
    return synth_planted_graph(8, 2, 0.9, 4, seed=3)[0]


class TestConfig:
    def test_defaults(self):
        c = TrainConfig()
        assert (c.dim, c.learning_rate, c.batch_size, c.negatives, c.communities) == (128, 0.001, 128, 10, 10)

    def test_odd_dim(self):
        with pytest.raises(ConfigError, match="dim must be even"):
            TrainConfig(dim=7)

    @pytest.mark.parametrize("field,value", [("learning_rate", 0), ("batch_size", 0), ("negatives", 0),
                                             ("history_cap", 0), ("time_scale", -1.0), ("adam_beta1", 1.0)])
    def test_rejects(self, field, value):
        with pytest.raises(ConfigError, match=field):
            TrainConfig(**{field: value})

    def test_more_communities_than_nodes(self):
        with pytest.raises(ConfigError):
            Model.init(parse_edge_list("0 1 1\n"), TrainConfig(dim=4, communities=3))


class TestBehavior:
    def test_zero_epochs_gives_positional_encodings(self, graph):
        res = train(graph, TrainConfig(**{**SMALL, "epochs": 0}))
        np.testing.assert_array_equal(res.embeddings, positional_encode(np.arange(graph.node_count), 8))

    def test_first_event_histories(self, graph):
        model = Model.init(graph, TrainConfig(**SMALL))
        state = StreamState.start(model, graph)
        src, dst, t = graph.index_arrays()
        process_event(model, state, int(src[0]), int(dst[0]), float(t[0]), [2])
        assert len(state.histories[int(src[0])]) == 1
        assert len(state.histories[int(dst[0])]) == 1
        assert state.histories[int(src[0])].neighbors() == [int(dst[0])]

    def test_deterministic(self, graph):
        a = train(graph, TrainConfig(**SMALL))
        b = train(graph, TrainConfig(**SMALL))
        np.testing.assert_array_equal(a.embeddings, b.embeddings)
        assert a.epoch_losses == b.epoch_losses

    def test_seed_changes_result(self, graph):
        a = train(graph, TrainConfig(**SMALL))
        b = train(graph, TrainConfig(**{**SMALL, "seed": 1}))
        assert not np.array_equal(a.embeddings, b.embeddings)

    def test_reset_keeps_parameters(self, graph):
        trainer = Trainer(graph, TrainConfig(**SMALL))
        trainer.run_epoch()
        before = {k: v.copy() for k, v in trainer.model.tensors().items()}
        state = StreamState.start(trainer.model, graph)
        np.testing.assert_array_equal(state.z, positional_encode(np.arange(graph.node_count), 8))
        for k, v in trainer.model.tensors().items():
            np.testing.assert_array_equal(v, before[k])

    def test_parameters_move(self, graph):
        trainer = Trainer(graph, TrainConfig(**SMALL))
        w0 = trainer.model.params.W_z.copy()
        trainer.run_epoch()
        assert not np.array_equal(trainer.model.params.W_z, w0)
        assert trainer.optimizer.step_count == -(-len(graph.events) // SMALL["batch_size"])

    def test_time_scale_is_median_gap(self):
        g = parse_edge_list("0 1 0\n1 2 1\n2 0 3\n0 2 3\n1 0 7\n")
        assert auto_time_scale(g) == 2.0

    def test_embeddings_finite(self, graph):
        assert np.all(np.isfinite(train(graph, TrainConfig(**SMALL)).embeddings))

    def test_history_cap_respected(self, graph):
        state = replay(Model.init(graph, TrainConfig(**{**SMALL, "history_cap": 2})), graph)
        assert max(len(h) for h in state.histories) == 2


class TestInductive:
    def test_prefix_replay_matches_stream(self, graph):
        model = train(graph, TrainConfig(**SMALL)).model
        full = replay(model, graph, stop=20)
        prefix = replay(model, graph.prefix(20))
        n = prefix.z.shape[0]
        np.testing.assert_array_equal(prefix.z, full.z[:n])

    def test_unseen_nodes_get_unit_scales(self, graph):
        model = train(graph, TrainConfig(**SMALL)).model
        n = len(model.node_ids)
        other = parse_edge_list("0 1000 2.0\n1000 1001 3.0\n")
        state = replay(model, other)
        assert np.all(np.isfinite(state.z))
        assert len(model.node_ids) == n + 2
        np.testing.assert_array_equal(model.delta_ne[n:], 1.0)


class TestContracts:
    def test_out_of_order_event(self, graph):
        model = Model.init(graph, TrainConfig(**SMALL))
        state = StreamState.start(model, graph)
        process_event(model, state, 0, 1, 5.0, [2])
        with pytest.raises(ContractError):
            event_forward(model, state, 1, 2, 4.0, [3])

    def test_self_loop(self, graph):
        model = Model.init(graph, TrainConfig(**SMALL))
        with pytest.raises(ContractError):
            event_forward(model, StreamState.start(model, graph), 1, 1, 0.0)

    def test_negatives_exclude_endpoints(self, graph, monkeypatch):
        seen = []
        original = NegativeSampler.draw

        def spy(self, count, exclude=()):
            out = original(self, count, exclude)
            seen.append((tuple(exclude), out))
            return out

        monkeypatch.setattr(NegativeSampler, "draw", spy)
        train(graph, TrainConfig(**{**SMALL, "epochs": 1}))
        assert len(seen) == len(graph.events)
        for (u, v), negs in seen:
            assert len(negs) == SMALL["negatives"]
            assert u not in negs and v not in negs


class TestGradients:
    @pytest.mark.parametrize("seed", range(4))
    def test_event_loss_finite_differences(self, seed):
        errors = event_gradient_errors(seed)
        assert set(errors) >= {"W_UG", "W_z", "b_CG", "omega", "delta_ne", "delta_co"}
        assert max(errors.values()) <= 1e-4, errors

    def test_tiny_graph_shape(self):
        g = tiny_graph(0)
        assert len(g.events) == 14


class TestResume:
    def test_resume_is_exact(self, graph, tmp_path):
        cfg = TrainConfig(**{**SMALL, "epochs": 3})
        straight = Trainer(graph, cfg).fit()

        first = Trainer(graph, cfg)
        first.fit(1)
        path = tmp_path / "ck.txt"
        save_checkpoint(path, first.model, first.optimizer, cfg, first.epochs_done)
        ck = load_checkpoint(path)
        resumed = Trainer(graph, ck.config, ck.model, ck.optimizer, ck.epochs_done).fit(2)

        np.testing.assert_array_equal(resumed.embeddings, straight.embeddings)
        for k, v in straight.model.tensors().items():
            np.testing.assert_array_equal(resumed.model.tensors()[k], v)
