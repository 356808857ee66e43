"""Streaming per-event training.

Each event updates both endpoints' embeddings through the aggregator cell.
Gradients stop at stored embeddings and at community embeddings; they reach
the cell weights, the time-encoder frequencies, and the per-node influence
scales through the current event only. Parameters move once per batch of
events while embeddings move after every event.
"""

from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from mnci.aggregator import AggregatorParams, cell_backward, cell_forward
from mnci.encoders import TimeEncoder, check_dim, positional_encode
from mnci.errors import ConfigError, ContractError, NumericError
from mnci.influence import (
    CommunityModel,
    community_mix,
    community_update,
    neighborhood_backward,
    neighborhood_sum,
)
from mnci.ingest import NeighborHistory, TemporalGraph
from mnci.objective import community_term, pair_term
from mnci.optim import Adam
from mnci.sampler import NegativeSampler

log = logging.getLogger(__name__)

# RNG stream tags, combined with the user seed
_RNG_PARAMS, _RNG_OMEGA, _RNG_COMMUNITIES, _RNG_NEGATIVES = 0, 1, 2, 3


@dataclass
class TrainConfig:
    dim: int = 128
    learning_rate: float = 0.001
    batch_size: int = 128
    negatives: int = 10
    communities: int = 10
    epochs: int = 10
    history_cap: int = 10
    seed: int = 0
    time_scale: float | None = None  # None: median positive gap between consecutive events
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self):
        try:
            check_dim(self.dim)
        except ConfigError:
            raise ConfigError(f"dim must be even (got {self.dim})") from None
        checks = [
            ("learning_rate", self.learning_rate > 0),
            ("batch_size", self.batch_size >= 1),
            ("negatives", self.negatives >= 1),
            ("communities", self.communities >= 1),
            ("epochs", self.epochs >= 0),
            ("history_cap", self.history_cap >= 1),
            ("time_scale", self.time_scale is None or self.time_scale > 0),
            ("adam_beta1", 0 <= self.adam_beta1 < 1),
            ("adam_beta2", 0 <= self.adam_beta2 < 1),
            ("adam_eps", self.adam_eps > 0),
        ]
        for name, ok in checks:
            if not ok:
                raise ConfigError(f"invalid {name}: {getattr(self, name)!r}")

    def to_dict(self) -> dict:
        return asdict(self)


def median_positive(values) -> float:
    values = np.asarray(values, dtype=np.float64)
    values = values[values > 0]
    return float(np.median(values)) if values.size else 1.0


def auto_time_scale(graph: TemporalGraph) -> float:
    """Median positive gap between consecutive event times."""
    times = np.fromiter((e.time for e in graph.events), dtype=np.float64)
    return median_positive(np.diff(times))


def history_deltas(graph: TemporalGraph, cap: int) -> np.ndarray:
    """Every elapsed time the neighborhood encoder will see in one pass."""
    last: dict[int, list[float]] = {}
    out = []
    for e in graph.events:
        for node in (e.src, e.dst):
            times = last.setdefault(node, [])
            times.append(e.time)
            if len(times) > cap:
                del times[0]
            out.extend(e.time - t for t in times)
    return np.asarray(out)


@dataclass
class Model:
    """Learned state that survives the per-epoch embedding reset."""

    params: AggregatorParams
    encoder: TimeEncoder
    delta_ne: np.ndarray
    delta_co: np.ndarray
    community_init: np.ndarray
    node_ids: list[int]
    time_scale: float
    history_cap: int = 10
    omega_init_std: float | None = None

    def __post_init__(self):
        self.index = {n: i for i, n in enumerate(self.node_ids)}

    @property
    def dim(self) -> int:
        return self.params.dim

    @classmethod
    def init(cls, graph: TemporalGraph, config: TrainConfig) -> "Model":
        d, k = config.dim, config.communities
        if graph.node_count < k:
            raise ConfigError(f"communities ({k}) exceeds node count ({graph.node_count})")
        seed = config.seed
        scale = config.time_scale if config.time_scale is not None else auto_time_scale(graph)
        omega_sd = 1.0 / median_positive(history_deltas(graph, config.history_cap) / scale)
        initial = positional_encode(np.arange(min(graph.node_count, 10 * k)), d)
        com = CommunityModel.from_initial(initial, k, np.random.default_rng([seed, _RNG_COMMUNITIES]))
        return cls(
            params=AggregatorParams.init(d, np.random.default_rng([seed, _RNG_PARAMS])),
            encoder=TimeEncoder.init(d, np.random.default_rng([seed, _RNG_OMEGA]), omega_sd),
            delta_ne=np.ones(graph.node_count),
            delta_co=np.ones(graph.node_count),
            community_init=com.embeddings,
            node_ids=graph.node_ids,
            time_scale=scale,
            history_cap=config.history_cap,
            omega_init_std=omega_sd,
        )

    def tensors(self) -> dict[str, np.ndarray]:
        """Every dense learnable tensor, by name (shared arrays)."""
        t = self.params.as_dict()
        t["omega"] = self.encoder.omega
        return t

    def node_slot(self, node_id: int) -> int:
        """Index into delta_ne/delta_co, growing them (scale 1.0) for unseen nodes."""
        slot = self.index.get(node_id)
        if slot is None:
            slot = len(self.node_ids)
            self.node_ids.append(node_id)
            self.index[node_id] = slot
            self.delta_ne = np.append(self.delta_ne, 1.0)
            self.delta_co = np.append(self.delta_co, 1.0)
        return slot


@dataclass
class StreamState:
    """Embeddings, histories and communities while replaying one stream.

    Nodes are addressed by their first-seen position in the stream.
    """

    z: np.ndarray
    histories: list[NeighborHistory]
    communities: CommunityModel
    slots: np.ndarray  # position -> Model delta index
    node_ids: list[int]
    last_time: float = -np.inf
    last_update: np.ndarray = field(default=None)

    @classmethod
    def start(cls, model: Model, graph: TemporalGraph) -> "StreamState":
        n = graph.node_count
        ids = graph.node_ids
        return cls(
            z=positional_encode(np.arange(n), model.dim),
            histories=[NeighborHistory(model.history_cap) for _ in range(n)],
            communities=CommunityModel(model.community_init.copy()),
            slots=np.array([model.node_slot(i) for i in ids], dtype=np.int64),
            node_ids=ids,
            last_update=np.zeros(n),
        )


@dataclass
class EndpointPass:
    node: int
    z_new: np.ndarray
    cell: object
    hood: object
    mix: np.ndarray
    delta_ne: float
    delta_co: float


@dataclass
class EventPass:
    """Result of one event's forward (and optionally backward) pass."""

    loss: float
    src: EndpointPass
    dst: EndpointPass
    negatives: np.ndarray
    grads: dict[str, np.ndarray] | None = None
    grad_delta_ne: dict[int, float] | None = None
    grad_delta_co: dict[int, float] | None = None


def _endpoint_forward(model: Model, state: StreamState, x: int, partner: int, t: float) -> EndpointPass:
    h = state.histories[x]
    entries = list(h.entries)[max(0, len(h) - model.history_cap + 1):]
    entries.append((partner, t))
    nbrs = np.fromiter((n for n, _ in entries), dtype=np.int64, count=len(entries))
    times = np.fromiter((s for _, s in entries), dtype=np.float64, count=len(entries))
    z_prev = state.z[x]
    raw, hood = neighborhood_sum(z_prev, state.z[nbrs], (t - times) / model.time_scale, model.encoder)
    _, mix = community_mix(z_prev, state.communities)
    slot = state.slots[x]
    dn, dc = model.delta_ne[slot], model.delta_co[slot]
    z_new, cell = cell_forward(z_prev, dn * raw, dc * mix, model.params)
    return EndpointPass(x, z_new, cell, hood, mix, dn, dc)


def event_forward(model: Model, state: StreamState, u: int, v: int, t: float,
                  negatives=None, backward: bool = False) -> EventPass:
    """Evaluate one event from the current state without mutating it.

    ``u`` and ``v`` are stream positions. The returned loss is the negated
    objective: -(pair term + community term of each endpoint). Without
    ``negatives`` the pair term has no repulsive part.
    """
    if u == v:
        raise ContractError("self-loop event")
    if t < state.last_time:
        raise ContractError(f"event at time {t} arrives after time {state.last_time}")
    a = _endpoint_forward(model, state, u, v, t)
    b = _endpoint_forward(model, state, v, u, t)
    negs = np.empty(0, dtype=np.int64) if negatives is None else np.asarray(negatives, dtype=np.int64)

    pair = pair_term(a.z_new, b.z_new, state.z[negs])
    com_a = community_term(a.z_new, state.communities.embeddings)
    com_b = community_term(b.z_new, state.communities.embeddings)
    loss = -(pair.value + com_a.value + com_b.value)
    if not np.isfinite(loss):
        raise NumericError(f"non-finite loss at time {t}")
    out = EventPass(loss, a, b, negs)
    if not backward:
        return out

    grads = {name: np.zeros_like(arr) for name, arr in model.tensors().items()}
    out.grads, out.grad_delta_ne, out.grad_delta_co = grads, {}, {}
    for ep, g_z in ((a, -(pair.grad_u + com_a.grad_z)), (b, -(pair.grad_v + com_b.grad_z))):
        cg = cell_backward(ep.cell, g_z)
        for name, g in cg.params.items():
            grads[name] += g
        g_dn, g_omega = neighborhood_backward(ep.hood, ep.delta_ne, cg.ne, model.encoder)
        grads["omega"] += g_omega
        slot = int(state.slots[ep.node])
        out.grad_delta_ne[slot] = out.grad_delta_ne.get(slot, 0.0) + g_dn
        out.grad_delta_co[slot] = out.grad_delta_co.get(slot, 0.0) + cg.co @ ep.mix
    return out


def commit(state: StreamState, ev: EventPass, t: float) -> None:
    """Apply an evaluated event: histories, embeddings, then communities."""
    a, b = ev.src, ev.dst
    state.histories[a.node].push(b.node, t)
    state.histories[b.node].push(a.node, t)
    z_old_a, z_old_b = state.z[a.node].copy(), state.z[b.node].copy()
    state.z[a.node] = a.z_new
    state.z[b.node] = b.z_new
    state.last_update[[a.node, b.node]] = t
    state.last_time = t
    community_update(state.communities, state.node_ids[a.node], z_old_a, a.z_new)
    community_update(state.communities, state.node_ids[b.node], z_old_b, b.z_new)


def replay(model: Model, graph: TemporalGraph, stop: int | None = None) -> StreamState:
    """Run the stream through frozen parameters (inductive inference)."""
    state = StreamState.start(model, graph)
    src, dst, times = graph.index_arrays()
    for i in range(len(times) if stop is None else stop):
        t = float(times[i])
        commit(state, event_forward(model, state, int(src[i]), int(dst[i]), t), t)
    return state


class Trainer:
    def __init__(self, graph: TemporalGraph, config: TrainConfig, model: Model | None = None,
                 optimizer: Adam | None = None, epochs_done: int = 0):
        self.graph = graph
        self.config = config
        self.model = model if model is not None else Model.init(graph, config)
        self.optimizer = optimizer if optimizer is not None else Adam(
            config.learning_rate, config.adam_beta1, config.adam_beta2, config.adam_eps)
        self.epochs_done = epochs_done
        self.degrees = graph.degrees()
        self.state = StreamState.start(self.model, graph)
        self.event_losses: list[np.ndarray] = []
        self.epoch_log: list[tuple[int, float, float]] = []

    def _apply(self, grads, g_ne, g_co, count):
        m = self.model
        self.optimizer.step(m.tensors(), {k: g / count for k, g in grads.items()})
        for name, acc, param in (("delta_ne", g_ne, m.delta_ne), ("delta_co", g_co, m.delta_co)):
            if acc:
                idx = np.fromiter(acc.keys(), dtype=np.int64, count=len(acc))
                vals = np.fromiter(acc.values(), dtype=np.float64, count=len(acc)) / count
                self.optimizer.sparse_step(name, param, idx, vals)

    def run_epoch(self) -> float:
        cfg, m = self.config, self.model
        epoch = self.epochs_done
        started = time.perf_counter()
        state = StreamState.start(m, self.graph)
        sampler = NegativeSampler(self.degrees, np.random.default_rng([cfg.seed, _RNG_NEGATIVES, epoch]))
        src, dst, times = self.graph.index_arrays()
        losses = np.empty(len(times))

        def fresh():
            return {k: np.zeros_like(a) for k, a in m.tensors().items()}, {}, {}

        grads, g_ne, g_co = fresh()
        pending = 0
        for i in range(len(times)):
            u, v, t = int(src[i]), int(dst[i]), float(times[i])
            negs = sampler.draw(cfg.negatives, exclude=(u, v))
            ev = event_forward(m, state, u, v, t, negs, backward=True)
            losses[i] = ev.loss
            for k, g in ev.grads.items():
                grads[k] += g
            for acc, part in ((g_ne, ev.grad_delta_ne), (g_co, ev.grad_delta_co)):
                for slot, g in part.items():
                    acc[slot] = acc.get(slot, 0.0) + g
            commit(state, ev, t)
            pending += 1
            if pending == cfg.batch_size:
                self._apply(grads, g_ne, g_co, pending)
                grads, g_ne, g_co = fresh()
                pending = 0
        if pending:
            self._apply(grads, g_ne, g_co, pending)

        self.state = state
        self.epochs_done += 1
        self.event_losses.append(losses)
        mean = float(losses.mean())
        elapsed = time.perf_counter() - started
        self.epoch_log.append((epoch, mean, elapsed))
        log.info("epoch %d  loss %.6f  %.1fs", epoch, mean, elapsed)
        return mean

    def fit(self, epochs: int | None = None) -> "TrainResult":
        for _ in range(self.config.epochs if epochs is None else epochs):
            self.run_epoch()
        return self.result()

    def result(self) -> "TrainResult":
        return TrainResult(
            model=self.model,
            embeddings=self.state.z.copy(),
            node_ids=list(self.state.node_ids),
            epoch_losses=[row[1] for row in self.epoch_log],
            event_losses=self.event_losses,
            epoch_log=self.epoch_log,
            trainer=self,
        )


@dataclass
class TrainResult:
    model: Model
    embeddings: np.ndarray  # rows follow node_ids
    node_ids: list[int]
    epoch_losses: list[float]
    event_losses: list[np.ndarray]
    epoch_log: list[tuple[int, float, float]]
    trainer: Trainer | None = None

    def embedding_map(self) -> dict[int, np.ndarray]:
        return {n: self.embeddings[i] for i, n in enumerate(self.node_ids)}


def train(graph: TemporalGraph, config: TrainConfig) -> TrainResult:
    """Initialize from positional encodings and run ``config.epochs`` passes.

    Embeddings, histories and communities restart from their initial values
    at each pass; learned parameters carry over. The returned embeddings are
    those at the end of the last pass.
    """
    return Trainer(graph, config).fit()


def process_event(model: Model, state: StreamState, u: int, v: int, t: float, negatives) -> float:
    """Evaluate one event and commit it to ``state``; returns the loss."""
    ev = event_forward(model, state, u, v, t, negatives)
    commit(state, ev, t)
    return ev.loss
