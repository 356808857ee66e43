"""Neighborhood and community influence embeddings, and the community model.

Affinities are sigmoid(-||a - b||^2) normalized over a candidate set. They
are evaluated in log space (log sigmoid(-x) = -softplus(x)) so that far-away
candidates underflow gracefully instead of producing 0/0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from mnci.encoders import TimeEncoder
from mnci.errors import ContractError
from mnci.ingest import NeighborHistory
from mnci.numeric import as_real


def log_sigmoid_neg(x):
    """log sigmoid(-x), stable for any real x."""
    return -np.logaddexp(0.0, x)


def _normalized_affinity(z_u: np.ndarray, others: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Returns (weights, squared distances) for the rows of ``others``."""
    if others.ndim != 2 or others.shape[0] == 0:
        raise ContractError("affinity needs at least one candidate embedding")
    if others.shape[1] != z_u.shape[-1]:
        raise ContractError(f"dimension mismatch: {others.shape[1]} vs {z_u.shape[-1]}")
    diff = z_u - others
    sq = np.einsum("ij,ij->i", diff, diff)
    logits = log_sigmoid_neg(sq)
    logits = logits - logits.max()
    w = np.exp(logits)
    return w / w.sum(), sq


def affinity_weights(z_u, neighbor_embeddings) -> np.ndarray:
    """Normalized affinity of ``z_u`` to each historical neighbor."""
    return _normalized_affinity(as_real(z_u),
                                np.atleast_2d(as_real(neighbor_embeddings)))[0]


def community_weights(z_u, com: "CommunityModel") -> np.ndarray:
    return _normalized_affinity(as_real(z_u), com.embeddings)[0]


@dataclass
class NodeState:
    embedding: np.ndarray
    last_update: float = 0.0
    history: NeighborHistory = field(default_factory=NeighborHistory)
    delta_ne: float = 1.0
    delta_co: float = 1.0


@dataclass
class NeighborhoodTape:
    """What the backward pass needs from one neighborhood aggregation."""

    weights: np.ndarray       # (h,)
    delta_t: np.ndarray       # (h,) scaled elapsed times
    features: np.ndarray      # (h, d) time encodings
    neighbors: np.ndarray     # (h, d) neighbor embeddings
    raw: np.ndarray           # (d,) sum before scaling by delta_ne


def neighborhood_sum(z_u, neighbor_z, delta_t, enc: TimeEncoder) -> tuple[np.ndarray, NeighborhoodTape]:
    """sum_i a_i F(dt_i) * z_i, without the per-node scale.

    The weights use ``z_u`` and the neighbors' stored embeddings; both are
    treated as constants by the trainer.
    """
    neighbor_z = np.atleast_2d(as_real(neighbor_z))
    delta_t = as_real(delta_t)
    if delta_t.shape != (neighbor_z.shape[0],):
        raise ContractError("one elapsed time per neighbor required")
    w, _ = _normalized_affinity(as_real(z_u), neighbor_z)
    feats = enc.encode(delta_t)
    raw = w @ (feats * neighbor_z)
    return raw, NeighborhoodTape(w, delta_t, feats, neighbor_z, raw)


def neighborhood_backward(tape: NeighborhoodTape, delta_ne: float, grad_out: np.ndarray,
                          enc: TimeEncoder) -> tuple[float, np.ndarray]:
    """Gradients of delta_ne * raw w.r.t. (delta_ne, omega)."""
    g_delta = grad_out @ tape.raw
    g_feats = (delta_ne * tape.weights)[:, None] * grad_out[None, :] * tape.neighbors
    return g_delta, enc.backward(tape.delta_t, g_feats)


def neighborhood_influence(u: NodeState, neighbor_states: list[NodeState], event_time: float,
                           enc: TimeEncoder, time_scale: float = 1.0) -> np.ndarray:
    """Time- and affinity-weighted elementwise aggregation of u's history.

    ``neighbor_states[i]`` belongs to the i-th entry of ``u.history``.
    """
    if len(u.history) == 0:
        raise ContractError("neighborhood influence needs a non-empty history")
    if len(neighbor_states) != len(u.history):
        raise ContractError("one neighbor state per history entry required")
    times = u.history.times()
    if np.any(times > event_time):
        raise ContractError("history contains interactions after the event time")
    raw, _ = neighborhood_sum(u.embedding, np.stack([s.embedding for s in neighbor_states]),
                              (event_time - times) / time_scale, enc)
    return u.delta_ne * raw


@dataclass
class CommunityModel:
    """K community embeddings and the current hard membership of each node."""

    embeddings: np.ndarray
    assignment: dict[int, int] = field(default_factory=dict)

    def __post_init__(self):
        self.embeddings = np.array(self.embeddings, dtype=np.float64)
        if self.embeddings.ndim != 2 or self.embeddings.shape[0] < 1:
            raise ContractError("need at least one community embedding")
        if not np.all(np.isfinite(self.embeddings)):
            raise ContractError("community embeddings must be finite")

    @property
    def k(self) -> int:
        return self.embeddings.shape[0]

    @classmethod
    def from_initial(cls, initial: np.ndarray, k: int, rng: np.random.Generator) -> "CommunityModel":
        """Seed communities with the initial embeddings of k distinct early nodes.

        Candidates are the first min(N, 10k) rows of ``initial`` (ordered by
        first appearance).
        """
        n = initial.shape[0]
        if k < 1 or k > n:
            raise ContractError(f"cannot seed {k} communities from {n} nodes")
        pool = min(n, 10 * k)
        picks = np.sort(rng.choice(pool, size=k, replace=False))
        return cls(initial[picks].copy())

    def copy(self) -> "CommunityModel":
        return CommunityModel(self.embeddings.copy(), dict(self.assignment))


def community_mix(z_u, com: CommunityModel) -> tuple[np.ndarray, np.ndarray]:
    """(weights, sum_k a_k z_ck) for one node."""
    w = community_weights(z_u, com)
    return w, w @ com.embeddings


def community_influence(u: NodeState, com: CommunityModel) -> np.ndarray:
    return u.delta_co * community_mix(u.embedding, com)[1]


def community_update(com: CommunityModel, u: int, z_old, z_new) -> CommunityModel:
    """Move u's embedding change into its closest community (in place).

    The closest community is chosen with the new embedding; ties go to the
    lowest index.
    """
    z_old = as_real(z_old)
    z_new = as_real(z_new)
    k_star = int(np.argmax(community_weights(z_new, com)))
    com.embeddings[k_star] += z_new - z_old
    com.assignment[u] = k_star
    return com
