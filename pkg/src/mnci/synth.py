"""Planted-partition temporal interaction streams for desk-scale checks."""

from __future__ import annotations

import numpy as np

from mnci.errors import ConfigError
from mnci.ingest import Event, TemporalGraph, build_graph


def synth_planted_graph(nodes_per_community: int, communities: int, intra_p: float,
                        events_per_node: int, seed: int = 0) -> tuple[TemporalGraph, dict[int, int]]:
    """Every node emits ``events_per_node`` events at Uniform[0, 1] times.

    Node ``c * n + j`` is member ``j`` of community ``c``. A partner is drawn
    from the emitter's own community with probability ``intra_p``, otherwise
    from a uniformly chosen other community. Labels are community indices.
    """
    n, m, e = nodes_per_community, communities, events_per_node
    if n < 2 or m < 1 or e < 1:
        raise ConfigError("need nodes-per-community >= 2, communities >= 1, events-per-node >= 1")
    if not 0.5 < intra_p <= 1.0:
        raise ConfigError(f"intra-p must lie in (0.5, 1], got {intra_p}")
    rng = np.random.default_rng(seed)
    events = []
    for node in range(n * m):
        c = node // n
        times = rng.uniform(0.0, 1.0, size=e)
        intra = rng.random(e) < intra_p if m > 1 else np.ones(e, dtype=bool)
        for t, same in zip(times, intra):
            if same:
                j = rng.integers(n - 1)
                partner = c * n + (j if j < node - c * n else j + 1)
            else:
                other = rng.integers(m - 1)
                other += other >= c
                partner = other * n + rng.integers(n)
            events.append(Event(node, int(partner), float(t)))
    labels = {node: node // n for node in range(n * m)}
    return build_graph(events), labels


def labels_text(labels: dict[int, int]) -> str:
    return "".join(f"{k} {v}\n" for k, v in sorted(labels.items()))
