"""Temporal edge lists, label files and per-node neighbor histories."""

from __future__ import annotations

import io
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, TextIO

import numpy as np

from mnci.errors import ContractError, DataError, ParseError


class Event(NamedTuple):
    src: int
    dst: int
    time: float


@dataclass(frozen=True)
class TemporalGraph:
    """Time-ordered interaction stream.

    ``first_seen`` maps every node id to its rank in the order nodes first
    appear in the sorted stream (source scanned before destination).
    """

    events: tuple[Event, ...]
    first_seen: dict[int, int]

    @property
    def node_count(self) -> int:
        return len(self.first_seen)

    @property
    def node_ids(self) -> list[int]:
        """Node ids ordered by first appearance."""
        ids = [0] * len(self.first_seen)
        for node, pos in self.first_seen.items():
            ids[pos] = node
        return ids

    def index_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Events as (src_pos, dst_pos, time) arrays in position space."""
        fs = self.first_seen
        src = np.fromiter((fs[e.src] for e in self.events), dtype=np.int64, count=len(self.events))
        dst = np.fromiter((fs[e.dst] for e in self.events), dtype=np.int64, count=len(self.events))
        t = np.fromiter((e.time for e in self.events), dtype=np.float64, count=len(self.events))
        return src, dst, t

    def degrees(self) -> np.ndarray:
        """Interaction count per node position (multi-edges counted)."""
        src, dst, _ = self.index_arrays()
        return np.bincount(np.concatenate([src, dst]), minlength=self.node_count).astype(np.float64)

    def prefix(self, count: int) -> "TemporalGraph":
        return build_graph(self.events[:count])

    def to_text(self) -> str:
        return "".join(f"{e.src} {e.dst} {e.time!r}\n" for e in self.events)


def build_graph(events: Iterable[Event]) -> TemporalGraph:
    """Stable-sort events by time and assign first-seen positions."""
    ordered = sorted(events, key=lambda e: e.time)
    if not ordered:
        raise DataError("no events")
    first_seen: dict[int, int] = {}
    for e in ordered:
        for node in (e.src, e.dst):
            if node not in first_seen:
                first_seen[node] = len(first_seen)
    return TemporalGraph(events=tuple(ordered), first_seen=first_seen)


def _as_lines(source: str | TextIO | Iterable[str]) -> Iterable[str]:
    if isinstance(source, str):
        return io.StringIO(source)
    return source


def parse_edge_list(source: str | TextIO | Iterable[str]) -> TemporalGraph:
    """Parse ``src dst time`` lines; ``#`` lines and blank lines are skipped."""
    events = []
    for lineno, raw in enumerate(_as_lines(source), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ParseError(f"expected 'src dst time', got {line!r}", lineno)
        try:
            src, dst = int(parts[0]), int(parts[1])
            t = float(parts[2])
        except ValueError:
            raise ParseError(f"malformed fields in {line!r}", lineno) from None
        if src < 0 or dst < 0:
            raise ParseError("node ids must be non-negative", lineno)
        if not math.isfinite(t) or t < 0:
            raise ParseError(f"time must be finite and >= 0, got {parts[2]}", lineno)
        if src == dst:
            raise ParseError(f"self-loop on node {src}", lineno)
        events.append(Event(src, dst, t))
    return build_graph(events)


def parse_labels(source: str | TextIO | Iterable[str]) -> dict[int, int]:
    labels: dict[int, int] = {}
    for lineno, raw in enumerate(_as_lines(source), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ParseError(f"expected 'node_id label', got {line!r}", lineno)
        try:
            node, label = int(parts[0]), int(parts[1])
        except ValueError:
            raise ParseError(f"malformed fields in {line!r}", lineno) from None
        if labels.setdefault(node, label) != label:
            raise ParseError(f"node {node} has conflicting labels {labels[node]} and {label}", lineno)
    return labels


def read_edge_list(path) -> TemporalGraph:
    with open(path, encoding="utf-8") as fh:
        return parse_edge_list(fh)


def read_labels(path) -> dict[int, int]:
    with open(path, encoding="utf-8") as fh:
        return parse_labels(fh)


@dataclass
class NeighborHistory:
    """Most recent ``cap`` interactions of one node, oldest first."""

    cap: int = 10
    entries: deque = field(default_factory=deque)

    def __post_init__(self):
        if self.cap < 1:
            raise ContractError("history cap must be >= 1")
        self.entries = deque(self.entries, maxlen=self.cap)

    def push(self, neighbor: int, time: float) -> "NeighborHistory":
        if self.entries and time < self.entries[-1][1]:
            raise ContractError(
                f"history out of order: time {time} precedes last entry at {self.entries[-1][1]}"
            )
        self.entries.append((neighbor, time))
        return self

    def neighbors(self) -> list[int]:
        return [n for n, _ in self.entries]

    def times(self) -> np.ndarray:
        return np.array([t for _, t in self.entries], dtype=np.float64)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


def push_history(h: NeighborHistory, neighbor: int, time: float) -> NeighborHistory:
    return h.push(neighbor, time)
