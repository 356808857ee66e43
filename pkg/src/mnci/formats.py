"""On-disk formats: embeddings, checkpoints, metrics log."""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from mnci.aggregator import PARAM_NAMES, AggregatorParams
from mnci.encoders import TimeEncoder
from mnci.errors import DataError, ParseError
from mnci.optim import Adam
from mnci.trainer import Model, TrainConfig

CHECKPOINT_MAGIC = "mnci-checkpoint"
CHECKPOINT_VERSION = "v1"

_INT_CONFIG = {"dim", "batch_size", "negatives", "communities", "epochs", "history_cap", "seed"}


def write_embeddings(path, node_ids, embeddings) -> None:
    """``N d`` header, then ``node_id x_1 ... x_d`` per node (shortest exact repr)."""
    emb = np.asarray(embeddings, dtype=np.float64)
    lines = [f"{emb.shape[0]} {emb.shape[1]}"]
    for node, row in zip(node_ids, emb):
        lines.append(" ".join([str(node)] + [repr(float(x)) for x in row]))
    try:
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot write embeddings to {path}: {exc}") from exc


def read_embeddings(path) -> dict[int, np.ndarray]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read embeddings from {path}: {exc}") from exc
    lines = text.splitlines()
    if not lines:
        raise ParseError("empty embeddings file", 1)
    try:
        n, d = map(int, lines[0].split())
    except ValueError:
        raise ParseError("header must be 'N d'", 1) from None
    out = {}
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split()
        if not parts:
            continue
        if len(parts) != d + 1:
            raise ParseError(f"expected {d + 1} fields, got {len(parts)}", lineno)
        try:
            out[int(parts[0])] = np.array([float(x) for x in parts[1:]])
        except ValueError:
            raise ParseError("malformed number", lineno) from None
    if len(out) != n:
        raise ParseError(f"header promises {n} nodes, found {len(out)}")
    return out


def export_embeddings(result, path) -> None:
    """Write a training result's final embeddings."""
    write_embeddings(path, result.node_ids, result.embeddings)


def write_metrics(path, epoch_log) -> None:
    lines = [f"{epoch} {loss!r} {seconds:.3f}" for epoch, loss, seconds in epoch_log]
    Path(path).write_text("".join(line + "\n" for line in lines), encoding="utf-8")


@dataclass
class Checkpoint:
    model: Model
    optimizer: Adam
    config: TrainConfig
    epochs_done: int


def _fmt(values) -> str:
    return " ".join(format(float(v), ".17g") for v in np.ravel(values))


def save_checkpoint(path, model: Model, optimizer: Adam, config: TrainConfig, epochs_done: int) -> None:
    tensors: list[tuple[str, np.ndarray]] = []
    tensors += list(model.params.as_dict().items())
    tensors += [
        ("omega", model.encoder.omega),
        ("delta_ne", model.delta_ne),
        ("delta_co", model.delta_co),
        ("community_init", model.community_init),
        ("node_ids", np.asarray(model.node_ids, dtype=np.float64)),
        ("time_scale", np.array([model.time_scale])),
        ("history_cap", np.array([model.history_cap])),
        ("epochs_done", np.array([epochs_done])),
        ("adam.step", np.array([optimizer.step_count])),
    ]
    for name in sorted(optimizer.m):
        tensors.append((f"adam.m.{name}", optimizer.m[name]))
        tensors.append((f"adam.v.{name}", optimizer.v[name]))
    for name in sorted(optimizer.sparse_steps):
        tensors.append((f"adam.steps.{name}", optimizer.sparse_steps[name]))
    for f in fields(config):
        value = getattr(config, f.name)
        tensors.append((f"config.{f.name}", np.array([math.nan if value is None else value], dtype=np.float64)))

    k = model.community_init.shape[0]
    lines = [f"{CHECKPOINT_MAGIC} {CHECKPOINT_VERSION} {model.dim} {k}"]
    for name, arr in tensors:
        arr = np.asarray(arr)
        shape = ",".join(map(str, arr.shape)) if arr.ndim else "1"
        lines.append(f"{name} {shape} {_fmt(arr)}".rstrip())
    try:
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot write checkpoint to {path}: {exc}") from exc


def load_checkpoint(path) -> Checkpoint:
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise DataError(f"cannot read checkpoint {path}: {exc}") from exc
    header = lines[0].split() if lines else []
    if len(header) != 4 or header[0] != CHECKPOINT_MAGIC:
        raise ParseError("not an mnci checkpoint", 1)
    if header[1] != CHECKPOINT_VERSION:
        raise ParseError(f"unsupported checkpoint version {header[1]}", 1)

    t: dict[str, np.ndarray] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split()
        if not parts:
            continue
        if len(parts) < 2:
            raise ParseError("tensor line needs a name and a shape", lineno)
        name, shape_s = parts[0], parts[1]
        shape = tuple(int(s) for s in shape_s.split(",")) if shape_s else ()
        try:
            values = np.array([float(v) for v in parts[2:]], dtype=np.float64)
        except ValueError:
            raise ParseError(f"malformed value in {name}", lineno) from None
        if values.size != int(np.prod(shape)):
            raise ParseError(f"{name}: shape {shape} but {values.size} values", lineno)
        t[name] = values.reshape(shape)

    def scalar(name):
        return t[name].reshape(-1)[0]

    cfg = {}
    for f in fields(TrainConfig):
        v = float(scalar(f"config.{f.name}"))
        cfg[f.name] = None if math.isnan(v) else (int(v) if f.name in _INT_CONFIG else v)
    config = TrainConfig(**cfg)

    model = Model(
        params=AggregatorParams(**{n: t[n] for n in PARAM_NAMES}),
        encoder=TimeEncoder(t["omega"]),
        delta_ne=t["delta_ne"].copy(),
        delta_co=t["delta_co"].copy(),
        community_init=t["community_init"],
        node_ids=[int(x) for x in t["node_ids"]],
        time_scale=float(scalar("time_scale")),
        history_cap=int(scalar("history_cap")),
    )
    opt = Adam(config.learning_rate, config.adam_beta1, config.adam_beta2, config.adam_eps)
    opt.step_count = int(scalar("adam.step"))
    for name, arr in t.items():
        if name.startswith("adam.m."):
            opt.m[name[7:]] = arr.copy()
        elif name.startswith("adam.v."):
            opt.v[name[7:]] = arr.copy()
        elif name.startswith("adam.steps."):
            opt.sparse_steps[name[11:]] = arr.astype(np.int64)
    return Checkpoint(model, opt, config, int(scalar("epochs_done")))
