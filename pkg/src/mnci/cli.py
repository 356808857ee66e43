"""Command-line entry point: ``mnci {train,eval,synth,export}``.

Exit status: 0 success, 1 usage error, 2 data error, 3 numeric error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from mnci.errors import ConfigError, DataError, MNCIError, NumericError
from mnci.evaluation import kfold_classify
from mnci.formats import (
    load_checkpoint,
    read_embeddings,
    save_checkpoint,
    write_embeddings,
    write_metrics,
)
from mnci.ingest import read_edge_list, read_labels
from mnci.synth import labels_text, synth_planted_graph
from mnci.trainer import TrainConfig, Trainer, replay

log = logging.getLogger("mnci")

# TrainConfig field -> flag, for error messages and manifests
FLAGS = {
    "dim": "--dim",
    "learning_rate": "--lr",
    "batch_size": "--batch",
    "negatives": "--negatives",
    "communities": "--communities",
    "epochs": "--epochs",
    "history_cap": "--history-cap",
    "seed": "--seed",
    "time_scale": "--time-scale",
    "adam_beta1": "--beta1",
    "adam_beta2": "--beta2",
    "adam_eps": "--adam-eps",
}


class UsageError(MNCIError):
    exit_code = 1


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _config_from_args(args, base: dict | None = None) -> TrainConfig:
    values = dict(base or {})
    for field_name in FLAGS:
        v = getattr(args, field_name, None)
        if v is not None:
            values[field_name] = v
    try:
        return TrainConfig(**values)
    except ConfigError as exc:
        field_name = next((f for f in FLAGS if f in str(exc)), None)
        flag = FLAGS.get(field_name, "")
        raise ConfigError(f"{flag}: {exc}" if flag else str(exc)) from None


def cmd_train(args) -> int:
    base = {}
    edges = args.edges
    if args.manifest:
        manifest = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
        base = manifest["config"]
        edges = edges or manifest["inputs"]["edges"]
    if not edges:
        raise UsageError("train: --edges PATH is required")
    config = _config_from_args(args, base)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    started = _now()

    graph = read_edge_list(edges)
    if args.resume:
        ck = load_checkpoint(args.resume)
        if ck.model.node_ids != graph.node_ids:
            raise DataError("checkpoint was trained on a different edge list")
        trainer = Trainer(graph, config, ck.model, ck.optimizer, ck.epochs_done)
        remaining = max(0, config.epochs - ck.epochs_done)
    else:
        trainer = Trainer(graph, config)
        remaining = config.epochs
    result = trainer.fit(remaining)
    if not np.all(np.isfinite(result.embeddings)):
        raise NumericError("non-finite embeddings after training")

    paths = {
        "checkpoint": str(out / "checkpoint.txt"),
        "embeddings": str(out / "embeddings.txt"),
        "metrics": str(out / "metrics.log"),
        "manifest": str(out / "manifest.json"),
    }
    save_checkpoint(paths["checkpoint"], trainer.model, trainer.optimizer, config, trainer.epochs_done)
    write_embeddings(paths["embeddings"], result.node_ids, result.embeddings)
    write_metrics(paths["metrics"], result.epoch_log)
    manifest = {
        "config": config.to_dict(),
        "resolved": {"time_scale": trainer.model.time_scale, "omega_init_std": trainer.model.omega_init_std},
        "inputs": {"edges": str(Path(edges).resolve()), "resume": args.resume},
        "seed": config.seed,
        "started": started,
        "finished": _now(),
        "outputs": paths,
        "epoch_losses": result.epoch_losses,
    }
    Path(paths["manifest"]).write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    print(json.dumps({"config": config.to_dict(), "outputs": paths}, indent=2))
    return 0


def cmd_eval(args) -> int:
    embeddings = read_embeddings(args.embeddings)
    labels = read_labels(args.labels)
    report = kfold_classify(embeddings, labels, k=args.folds, seed=args.seed)
    if args.out:
        Path(args.out).write_text(report.to_text(), encoding="utf-8")
    print(f"accuracy {report.accuracy:.4f}")
    print(f"weighted_f1 {report.weighted_f1:.4f}")
    return 0


def cmd_synth(args) -> int:
    graph, labels = synth_planted_graph(args.nodes_per_community, args.communities, args.intra_p,
                                        args.events_per_node, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "edges.txt").write_text(graph.to_text(), encoding="utf-8")
    (out / "labels.txt").write_text(labels_text(labels), encoding="utf-8")
    print(f"wrote {len(graph.events)} events over {graph.node_count} nodes to {out}")
    return 0


def cmd_export(args) -> int:
    """Replay an edge list through a trained checkpoint and write embeddings."""
    ck = load_checkpoint(args.checkpoint)
    graph = read_edge_list(args.edges)
    state = replay(ck.model, graph)
    write_embeddings(args.out, state.node_ids, state.z)
    print(f"wrote {graph.node_count} embeddings to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mnci", description="Temporal network embedding with neighborhood and community influences.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    t = sub.add_parser("train", help="train on a temporal edge list")
    t.add_argument("--edges", help="edge list: 'src dst time' per line")
    t.add_argument("--manifest", help="re-run with the config recorded in a manifest")
    t.add_argument("--resume", help="continue from a checkpoint")
    t.add_argument("--dim", type=int)
    t.add_argument("--lr", dest="learning_rate", type=float)
    t.add_argument("--batch", dest="batch_size", type=int)
    t.add_argument("--negatives", type=int)
    t.add_argument("--communities", type=int)
    t.add_argument("--epochs", type=int)
    t.add_argument("--history-cap", dest="history_cap", type=int)
    t.add_argument("--seed", type=int)
    t.add_argument("--time-scale", dest="time_scale", type=float)
    t.add_argument("--beta1", dest="adam_beta1", type=float)
    t.add_argument("--beta2", dest="adam_beta2", type=float)
    t.add_argument("--adam-eps", dest="adam_eps", type=float)
    t.add_argument("--out", default="run")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="k-fold node classification")
    e.add_argument("--embeddings", required=True)
    e.add_argument("--labels", required=True)
    e.add_argument("--folds", type=int, default=5)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--out", help="write the report here")
    e.set_defaults(func=cmd_eval)

    s = sub.add_parser("synth", help="generate a planted-community stream")
    s.add_argument("--nodes-per-community", type=int, default=100)
    s.add_argument("--communities", type=int, default=2)
    s.add_argument("--intra-p", type=float, default=0.9)
    s.add_argument("--events-per-node", type=int, default=20)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", default="synth")
    s.set_defaults(func=cmd_synth)

    x = sub.add_parser("export", help="embed an edge list with a trained checkpoint")
    x.add_argument("--checkpoint", required=True)
    x.add_argument("--edges", required=True)
    x.add_argument("--out", required=True)
    x.set_defaults(func=cmd_export)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help(sys.stderr)
            return 1
        if args.command == "train" and not (args.edges or args.manifest):
            parser.print_usage(sys.stderr)
            raise UsageError("train: --edges PATH is required")
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(message)s")
        return args.func(args)
    except MNCIError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DataError.exit_code


if __name__ == "__main__":
    sys.exit(main())
