"""Command-line pipeline: embed graphs, evaluate embeddings, run sweeps.

Exit codes: 0 success, 1 runtime failure (stage-tagged message on stderr),
2 usage or input error. Every output directory receives a ``manifest.json``
with the fully resolved configuration so the run can be replayed exactly
via ``embed --from-manifest``.
"""

from __future__ import annotations

import argparse
import itertools
import json
import os
import sys
import time
from contextlib import contextmanager
from dataclasses import asdict, replace
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .embedder import (
    MODEL_KINDS,
    TrainConfig,
    Trainer,
    export_embeddings,
    load_embeddings,
)
from .evaluation import (
    DEFAULT_RATIOS,
    SplitSpec,
    evaluate,
    format_accuracy_table,
    load_labels,
)
from .graph import EdgeListError, GraphError, load_edge_list, preprocess
from .proximity import load_feature_matrix

MANIFEST_FORMAT = "ane-manifest-v1"


class UsageError(Exception):
    """Bad input or flags: exit code 2."""


class StageError(Exception):
    """Failure inside a pipeline stage: exit code 1."""

    def __init__(self, stage, cause):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause


@contextmanager
def _stage(name):
    try:
        yield
    except (UsageError, StageError):
        raise
    except (EdgeListError, GraphError, FileNotFoundError) as exc:
        raise UsageError(f"[{name}] {exc}") from exc
    except Exception as exc:
        raise StageError(name, exc) from exc


def _require_file(path):
    if not Path(path).is_file():
        raise UsageError(f"file not found: {path}")
    return Path(path)


def _atomic_write(path, writer):
    """Write via a sibling temp file and rename, so readers never see a
    partial artifact."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    writer(tmp)
    os.replace(tmp, path)


def _write_json(path, payload):
    _atomic_write(
        path,
        lambda p: Path(p).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n"),
    )


def _parse_ratios(text):
    try:
        ratios = tuple(float(tok) for tok in text.split(",") if tok.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad ratio list {text!r}") from exc
    if not ratios:
        raise argparse.ArgumentTypeError("empty ratio list")
    return ratios


def _parse_list(caster):
    def parse(text):
        try:
            values = tuple(caster(tok) for tok in text.split(",") if tok.strip())
        except ValueError as exc:
            raise argparse.ArgumentTypeError(f"bad list {text!r}") from exc
        if not values:
            raise argparse.ArgumentTypeError("empty list")
        return values

    return parse


def _add_train_flags(p):
    p.add_argument("--model", choices=MODEL_KINDS, default="aidw")
    p.add_argument("--dim", type=int, default=128, help="embedding dimension")
    p.add_argument("--walks", type=int, default=10, help="walks per node")
    p.add_argument("--walk-length", type=int, default=80)
    p.add_argument("--context", type=int, default=10, help="window size for walk pairs")
    p.add_argument("--negatives", type=int, default=5, help="negative samples per pair")
    p.add_argument("--ppmi-steps", type=int, default=4, help="transition steps t in the PPMI input")
    p.add_argument("--ppmi-beta", type=float, default=None, help="PPMI shift, default 1/N")
    p.add_argument("--prior", choices=("uniform", "gaussian"), default="uniform")
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--batch", type=int, default=256, help="structure-phase batch size")
    p.add_argument("--adv-batch", type=int, default=128, help="adversarial-phase batch size")
    p.add_argument("--lr", type=float, default=0.001, help="learning rate for all phases")
    p.add_argument("--structure-steps", type=int, default=1)
    p.add_argument("--disc-steps", type=int, default=1)
    p.add_argument("--gen-steps", type=int, default=1)
    p.add_argument("--dae-corruption", type=float, default=0.2)
    p.add_argument("--grad-clip", type=float, default=5.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--weighted", action="store_true", help="read edge weights from column 3")
    p.add_argument(
        "--features",
        default=None,
        metavar="PATH",
        help="precomputed feature matrix to use instead of the PPMI rows",
    )


def _config_from_args(args):
    try:
        return TrainConfig(
            model=args.model,
            dim=args.dim,
            negatives=args.negatives,
            epochs=args.epochs,
            batch_size=args.batch,
            adv_batch_size=args.adv_batch,
            structure_steps=args.structure_steps,
            disc_steps=args.disc_steps,
            gen_steps=args.gen_steps,
            structure_lr=args.lr,
            disc_lr=args.lr,
            gen_lr=args.lr,
            prior=args.prior,
            dae_corruption=args.dae_corruption,
            grad_clip=args.grad_clip,
            walks_per_node=args.walks,
            walk_length=args.walk_length,
            context_size=args.context,
            ppmi_steps=args.ppmi_steps,
            ppmi_beta=args.ppmi_beta,
            seed=args.seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _load_graph(edge_path, weighted):
    with _stage("graph-core"):
        graph = preprocess(load_edge_list(edge_path, weighted=weighted))
    return graph


def _load_features(path, graph):
    with _stage("proximity"):
        feats = load_feature_matrix(path)
        if feats.shape[0] != len(graph):
            raise GraphError(
                f"feature matrix has {feats.shape[0]} rows but the graph has "
                f"{len(graph)} nodes"
            )
    return feats


def _train_and_write(graph, cfg, out_dir, dataset_meta, features=None):
    """Shared embed pipeline: train, then write embedding, log, manifest."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    started = datetime.now(timezone.utc).isoformat(timespec="seconds")
    t0 = time.perf_counter()
    with _stage("embedder"):
        embedding, log = Trainer(graph, cfg, features=features).run()
    elapsed = time.perf_counter() - t0
    with _stage("io"):
        _atomic_write(out_dir / "embedding.txt", lambda p: export_embeddings(embedding, p))
        _atomic_write(out_dir / "training_log.txt", lambda p: log.save(p))
        manifest = {
            "format": MANIFEST_FORMAT,
            "package_version": __version__,
            "command": "embed",
            "created_utc": started,
            "dataset": dataset_meta,
            "config": asdict(cfg),
            "config_digest": cfg.digest(),
            "graph": {"nodes": len(graph), "edges": graph.num_edges()},
            "artifacts": {
                "embedding": "embedding.txt",
                "training_log": "training_log.txt",
            },
            "timing": {"wall_seconds": round(elapsed, 3)},
        }
        _write_json(out_dir / "manifest.json", manifest)
    return embedding, log


def cmd_embed(args):
    if args.from_manifest:
        manifest_path = _require_file(args.from_manifest)
        payload = json.loads(manifest_path.read_text())
        try:
            cfg = TrainConfig(**payload["config"])
            dataset = payload["dataset"]
        except (KeyError, TypeError, ValueError) as exc:
            raise UsageError(f"bad manifest {manifest_path}: {exc}") from exc
        edge_path = dataset["edge_list"]
        weighted = dataset.get("weighted", False)
        features_path = dataset.get("features")
    else:
        if args.edge_list is None:
            raise UsageError("an edge-list path is required (or --from-manifest)")
        cfg = _config_from_args(args)
        edge_path = args.edge_list
        weighted = args.weighted
        features_path = args.features

    edge_path = _require_file(edge_path)
    graph = _load_graph(edge_path, weighted)
    features = None
    if features_path:
        features = _load_features(_require_file(features_path), graph)

    dataset_meta = {
        "edge_list": str(Path(edge_path).resolve()),
        "weighted": bool(weighted),
        "features": str(Path(features_path).resolve()) if features_path else None,
    }
    embedding, _ = _train_and_write(graph, cfg, args.out, dataset_meta, features=features)
    print(
        f"wrote {embedding.num_nodes} x {embedding.dim} {cfg.model} embedding "
        f"to {Path(args.out) / 'embedding.txt'}"
    )
    return 0


def cmd_eval(args):
    emb_path = _require_file(args.embedding)
    labels_path = _require_file(args.labels)
    with _stage("evalkit"):
        try:
            emb = load_embeddings(emb_path)
            index_of = {node_id: i for i, node_id in enumerate(emb.ids)}
            label_set = load_labels(labels_path, index_of)
            spec = SplitSpec(ratios=args.ratios, repetitions=args.reps, seed=args.seed)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        results = evaluate(
            emb.vectors,
            label_set,
            spec,
            l2=args.l2,
            normalize=not args.no_normalize,
        )
    table = format_accuracy_table(results)
    sys.stdout.write(table)
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        with _stage("io"):
            _atomic_write(out_dir / "accuracy.tsv", lambda p: Path(p).write_text(table))
            _write_json(
                out_dir / "manifest.json",
                {
                    "format": MANIFEST_FORMAT,
                    "package_version": __version__,
                    "command": "eval",
                    "created_utc": datetime.now(timezone.utc).isoformat(timespec="seconds"),
                    "inputs": {
                        "embedding": str(emb_path.resolve()),
                        "labels": str(labels_path.resolve()),
                    },
                    "protocol": {
                        "ratios": list(args.ratios),
                        "repetitions": args.reps,
                        "seed": args.seed,
                        "l2": args.l2,
                        "normalize": not args.no_normalize,
                    },
                    "artifacts": {"accuracy": "accuracy.tsv"},
                },
            )
    return 0


SWEEP_AXES = ("dim", "walk_length", "context_size", "prior")


def cmd_sweep(args):
    edge_path = _require_file(args.edge_list)
    labels_path = _require_file(args.labels)
    base_cfg = _config_from_args(args)

    axes = {}
    if args.grid_dim:
        axes["dim"] = args.grid_dim
    if args.grid_walk_length:
        axes["walk_length"] = args.grid_walk_length
    if args.grid_context:
        axes["context_size"] = args.grid_context
    if args.grid_prior:
        axes["prior"] = args.grid_prior
    if not axes:
        raise UsageError("no sweep points")
    names = [a for a in SWEEP_AXES if a in axes]

    graph = _load_graph(edge_path, args.weighted)
    with _stage("evalkit"):
        try:
            label_set = load_labels(labels_path, {nid: i for i, nid in enumerate(graph.ids)})
        except ValueError as exc:
            raise UsageError(str(exc)) from exc

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    dataset_meta = {
        "edge_list": str(Path(edge_path).resolve()),
        "weighted": bool(args.weighted),
        "features": None,
    }

    header = list(names) + ["ratio", "mean_acc", "std_acc", "n_reps", "status"]
    rows = []
    failures = []
    for idx, values in enumerate(itertools.product(*(axes[n] for n in names))):
        overrides = dict(zip(names, values))
        point_dir = out_dir / f"point_{idx:03d}"
        point_label = ", ".join(f"{k}={v}" for k, v in overrides.items())
        try:
            cfg = replace(base_cfg, **overrides)
            embedding, _ = _train_and_write(graph, cfg, point_dir, dataset_meta)
            spec = SplitSpec(ratios=args.ratios, repetitions=args.reps, seed=args.seed)
            results = evaluate(embedding.vectors, label_set, spec, l2=args.l2)
            for r in results:
                rows.append(
                    [str(overrides[n]) for n in names]
                    + [
                        f"{r.ratio:.2f}",
                        f"{100.0 * r.mean_accuracy:.2f}",
                        f"{100.0 * r.std_accuracy:.2f}",
                        str(r.repetitions),
                        "ok",
                    ]
                )
        except Exception as exc:
            failures.append({"point": overrides, "error": str(exc)})
            rows.append([str(overrides[n]) for n in names] + ["-", "-", "-", "-", "failed"])
            print(f"sweep point failed ({point_label}): {exc}", file=sys.stderr)

    table = "\t".join(header) + "\n"
    table += "".join("\t".join(row) + "\n" for row in rows)
    sys.stdout.write(table)
    with _stage("io"):
        _atomic_write(out_dir / "sweep_results.tsv", lambda p: Path(p).write_text(table))
        _write_json(
            out_dir / "manifest.json",
            {
                "format": MANIFEST_FORMAT,
                "package_version": __version__,
                "command": "sweep",
                "created_utc": datetime.now(timezone.utc).isoformat(timespec="seconds"),
                "dataset": dataset_meta,
                "labels": str(labels_path.resolve()),
                "base_config": asdict(base_cfg),
                "grid": {n: list(axes[n]) for n in names},
                "protocol": {
                    "ratios": list(args.ratios),
                    "repetitions": args.reps,
                    "seed": args.seed,
                    "l2": args.l2,
                },
                "artifacts": {"results": "sweep_results.tsv"},
                "failures": failures,
            },
        )
    all_failed = bool(failures) and not any(row[-1] == "ok" for row in rows)
    return 1 if all_failed else 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ane",
        description="Adversarial network embeddings: train, evaluate, sweep.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command")

    p_embed = sub.add_parser("embed", help="train embeddings for an edge list")
    p_embed.add_argument("edge_list", nargs="?", help="edge list path (one edge per line)")
    _add_train_flags(p_embed)
    p_embed.add_argument("--out", default="ane_out", help="output directory")
    p_embed.add_argument(
        "--from-manifest",
        default=None,
        metavar="PATH",
        help="replay a previous run from its manifest.json",
    )
    p_embed.set_defaults(func=cmd_embed)

    p_eval = sub.add_parser("eval", help="node-classification accuracy for an embedding")
    p_eval.add_argument("embedding", help="embedding file from the embed command")
    p_eval.add_argument("labels", help="label file with 'node_id label' lines")
    p_eval.add_argument("--ratios", type=_parse_ratios, default=DEFAULT_RATIOS)
    p_eval.add_argument("--reps", type=int, default=10)
    p_eval.add_argument("--seed", type=int, default=0)
    p_eval.add_argument("--l2", type=float, default=1.0)
    p_eval.add_argument("--no-normalize", action="store_true")
    p_eval.add_argument("--out", default=None, help="optional output directory")
    p_eval.set_defaults(func=cmd_eval)

    p_sweep = sub.add_parser("sweep", help="grid of embed+eval runs")
    p_sweep.add_argument("edge_list")
    p_sweep.add_argument("labels")
    _add_train_flags(p_sweep)
    p_sweep.add_argument("--grid-dim", type=_parse_list(int), default=None)
    p_sweep.add_argument("--grid-walk-length", type=_parse_list(int), default=None)
    p_sweep.add_argument("--grid-context", type=_parse_list(int), default=None)
    p_sweep.add_argument("--grid-prior", type=_parse_list(str), default=None)
    p_sweep.add_argument("--ratios", type=_parse_ratios, default=(0.5,))
    p_sweep.add_argument("--reps", type=int, default=10)
    p_sweep.add_argument("--l2", type=float, default=1.0)
    p_sweep.add_argument("--out", default="ane_sweep")
    p_sweep.set_defaults(func=cmd_sweep)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "command", None) is None:
        parser.print_help(file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except StageError as exc:
        print(f"error {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
