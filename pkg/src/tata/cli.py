"""Command line entry points: run, cluster, bdc-selftest, export-fixtures."""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .adaptation import StreamRecord, process_stream
from .clustering import kmeans
from .config import load_config, parse_toggles
from .embfile import read_embedding_file, write_embedding_file
from .encoders import open_encoder
from .errors import ManifestMismatchError, TataError
from .fixtures import export_fixtures
from .predictions import write_predictions
from .selftest import run_selftest
from .textspace import TextBank


def _load_bank(path) -> TextBank:
    vectors, manifest = read_embedding_file(path)
    return TextBank.from_rows(manifest["ids"], vectors)


def _load_stream(path):
    vectors, manifest = read_embedding_file(path)
    labels = manifest.get("labels") or [None] * len(manifest["ids"])
    return [
        StreamRecord(sample_id=str(i), f_v=v, label=(int(l) if l is not None else None))
        for i, v, l in zip(manifest["ids"], vectors, labels)
    ]


def _cmd_run(args) -> int:
    overrides = {
        name: getattr(args, name)
        for name in (
            "k1", "k3", "alpha", "tau", "tau_tilde", "n_attr", "theta",
            "capacity", "warmup", "recluster_every", "mode", "seed",
        )
    }
    if args.toggle is not None:
        overrides.update(parse_toggles(args.toggle))
    config = load_config(args.config, overrides)

    class_vectors, class_manifest = read_embedding_file(args.class_prompts)
    class_names = class_manifest.get("class_names")
    if not class_names or len(class_names) != len(class_vectors):
        raise ManifestMismatchError(f"{args.class_prompts} must carry one class name per record")
    config = config.replace(n_classes=len(class_names))

    noun_bank = _load_bank(args.nouns) if args.nouns else None
    attribute_bank = _load_bank(args.attributes) if args.attributes else None
    encoder = open_encoder(args.encoder) if args.encoder else None
    records = _load_stream(args.test)

    results, summary = process_stream(
        records,
        class_names,
        class_vectors,
        config,
        noun_bank=noun_bank,
        attribute_bank=attribute_bank,
        encoder=encoder,
    )
    written = write_predictions(
        results,
        args.out,
        extra={
            "skipped": summary.skipped,
            "admitted": summary.admitted,
            "reclusters": summary.reclusters,
        },
    )
    print(json.dumps(written, sort_keys=True))
    return 0


def _cmd_cluster(args) -> int:
    vectors, manifest = read_embedding_file(args.input)
    model = kmeans(vectors, args.n, seed=args.seed)
    write_embedding_file(
        args.out,
        model.centroids,
        {
            "ids": [f"centroid-{i}" for i in range(args.n)],
            "kind": "centroids",
            "assignments": [int(a) for a in model.assignments],
            "source_ids": manifest["ids"],
            "inertia": model.inertia,
            "n_iter": model.n_iter,
        },
    )
    print(json.dumps({"out": str(args.out), "inertia": model.inertia, "n_iter": model.n_iter}))
    return 0


def _cmd_selftest(args) -> int:
    results = run_selftest(seed=args.seed)
    failures = 0
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.detail}")
        failures += 0 if r.passed else 1
    return 0 if failures == 0 else 1


def _cmd_export(args) -> int:
    paths = export_fixtures(
        args.outdir,
        seed=args.seed,
        n_per_class=args.n_per_class,
        dim=args.dim,
        n_classes=args.n_classes,
    )
    print(json.dumps(paths, sort_keys=True, indent=1))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tata",
        description="training-free test-time adaptation over precomputed embeddings",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the full pipeline over a test stream")
    run.add_argument("--test", required=True, help="embedding file of the test stream")
    run.add_argument("--class-prompts", required=True, help="embedding file of plain class prompts")
    run.add_argument("--nouns", help="noun bank embedding file")
    run.add_argument("--attributes", help="attribute bank embedding file")
    run.add_argument("--encoder", help="encoder spec: fixture:PATH | world:PATH | tcp:HOST:PORT | cmd:ARGV")
    run.add_argument("--config", help="JSON config file (flags take precedence)")
    run.add_argument("--out", default="predictions.ndjson", help="prediction output path")
    run.add_argument("--k1", type=int)
    run.add_argument("--k3", type=int)
    run.add_argument("--alpha", type=float)
    run.add_argument("--tau", type=float)
    run.add_argument("--tau-tilde", dest="tau_tilde", type=float)
    run.add_argument("--n-attr", dest="n_attr", type=int)
    run.add_argument("--theta", type=float)
    run.add_argument("--capacity", type=int)
    run.add_argument("--warmup", type=int)
    run.add_argument("--recluster-every", dest="recluster_every", type=int)
    run.add_argument("--mode", choices=["transductive", "streaming"])
    run.add_argument("--seed", type=int)
    run.add_argument("--toggle", help='enabled components, e.g. "aap,bdc,mac,sv" or "none"')
    run.set_defaults(func=_cmd_run)

    cluster = sub.add_parser("cluster", help="k-means over an embedding file")
    cluster.add_argument("--input", required=True)
    cluster.add_argument("--n", type=int, required=True)
    cluster.add_argument("--seed", type=int, default=0)
    cluster.add_argument("--out", required=True)
    cluster.set_defaults(func=_cmd_cluster)

    selftest = sub.add_parser("bdc-selftest", help="oracle-equivalence checks for the BDC module")
    selftest.add_argument("--seed", type=int, default=0)
    selftest.set_defaults(func=_cmd_selftest)

    export = sub.add_parser("export-fixtures", help="write the synthetic benchmark inputs")
    export.add_argument("--outdir", required=True)
    export.add_argument("--seed", type=int, default=0)
    export.add_argument("--n-per-class", dest="n_per_class", type=int, default=20)
    export.add_argument("--dim", type=int, default=64)
    export.add_argument("--n-classes", dest="n_classes", type=int, default=10)
    export.set_defaults(func=_cmd_export)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except TataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure, not a validation problem
        print(f"unexpected failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
