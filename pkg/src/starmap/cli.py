"""Command-line interface.

Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time

import numpy as np

from .datasets import (CsvFormatError, load_csv, load_embedding_csv, save_csv,
                       save_embedding_csv, synth_hierarchy)
from .kmeans import PREREDUCE_THRESHOLD, heuristic_C
from .metrics import CSV_FIELDS, DEFAULT_MAX_PAIRS, MetricReport, evaluate, population_sd
from .optimizer import Hyperparams
from .pipeline import RunConfig, StageError, compare, run
from .plot import PlotSpec, save_svg

log = logging.getLogger("starmap")


class CliError(Exception):
    """Runtime failure reported with exit status 1."""


def _anchors(value):
    if value == "auto":
        return value
    try:
        n = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer or 'auto', got {value!r}")
    if n < 1:
        raise argparse.ArgumentTypeError("anchors must be >= 1")
    return n


def _positive_int(value):
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return n


def _unit_interval(value):
    x = float(value)
    if not 0.0 <= x <= 1.0:
        raise argparse.ArgumentTypeError(f"lambda must lie in [0, 1], got {value}")
    return x


def _positive_float(value):
    x = float(value)
    if not x > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {value}")
    return x


def _stem(path):
    return os.path.splitext(os.path.basename(path))[0]


def _load_input(path, extra_label=None):
    data = load_csv(path)
    if extra_label is not None and extra_label not in data.labels:
        data = load_csv(path, label_cols=list(data.labels) + [extra_label])
    return data


def cmd_synth(args):
    data = synth_hierarchy(seed=args.seed, spread=tuple(args.spread), noise_sd=args.noise_sd)
    save_csv(args.out, data)
    log.info("wrote %d points to %s", data.n, args.out)


def _hyperparams(args):
    return Hyperparams(a=args.a, b=args.b, lam=args.lam, k=args.k, n_epochs=args.epochs,
                       clip=args.clip, seed=args.seed,
                       negative_sample_rate=args.negative_sample_rate)


def cmd_embed(args):
    data = _load_input(args.input)
    if args.method == "starmap" and args.anchors == "auto":
        log.info("--anchors auto resolved to %d", heuristic_C(data.n))
    cfg = RunConfig(method=args.method, hyperparams=_hyperparams(args), anchors=args.anchors,
                    prereduce_threshold=args.prereduce_threshold,
                    deterministic=args.deterministic, seed=args.seed)
    result = run(data, cfg)
    stars = result.stars if args.method == "starmap" else None
    save_embedding_csv(args.out, result.Y, labels=data.labels or None, stars=stars,
                       assignment=result.assignment, stars_path=args.stars_out)
    r = result.report
    log.info("embedded %d points in %.2fs; knn_accuracy=%.4f distance_correlation=%.4f",
             data.n, r.elapsed_seconds, r.knn_accuracy, r.distance_correlation)


def cmd_eval(args):
    original = _load_input(args.original)
    Y, extra = load_embedding_csv(args.embedding)
    if Y.shape[0] != original.n:
        raise CliError(f"row count mismatch: original has {original.n}, embedding has {Y.shape[0]}")
    labels = None
    if args.labels is not None:
        if args.labels in original.labels:
            labels = original.labels[args.labels]
        elif args.labels in extra:
            labels = np.unique(extra[args.labels], return_inverse=True)[1]
        else:
            raise CliError(f"label column {args.labels!r} not found")
    reports = []
    for r in range(args.repeats):
        reports.append(evaluate(original.X, Y, labels, k=args.k, max_pairs=args.max_pairs,
                                seed=args.seed + r))
    report = MetricReport(
        float(np.mean([x.knn_accuracy for x in reports])),
        float(np.mean([x.distance_correlation for x in reports])),
        reports[0].n_pairs_sampled,
        float(sum(x.elapsed_seconds for x in reports)),
    )
    if args.csv:
        print(",".join(CSV_FIELDS))
        print(report.csv_row(_stem(args.embedding), _stem(args.original), args.seed))
    else:
        payload = json.loads(report.to_json())
        if args.repeats > 1:
            payload["knn_accuracy_sd"] = population_sd(x.knn_accuracy for x in reports)
            payload["distance_correlation_sd"] = population_sd(
                x.distance_correlation for x in reports)
        print(json.dumps(payload))


def cmd_plot(args):
    Y, extra = load_embedding_csv(args.embedding)
    if Y.shape[1] != 2:
        raise CliError(f"plot needs a 2-D embedding, got {Y.shape[1]} columns")
    labels = None
    if args.color_by is not None:
        if args.color_by not in extra:
            raise CliError(f"no column {args.color_by!r} in {args.embedding}")
        labels = extra[args.color_by]
    stars = None
    if args.stars is not None:
        stars, _ = load_embedding_csv(args.stars)
        if stars.shape[1] != 2:
            raise CliError("stars must be 2-D")
    spec = PlotSpec(width=args.width, height=args.height, point_radius=args.point_radius,
                    color_by=args.color_by, show_stars=stars is not None)
    save_svg(args.out, Y, labels, stars, spec)


def cmd_compare(args):
    data = _load_input(args.input)
    hp = _hyperparams(args)
    configs = [RunConfig(method=m, hyperparams=hp, anchors=args.anchors,
                         deterministic=args.deterministic, seed=args.seed,
                         label_column=args.labels)
               for m in args.methods]
    rows = compare(data, configs, repeats=args.repeats)
    out = []
    for row in rows:
        out.append({
            "method": row.method,
            "anchors": row.anchors,
            "runs": len(row.runs),
            "knn_accuracy_mean": row.mean("knn_accuracy"),
            "knn_accuracy_sd": row.std("knn_accuracy"),
            "distance_correlation_mean": row.mean("distance_correlation"),
            "distance_correlation_sd": row.std("distance_correlation"),
            "elapsed_seconds_mean": row.mean("elapsed_seconds"),
            "errors": [msg for _, msg in row.errors],
        })
    print(json.dumps(out, indent=2))


def _add_hyperparam_flags(p):
    p.add_argument("--anchors", type=_anchors, default="auto",
                   help="number of anchors C, or 'auto' for min(N/500, 100)")
    p.add_argument("--lambda", dest="lam", type=_unit_interval, default=0.1)
    p.add_argument("--k", type=_positive_int, default=20)
    p.add_argument("--epochs", type=_positive_int, default=None,
                   help="default 500 for N <= 10000, else 200")
    p.add_argument("--clip", type=_positive_float, default=0.4)
    p.add_argument("--a", type=_positive_float, default=1.577)
    p.add_argument("--b", type=_positive_float, default=0.895)
    p.add_argument("--negative-sample-rate", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--deterministic", action="store_true",
                   help="single-threaded, bit-reproducible optimization")


def build_parser():
    parser = argparse.ArgumentParser(prog="starmap", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write the synthetic hierarchical dataset")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--spread", type=float, nargs=3, default=(10.0, 2.0, 0.4))
    p.add_argument("--noise-sd", type=_positive_float, default=0.08)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("embed", help="embed a CSV dataset")
    p.add_argument("--input", required=True)
    p.add_argument("--method", choices=("umap", "starmap"), default="starmap")
    _add_hyperparam_flags(p)
    p.add_argument("--prereduce-threshold", type=int, default=PREREDUCE_THRESHOLD)
    p.add_argument("--out", required=True)
    p.add_argument("--stars-out", default=None)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("eval", help="score an embedding against its input")
    p.add_argument("--original", required=True)
    p.add_argument("--embedding", required=True)
    p.add_argument("--labels", default=None)
    p.add_argument("--repeats", type=_positive_int, default=1)
    p.add_argument("--k", type=_positive_int, default=5)
    p.add_argument("--max-pairs", type=_positive_int, default=DEFAULT_MAX_PAIRS)
    p.add_argument("--seed", type=int, default=0)
    fmt = p.add_mutually_exclusive_group()
    fmt.add_argument("--json", action="store_true", help="JSON object (default)")
    fmt.add_argument("--csv", action="store_true", help="CSV header and row")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("plot", help="render a 2-D embedding as SVG")
    p.add_argument("--embedding", required=True)
    p.add_argument("--stars", default=None)
    p.add_argument("--color-by", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--width", type=_positive_int, default=800)
    p.add_argument("--height", type=_positive_int, default=800)
    p.add_argument("--point-radius", type=_positive_float, default=1.5)
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("compare", help="repeat runs of several methods and summarize")
    p.add_argument("--input", required=True)
    p.add_argument("--methods", nargs="+", choices=("umap", "starmap"),
                   default=["umap", "starmap"])
    p.add_argument("--repeats", type=_positive_int, default=10)
    p.add_argument("--labels", default=None)
    _add_hyperparam_flags(p)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    start = time.perf_counter()
    try:
        args.func(args)
    except StageError as exc:
        print(f"starmap: error in stage {exc.stage}: {exc.cause}", file=sys.stderr)
        return 1
    except (CliError, CsvFormatError, OSError, ValueError, KeyError) as exc:
        print(f"starmap: error: {exc}", file=sys.stderr)
        return 1
    log.info("%s finished in %.2fs", args.command, time.perf_counter() - start)
    return 0


if __name__ == "__main__":
    sys.exit(main())
