"""Command-line interface.

Subcommands: gen (synthetic data), fit (GMM), adapt (one method),
eval (experiment grid from JSON config), plot-data (scatter export).
Exit codes: 0 success, 1 validation error, 2 I/O error.  Defaults are
chosen so the README quickstart reproduces the shipped experiment
settings without extra flags.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys

import numpy as np

from . import __version__
from .data import Dataset, load_csv, make_shifted_blobs, save_csv
from .errors import CsvFormatError, ValidationError
from .experiment import (
    METHODS,
    ExperimentConfig,
    TaskSpec,
    _stage,
    run_grid,
    run_method,
    write_text_atomic,
)
from .gmm import bic, em_fit, label_components, save_gmm
from .plots import emit_plot_data

ADAPT_METHODS = tuple(m for m in METHODS if m != "source-only")


def _parse_shift(text: str, d: int) -> np.ndarray:
    try:
        parts = [float(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError as exc:
        raise ValidationError(f"bad --shift value {text!r}: {exc}") from exc
    if len(parts) > d:
        raise ValidationError(f"--shift has {len(parts)} entries but --dim is {d}")
    shift = np.zeros(d)
    shift[: len(parts)] = parts
    return shift


def _cmd_gen(args) -> int:
    with _stage("gen"):
        shift = _parse_shift(args.shift, args.dim)
        src, tgt = make_shifted_blobs(
            n_per_class=args.n_per_class,
            n_classes=args.classes,
            d=args.dim,
            shift=shift,
            rotation_angle=args.rotate,
            spread=args.spread,
            seed=args.seed,
        )
        save_csv(src, args.out_src)
        save_csv(tgt, args.out_tgt)
    print(f"wrote {args.out_src} and {args.out_tgt} ({src.n} samples each)")
    return 0


def _parse_k_sweep(text: str) -> tuple[int, int]:
    try:
        lo_s, hi_s = text.split("..")
        lo, hi = int(lo_s), int(hi_s)
    except ValueError as exc:
        raise ValidationError(
            f"bad --k-sweep value {text!r}; expected min..max"
        ) from exc
    if lo < 1 or hi < lo:
        raise ValidationError(f"bad --k-sweep range {lo}..{hi}")
    return lo, hi


def _cmd_fit(args) -> int:
    if (args.k is None) == (args.k_sweep is None):
        raise ValidationError("fit: pass exactly one of --k or --k-sweep")
    with _stage("load"):
        data = load_csv(args.data, label_column=args.label_column)
    with _stage("fit"):
        if args.k is not None:
            if args.k < 1:
                raise ValidationError("--k must be >= 1")
            gmm, _ = em_fit(data.without_labels(), args.k, seed=args.seed)
            chosen = args.k
        else:
            lo, hi = _parse_k_sweep(args.k_sweep)
            best = None
            for k in range(lo, hi + 1):
                cand, _ = em_fit(data.without_labels(), k, seed=args.seed)
                score = bic(cand, data.features)
                if best is None or score < best[0] - 1e-12:
                    best = (score, k, cand)
            _, chosen, gmm = best
        if data.labels is not None:
            gmm = label_components(gmm, data)
    with _stage("write"):
        save_gmm(gmm, args.out)
    print(f"fitted K={chosen} mixture on {data.n} samples -> {args.out}")
    return 0


def _load_target_features(path, label_column: str) -> np.ndarray:
    """Load target points, dropping any label column unread."""
    with open(path, newline="", encoding="utf-8") as fh:
        header = next(csv.reader(fh), None)
    if header is not None and label_column in header:
        ds = load_csv(path, label_column=label_column)
        return ds.without_labels().features
    return load_csv(path).features


def _cmd_adapt(args) -> int:
    if args.method not in ADAPT_METHODS:
        raise ValidationError(
            f"unknown method {args.method!r}; choose one of "
            f"{', '.join(ADAPT_METHODS)}"
        )
    with _stage("load"):
        src = load_csv(args.src, label_column=args.label_column)
        if src.labels is None:
            raise ValidationError("source CSV has no labels")
        tgt_features = _load_target_features(args.tgt, args.label_column)
    config = ExperimentConfig(
        task=TaskSpec(name="adapt", src_csv=args.src, tgt_csv=args.tgt),
        method=args.method,
        k_src=args.k_src,
        k_tgt=args.k_tgt,
        seed=args.seed,
        epsilon=args.epsilon,
        subsample=args.subsample,
        allow_large=args.allow_large,
    )
    result = run_method(config, src, tgt_features)
    with _stage("write"):
        if result.predicted_labels is not None:
            out_ds = Dataset(tgt_features, result.predicted_labels)
        else:
            out_ds = result.transported_points
        save_csv(out_ds, args.out)
        payload = json.dumps(result.diagnostics, indent=2, sort_keys=True)
        write_text_atomic(f"{args.out}.diag.json", payload + "\n")
    print(f"{args.method}: wrote {args.out} ({out_ds.n} rows)")
    return 0


def _cmd_eval(args) -> int:
    with _stage("config"):
        try:
            with open(args.config, encoding="utf-8") as fh:
                grid = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"bad grid config: {exc}") from exc
    reports = run_grid(grid, args.out_dir, jobs=args.jobs)
    print(f"ran {len(reports)} cells -> {args.out_dir}/results.csv")
    return 0


def _cmd_plot_data(args) -> int:
    groups = []
    with _stage("load"):
        for path, role in (
            (args.source, "source"),
            (args.target, "target"),
            (args.transported, "transported"),
        ):
            if path is None:
                continue
            with open(path, newline="", encoding="utf-8") as fh:
                header = next(csv.reader(fh), None)
            if header is not None and args.label_column in header:
                ds = load_csv(path, label_column=args.label_column)
                groups.append((ds.features, ds.labels, role))
            else:
                ds = load_csv(path)
                groups.append((ds.features, None, role))
    if not groups:
        raise ValidationError("plot-data: give at least one input CSV")
    with _stage("write"):
        meta = emit_plot_data(groups, args.out, svg_path=args.svg)
    print(
        f"wrote {args.out} ({sum(meta['counts'].values())} points, "
        f"projection={meta['projection']})"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gmmotda",
        description="Domain adaptation via optimal transport between "
        "Gaussian mixtures.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic source/target pair")
    p.add_argument("--n-per-class", type=int, default=300,
                   help="samples per class per domain (default 300)")
    p.add_argument("--classes", type=int, default=3,
                   help="number of classes (default 3)")
    p.add_argument("--dim", type=int, default=2, help="dimension (default 2)")
    p.add_argument("--shift", default="5,0",
                   help="comma-separated target shift (default 5,0)")
    p.add_argument("--rotate", type=float, default=math.pi / 4,
                   help="target rotation in radians (default pi/4)")
    p.add_argument("--spread", type=float, default=0.23,
                   help="class blob std (default 0.23)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-src", required=True, help="source CSV path")
    p.add_argument("--out-tgt", required=True, help="target CSV path")
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("fit", help="fit a diagonal GMM and save it as JSON")
    p.add_argument("--data", required=True, help="input CSV")
    p.add_argument("--label-column", default=None,
                   help="label column name; fitted components get label "
                   "distributions when given")
    p.add_argument("--k", type=int, default=None, help="number of components")
    p.add_argument("--k-sweep", default=None,
                   help="min..max range; picks K by BIC")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output GMM JSON path")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("adapt", help="run one adaptation method")
    p.add_argument("--method", required=True,
                   help=f"one of {', '.join(ADAPT_METHODS)}")
    p.add_argument("--src", required=True, help="labeled source CSV")
    p.add_argument("--tgt", required=True,
                   help="target CSV (labels, if any, are dropped)")
    p.add_argument("--label-column", default="label")
    p.add_argument("--k-src", type=int, default=3)
    p.add_argument("--k-tgt", type=int, default=3)
    p.add_argument("--epsilon", type=float, default=None,
                   help="Sinkhorn regularization (default 0.01*mean cost)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--subsample", type=int, default=2000,
                   help="per-domain cap for empirical transport (default 2000)")
    p.add_argument("--allow-large", action="store_true",
                   help="lift the n*m budget guard on empirical transport")
    p.add_argument("--out", required=True,
                   help="output CSV (labeled points); a .diag.json sidecar "
                   "is written next to it")
    p.set_defaults(func=_cmd_adapt)

    p = sub.add_parser("eval", help="run an experiment grid from a JSON config")
    p.add_argument("--config", required=True, help="grid config JSON")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--jobs", type=int, default=1,
                   help="concurrent grid cells (default 1)")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("plot-data", help="emit 2-D scatter data (CSV/SVG)")
    p.add_argument("--source", default=None, help="source CSV")
    p.add_argument("--target", default=None, help="target CSV")
    p.add_argument("--transported", default=None, help="transported CSV")
    p.add_argument("--label-column", default="label")
    p.add_argument("--out", required=True, help="output scatter CSV")
    p.add_argument("--svg", default=None, help="optional SVG path")
    p.set_defaults(func=_cmd_plot_data)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except CsvFormatError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    except OSError as exc:
        print(str(exc), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
