"""Command line interface.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from . import data as datamod
from .config import load_config
from .core import subspace_from_record
from .errors import ConfigError, DataError, PointedMissError
from .experiment import ExperimentConfig, run_experiment
from .impute import STRATEGIES, ImputationStrategy
from .kernel import cross_gram, gram
from .moments import estimate_moments
from .serialize import TrainedPipeline, dump_moments, dump_subspaces, load_moments, load_subspaces
from .svm import SmoConfig, predict, train
from .transform import AffineMap, apply_affine, pca_map, whitening_map

log = logging.getLogger("pointedmiss")


def _strategy(value: str) -> str:
    value = value.replace("-", "_")
    if value not in STRATEGIES:
        raise argparse.ArgumentTypeError(f"unknown strategy {value!r}")
    return value


def _label_column(value: str):
    if value.lower() == "none":
        return None
    try:
        return int(value)
    except ValueError:
        return value


def _add_input(p):
    p.add_argument("input", help="CSV file with a header row")
    p.add_argument("--label-column", type=_label_column, default=-1,
                   help="label column name or index ('none' for unlabelled data)")
    p.add_argument("--drop-columns", default="", help="comma separated columns to ignore")
    p.add_argument("--missing-markers", default=",NA,?",
                   help="comma separated cell values meaning 'missing'")


def _load(args):
    drops = tuple(_label_column(c) for c in args.drop_columns.split(",") if c.strip())
    markers = tuple(m.strip() for m in args.missing_markers.split(","))
    return datamod.load_csv(args.input, markers, args.label_column, drops)


def _moments(args, data):
    if getattr(args, "moments", None):
        return load_moments(args.moments)
    return estimate_moments(data, args.moments_method.replace("-", "_"))


def _subspaces(args, data):
    """Impute, then optionally whiten, every record of ``data``."""
    moments = _moments(args, data)
    imputer = ImputationStrategy.fit(args.strategy, data, moments)
    points = imputer.apply_all(data)
    f = None
    if getattr(args, "whiten", False):
        f = whitening_map(moments)
        points = [apply_affine(f, p) for p in points]
    return points, imputer, f, moments


def cmd_gen_missing(args):
    d = _load(args)
    out = datamod.apply_missingness(d, args.kind, args.fraction, args.seed)
    datamod.write_csv(out, args.output)
    print(f"missing fraction {out.missing_fraction():.4f}, "
          f"guarded records {out.info.get('guarded_records', 0)}")


def cmd_moments(args):
    d = _load(args)
    m = estimate_moments(d, args.moments_method.replace("-", "_"), args.ridge)
    dump_moments(m, args.output)
    print(f"{m.source} moments written to {args.output} (iterations {m.iterations})")


def cmd_impute(args):
    d = _load(args)
    points, *_ = _subspaces(args, d)
    filled = datamod.Dataset(np.stack([p.basepoint for p in points]), np.ones_like(d.observed),
                             d.labels, d.feature_names)
    datamod.write_csv(filled, args.output)


def cmd_transform(args):
    d = _load(args)
    args.whiten = False
    points, _, _, moments = _subspaces(args, d)
    f = whitening_map(moments) if args.op == "whiten" else pca_map(moments, args.k)
    dump_subspaces([apply_affine(f, p) for p in points], args.output)


def _read_points(args):
    if args.input.endswith(".json"):
        return load_subspaces(args.input)
    points, *_ = _subspaces(args, _load(args))
    return points


def cmd_gram(args):
    points = _read_points(args)
    g = gram(points, args.d_weight)
    with Path(args.output).open("w", newline="") as fh:
        fh.write(f"# gram n={len(points)} d={args.d_weight:g}\n")
        w = csv.writer(fh)
        for row in g.entries:
            w.writerow([repr(float(v)) for v in row])


def cmd_train(args):
    d = _load(args)
    if d.labels is None:
        raise DataError("training data needs a label column")
    args.whiten = not args.no_whiten
    points, imputer, f, moments = _subspaces(args, d)
    f = f or AffineMap.identity(d.dimension)
    g = gram(points, args.d_weight)
    model = train(g, d.labels, args.C, SmoConfig(args.kkt_tolerance, seed=args.seed))
    compact = model.compact()
    pipeline = TrainedPipeline(imputer, f, compact, [points[i] for i in model.support_indices])
    pipeline.dump(args.output)
    acc = np.mean(predict(model, g.entries)[0] == d.labels)
    print(f"{model.support_indices.size} support vectors, training accuracy {acc:.4f}")


def cmd_predict(args):
    pipeline = TrainedPipeline.load(args.model)
    d = _load(args)
    points = [apply_affine(pipeline.affine_map, pipeline.imputer.apply(r)) for r in d.records]
    rows = cross_gram(pipeline.support_vectors, points, pipeline.model.kernel_config)
    labels, values = predict(pipeline.model, rows)
    with Path(args.output).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["prediction", "decision"])
        for l, v in zip(labels, values):
            w.writerow([int(l), repr(float(v))])
    if d.labels is not None:
        print(f"accuracy {np.mean(labels == d.labels):.4f}")


def cmd_experiment(args):
    overrides = dict(seed=args.seed, threads=args.threads, missingness=args.missingness,
                     fraction=args.fraction,
                     strategies=tuple(args.strategies.split(",")) if args.strategies else None)
    if args.config:
        config = load_config(args.config, dataset_path=args.data, **overrides)
    else:
        if not args.data and not args.synthetic:
            raise ConfigError("give --config, --data or --synthetic")
        config = ExperimentConfig(dataset_path=args.data,
                                  **{k: v for k, v in overrides.items() if v is not None})
    data = datamod.two_gaussians(seed=config.seed) if args.synthetic else None
    report = run_experiment(config, data)
    sys.stdout.write(report.to_text())
    if args.out_csv:
        Path(args.out_csv).write_text(report.to_csv())


def cmd_render(args):
    from .demos import pca_demo, whitening_demo
    from .render import render2d

    if args.demo == "whitening":
        whitening_demo(args.output, strategy=args.strategy)
        return
    if args.demo == "pca":
        pca_demo(args.output)
        return
    if not args.input:
        raise ConfigError("render needs an input file or --demo")
    if args.input.endswith(".json"):
        points = load_subspaces(args.input)
    else:
        d = datamod.load_csv(args.input, label_column=None)
        points = [subspace_from_record(r) for r in d.records]
    after = load_subspaces(args.after) if args.after else None
    render2d(points, args.output, after=after)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pointedmiss", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def strategy_opts(q):
        q.add_argument("--strategy", type=_strategy, default="most_probable",
                       help="zero | mean | median | most-probable")
        q.add_argument("--moments-method", default="em", choices=["em", "available-case", "available_case"])
        q.add_argument("--moments", help="moments JSON to use instead of estimating")

    q = sub.add_parser("gen-missing", help="remove cells at random or structurally")
    _add_input(q)
    q.add_argument("output")
    q.add_argument("--kind", choices=["random", "structural"], default="random")
    q.add_argument("--fraction", type=float, default=0.9)
    q.add_argument("--seed", type=int, default=0)
    q.set_defaults(func=cmd_gen_missing)

    q = sub.add_parser("moments", help="estimate mean and covariance")
    _add_input(q)
    q.add_argument("output")
    q.add_argument("--moments-method", default="em", choices=["em", "available-case", "available_case"])
    q.add_argument("--ridge", type=float)
    q.set_defaults(func=cmd_moments)

    q = sub.add_parser("impute", help="write imputed basepoints as CSV")
    _add_input(q)
    q.add_argument("output")
    strategy_opts(q)
    q.set_defaults(func=cmd_impute)

    q = sub.add_parser("transform", help="impute and map records to subspaces (JSON)")
    _add_input(q)
    q.add_argument("output")
    strategy_opts(q)
    q.add_argument("--op", choices=["whiten", "pca"], required=True)
    q.add_argument("--k", type=int, default=2)
    q.set_defaults(func=cmd_transform)

    q = sub.add_parser("gram", help="Gram matrix of subspaces as CSV")
    _add_input(q)
    q.add_argument("output")
    strategy_opts(q)
    q.add_argument("--whiten", action="store_true")
    q.add_argument("--d-weight", type=float, default=1.0)
    q.set_defaults(func=cmd_gram)

    q = sub.add_parser("train", help="train an SVM and write a model file")
    _add_input(q)
    q.add_argument("output")
    strategy_opts(q)
    q.add_argument("--no-whiten", action="store_true")
    q.add_argument("--C", type=float, default=1.0)
    q.add_argument("--d-weight", type=float, default=1.0)
    q.add_argument("--kkt-tolerance", type=float, default=1e-3)
    q.add_argument("--seed", type=int, default=0)
    q.set_defaults(func=cmd_train)

    q = sub.add_parser("predict", help="score a CSV with a model file")
    q.add_argument("model")
    _add_input(q)
    q.add_argument("output")
    q.set_defaults(func=cmd_predict)

    q = sub.add_parser("experiment", help="double cross-validated comparison")
    q.add_argument("--config")
    q.add_argument("--data")
    q.add_argument("--synthetic", action="store_true", help="use the two-Gaussian benchmark")
    q.add_argument("--seed", type=int)
    q.add_argument("--threads", type=int)
    q.add_argument("--missingness", choices=["asis", "random", "structural"])
    q.add_argument("--fraction", type=float)
    q.add_argument("--strategies", help="comma separated subset of strategies")
    q.add_argument("--out-csv")
    q.set_defaults(func=cmd_experiment)

    q = sub.add_parser("render", help="draw 2-D subspaces as SVG")
    q.add_argument("input", nargs="?")
    q.add_argument("output")
    q.add_argument("--after", help="second subspace file drawn as a right-hand panel")
    q.add_argument("--demo", choices=["whitening", "pca"])
    q.add_argument("--strategy", default="zero", choices=["zero", "most_probable"])
    q.set_defaults(func=cmd_render)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except PointedMissError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DataError.exit_code
    except (ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return ConfigError.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
