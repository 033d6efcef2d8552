"""Command-line interface.

Subcommands mirror the library stages:

* ``cag generate`` -- adaptive sample generation against a built-in solver,
  written as a dataset file (plus an optional JSON generation report).
* ``cag train``   -- train a surrogate from a solver or an existing dataset.
* ``cag predict`` -- load a model and predict fields (CSV or JSON out).
* ``cag bench``   -- adaptive-vs-uniform comparison with JSON/CSV reports
  and PNG figures.

Exit codes: 0 success; 1 usage or input errors; 2 convergence or numerical
failures.  ``--seed`` defaults to the CAG_SEED environment variable (or 0).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .bench import PROBLEMS, run_comparison, write_report
from .dataset import load_dataset, save_dataset
from .errors import CagError, ConvergenceFailure, InvalidParameter, NumericalFailure
from .gpr import OptimizerConfig
from .pipeline import (
    TrainConfig,
    load_model,
    offline_train,
    online_predict,
    save_model,
)
from .sampling import SamplingConfig, adaptive_generate
from .solvers import SOLVERS, get_solver

log = logging.getLogger(__name__)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # keep exit-code policy in our hands
        raise _UsageError(message)


def _env_seed() -> int:
    raw = os.environ.get("CAG_SEED", "0")
    try:
        return int(raw)
    except ValueError:
        raise InvalidParameter(f"CAG_SEED must be an integer, got {raw!r}") from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(part) for part in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _float_list(text: str) -> list[float]:
    try:
        return [float(part) for part in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _add_sampling_args(parser, *, require_solver: bool):
    group = parser.add_argument_group("sampling")
    group.add_argument("--solver", choices=sorted(SOLVERS),
                       required=require_solver, help="built-in solver to label samples")
    group.add_argument("--chi-min", type=float, help="lower end of the parameter interval")
    group.add_argument("--chi-max", type=float, help="upper end of the parameter interval")
    group.add_argument("--m0", type=int, default=5, help="initial uniform grid size")
    group.add_argument("--k", type=int, default=3, help="number of response clusters")
    group.add_argument("--q-min", type=int, default=4,
                       help="minimum samples per cluster before training")
    group.add_argument("--outer-max-iter", type=int, default=50,
                       help="refinement round budget")


def _sampling_config(args, seed: int) -> SamplingConfig:
    if args.chi_min is None or args.chi_max is None:
        raise InvalidParameter("--chi-min and --chi-max are required with a solver")
    return SamplingConfig(
        args.chi_min, args.chi_max, m0=args.m0, k=args.k, q_min=args.q_min,
        outer_max_iter=args.outer_max_iter, seed=seed,
    )


def _seed_of(args) -> int:
    return _env_seed() if args.seed is None else args.seed


def build_parser() -> _Parser:
    parser = _Parser(prog="cag", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="adaptively generate a clustered training set")
    _add_sampling_args(p, require_solver=True)
    p.add_argument("--seed", type=int, default=None, help="RNG seed (default: CAG_SEED or 0)")
    p.add_argument("--output", required=True, help="dataset file (.csv or .json)")
    p.add_argument("--report", help="optional JSON generation report")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("train", help="train a surrogate model")
    _add_sampling_args(p, require_solver=False)
    p.add_argument("--dataset", help="train from an existing dataset file instead of a solver")
    p.add_argument("--r", type=int, default=50, help="reduction order per cluster")
    p.add_argument("--n-neighbors", type=int, default=3, help="classifier vote size")
    p.add_argument("--restarts", type=int, default=8, help="hyperparameter fit restarts")
    p.add_argument("--seed", type=int, default=None, help="RNG seed (default: CAG_SEED or 0)")
    p.add_argument("--output", required=True, help="model file (.json)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="predict fields with a trained model")
    p.add_argument("--model", required=True, help="model file from `cag train`")
    p.add_argument("--at", type=_float_list, help="comma-separated query parameters")
    p.add_argument("--queries-file", help="text file with one query parameter per line")
    p.add_argument("--field-variance", action="store_true",
                   help="include the per-entry field variance columns (CSV: appended)")
    p.add_argument("--output", help="output file (.csv or .json); default: stdout CSV")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("bench", help="compare adaptive sampling against the uniform baseline")
    p.add_argument("--problem", required=True, choices=sorted(PROBLEMS))
    p.add_argument("--sizes", type=_int_list, required=True,
                   help="target training sample counts, e.g. 16,63")
    p.add_argument("--seeds", type=_int_list, default=[0], help="seeds, e.g. 0,1,2,3,4")
    p.add_argument("--m-star", type=int, default=None, help="test grid size")
    p.add_argument("--r", type=int, default=None, help="reduction order override")
    p.add_argument("--restarts", type=int, default=8, help="hyperparameter fit restarts")
    p.add_argument("--out-dir", default=".", help="directory for reports and figures")
    p.add_argument("--stem", default=None, help="report file stem (default: bench_<problem>)")
    p.add_argument("--no-figures", action="store_true", help="skip PNG rendering")
    p.add_argument("--reproducible", action="store_true",
                   help="omit timestamp and timings so equal seeds give identical bytes")
    p.set_defaults(func=cmd_bench)
    return parser


def cmd_generate(args) -> int:
    seed = _seed_of(args)
    solver = get_solver(args.solver)
    config = _sampling_config(args, seed)
    cds = adaptive_generate(solver, config)
    save_dataset(cds, args.output)
    log.info(
        "generated %d samples in %d cluster(s): sizes=%s -> %s",
        cds.m, cds.k, [int(s) for s in cds.cluster_sizes()], args.output,
    )
    if args.report:
        doc = {
            "solver": solver.name,
            "seed": seed,
            "m": cds.m,
            "k": cds.k,
            "cluster_sizes": [int(s) for s in cds.cluster_sizes()],
            "cluster_ranges": {str(c): r for c, r in cds.cluster_ranges().items()},
            "labels": [int(v) for v in cds.labels],
            "rounds": list(cds.history or ()),
        }
        Path(args.report).write_text(json.dumps(doc, indent=1) + "\n")
        log.info("generation report -> %s", args.report)
    return 0


def cmd_train(args) -> int:
    seed = _seed_of(args)
    if (args.dataset is None) == (args.solver is None):
        raise InvalidParameter("provide exactly one of --solver or --dataset")
    optimizer = OptimizerConfig(restarts=args.restarts, seed=seed)
    if args.dataset is not None:
        ds = load_dataset(args.dataset)
        sampling = SamplingConfig(
            float(ds.inputs.min()), float(ds.inputs.max()),
            m0=max(2, args.k), k=args.k, q_min=args.q_min, seed=seed,
        )
        config = TrainConfig(sampling, r=args.r, n_neighbors=args.n_neighbors,
                             optimizer=optimizer)
        model = offline_train(config, dataset=ds)
    else:
        config = TrainConfig(_sampling_config(args, seed), r=args.r,
                             n_neighbors=args.n_neighbors, optimizer=optimizer)
        model = offline_train(config, solver=get_solver(args.solver))
    save_model(model, args.output)
    log.info(
        "trained %d-cluster model on %d samples -> %s",
        model.k, model.classifier.x.size, args.output,
    )
    return 0


def _read_queries(args) -> np.ndarray:
    if (args.at is None) == (args.queries_file is None):
        raise InvalidParameter("provide exactly one of --at or --queries-file")
    if args.at is not None:
        return np.asarray(args.at, dtype=float)
    values = []
    try:
        text = Path(args.queries_file).read_text()
    except OSError as exc:
        raise InvalidParameter(f"cannot read {args.queries_file}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        for token in line.replace(",", " ").split():
            try:
                values.append(float(token))
            except ValueError:
                raise InvalidParameter(
                    f"{args.queries_file}:{lineno}: not a number: {token!r}"
                ) from None
    if not values:
        raise InvalidParameter(f"no query values found in {args.queries_file}")
    return np.asarray(values, dtype=float)


def cmd_predict(args) -> int:
    model = load_model(args.model)
    queries = _read_queries(args)
    prediction = online_predict(model, queries, field_variance=args.field_variance)
    fmt = "json" if (args.output or "").endswith(".json") else "csv"
    if fmt == "json":
        records = []
        for i, chi in enumerate(prediction.inputs):
            rec = {
                "chi": float(chi),
                "cluster": int(prediction.clusters[i]),
                "latent_variance": float(prediction.latent_variance[i]),
                "field": [float(v) for v in prediction.fields[:, i]],
            }
            if prediction.field_variance is not None:
                rec["field_variance"] = [float(v) for v in prediction.field_variance[:, i]]
            records.append(rec)
        Path(args.output).write_text(json.dumps(records, indent=1) + "\n")
    else:
        out = open(args.output, "w", newline="") if args.output else sys.stdout
        try:
            writer = csv.writer(out)
            header = ["chi", "cluster", "latent_variance"]
            header += [f"f{i}" for i in range(model.field_length)]
            if prediction.field_variance is not None:
                header += [f"var_f{i}" for i in range(model.field_length)]
            writer.writerow(header)
            for i, chi in enumerate(prediction.inputs):
                row = [repr(float(chi)), int(prediction.clusters[i]),
                       repr(float(prediction.latent_variance[i]))]
                row += [repr(float(v)) for v in prediction.fields[:, i]]
                if prediction.field_variance is not None:
                    row += [repr(float(v)) for v in prediction.field_variance[:, i]]
                writer.writerow(row)
        finally:
            if args.output:
                out.close()
    if args.output:
        log.info("%d prediction(s) -> %s", queries.size, args.output)
    return 0


def cmd_bench(args) -> int:
    seed0 = _env_seed()
    timestamp = None if args.reproducible else datetime.now(timezone.utc).isoformat()
    report = run_comparison(
        args.problem, args.sizes, args.seeds,
        m_star=args.m_star, r=args.r,
        optimizer=OptimizerConfig(restarts=args.restarts, seed=seed0),
        collect_curves=not args.no_figures,
        timestamp=timestamp,
    )
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = args.stem or f"bench_{args.problem}"
    write_report(
        report, out_dir / f"{stem}.json", out_dir / f"{stem}.csv",
        include_volatile=not args.reproducible,
    )
    log.info("report -> %s{.json,.csv}", out_dir / stem)
    if not args.no_figures:
        from .figures import render_report_figures

        render_report_figures(report, out_dir, stem)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        print(f"run `{parser.prog} --help` for usage", file=sys.stderr)
        return 1
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except (ConvergenceFailure, NumericalFailure) as exc:
        log.error("%s", exc)
        return 2
    except CagError as exc:
        log.error("%s", exc)
        return 1


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
