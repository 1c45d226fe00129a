"""``uncertts`` command line.

Exit codes: 0 success, 1 usage error, 2 data error.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace

import numpy as np

from ..core import KIND_CODE, ValidationError
from ..distances import dust_many
from ..evaluation import chi2_critical, chi_square_uniformity, parameter_sweep, run_experiment
from ..evaluation.experiment import (
    ErrorPoint,
    Prepared,
    build_tables,
    default_params,
    error_points,
    evaluate_query,
    pick_queries,
    prepare,
    preprocess,
    query_context,
    retrieved_at,
    score,
    ExperimentConfig,
)
from ..queries import Technique
from .config import load_config
from .io import DataError, load_dataset, write_report, report_rows, REPORT_HEADER, write_ucr_file

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _tau(text):
    v = float(text)
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError("tau must lie in (0, 1)")
    return v


def _sigma(text):
    v = float(text)
    if not v >= 0.0:
        raise argparse.ArgumentTypeError("sigma must be non-negative")
    return v


def _seed(text):
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _technique(text):
    try:
        return Technique.parse(text)
    except ValidationError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment config file (INI)")
    common.add_argument("--seed", type=_seed, help="master seed (overrides the config)")
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--technique", type=_technique, help="euclid, munich, proud, dust, uma or uema")
    common.add_argument("--sigma", type=_sigma, help="error standard deviation")
    common.add_argument("--tau", type=_tau, help="fixed probabilistic threshold (skips the tau sweep)")
    common.add_argument("--dataset", action="append", help="dataset name; repeatable")
    common.add_argument("--data-dir", help="directory holding UCR dataset files")

    parser = _Parser(prog="uncertts", description="Similarity search over uncertain time series.")
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    sub.required = True
    sub.add_parser("bench", parents=[common], help="run a configured experiment and write the CSV report")
    q = sub.add_parser("query", parents=[common], help="answer one query and print the matches")
    q.add_argument("--query-index", type=int, default=0, help="index of the query series")
    c = sub.add_parser("calibrate", parents=[common], help="print the Euclidean and DUST thresholds per query")
    c.add_argument("--query-index", type=int, help="only this query (default: all selected queries)")
    s = sub.add_parser("sweep", parents=[common], help="sweep w, lambda, length or tau")
    s.add_argument("--param", required=True, choices=("w", "lambda", "length", "tau"))
    s.add_argument("--values", help="comma-separated values (default: the standard range)")
    x = sub.add_parser("chisq", parents=[common], help="chi-square uniformity test per dataset")
    x.add_argument("--alpha", type=float, default=0.01)
    p = sub.add_parser("perturb", parents=[common], help="write a perturbed copy of a dataset")
    p.add_argument("--error-kind", default=None, help="uniform, normal or exponential")
    return parser


def _config(args) -> ExperimentConfig:
    if args.config:
        cfg = load_config(args.config)
    else:
        if not args.dataset:
            raise UsageError("give --config or --dataset")
        cfg = ExperimentConfig(datasets=tuple(args.dataset))
    kw = {}
    if args.dataset and args.config:
        kw["datasets"] = tuple(args.dataset)
    if args.data_dir:
        kw["data_dir"] = args.data_dir
    if args.seed is not None:
        kw["seed"] = args.seed
    if args.technique is not None:
        kw["techniques"] = (args.technique,)
    if args.sigma is not None and args.command not in ("query", "perturb", "calibrate"):
        if args.sigma <= 0:
            raise UsageError("sigma must be positive here")
        kw["sigmas"] = (args.sigma,)
        kw["mixed"] = None
    if args.tau is not None:
        params = dict(cfg.params)
        for t in kw.get("techniques", cfg.techniques):
            if t.probabilistic:
                params[t] = replace(cfg.technique_params(t), tau_grid=(args.tau,))
        kw["params"] = params
    return replace(cfg, **kw) if kw else cfg


def _emit_report(report, args, cfg):
    path = args.out or cfg.output
    if path:
        write_report(report, path)
        return
    out = sys.stdout
    out.write(",".join(REPORT_HEADER) + "\n")
    for row in report_rows(report):
        out.write(",".join(row) + "\n")


def _single_prepared(cfg, name, sigma, need_multi):
    """A prepared collection at one sigma; sigma 0 means no perturbation."""
    exact = preprocess(load_dataset(cfg.data_dir, name), cfg)
    if sigma is None:
        return prepare(name, exact, error_points(cfg)[0], cfg, need_multi)
    if sigma == 0:
        point = ErrorPoint(cfg.error_kind.value, 0.0, {})
        multi = np.repeat(exact[:, None, :], cfg.samples, axis=1) if need_multi else None
        return Prepared(name, exact, exact.copy(), np.zeros_like(exact),
                        np.full(exact.shape, KIND_CODE[cfg.error_kind], dtype=np.int8), multi,
                        pick_queries(exact.shape[0], name, cfg), point)
    point = ErrorPoint(cfg.error_kind.value, sigma, {"std": sigma})
    return prepare(name, exact, point, cfg, need_multi)


def cmd_bench(args):
    cfg = _config(args)
    _emit_report(run_experiment(cfg), args, cfg)


def cmd_sweep(args):
    cfg = _config(args)
    values = None
    if args.values:
        try:
            values = [float(v) for v in args.values.split(",") if v.strip()]
        except ValueError:
            raise UsageError(f"bad --values {args.values!r}") from None
    _emit_report(parameter_sweep(cfg, args.param, values), args, cfg)


def cmd_query(args):
    cfg = _config(args)
    tech = args.technique or cfg.techniques[0]
    if args.sigma == 0 and tech in (Technique.DUST, Technique.UMA, Technique.UEMA):
        raise UsageError(f"{tech.value} needs a positive sigma")
    if tech.probabilistic and args.tau is None:
        raise UsageError(f"{tech.value} needs --tau")
    name = cfg.datasets[0]
    prep = _single_prepared(cfg, name, args.sigma, tech is Technique.MUNICH)
    qi = args.query_index
    if not 0 <= qi < prep.size:
        raise UsageError(f"--query-index must lie in [0, {prep.size})")
    ctx = query_context(prep, qi, cfg.neighbors)
    params = default_params(cfg, tech, prep.point)
    tables = build_tables(prep, params) if tech is Technique.DUST else None
    outcome = evaluate_query(prep, ctx, tech, params, tables)
    tau = args.tau if tech.probabilistic else None
    found = retrieved_at(ctx, outcome, tech, tau)
    p, r, f = score(ctx, found)
    lines = [
        f"dataset {name} query {qi} technique {tech.value}" + (f" tau {tau:g}" if tau is not None else ""),
        " ".join(["matches"] + [str(i) for i in sorted(found)]),
        " ".join(["truth"] + [str(i) for i in sorted(ctx.truth)]),
        f"precision {p:.6f} recall {r:.6f} f1 {f:.6f}",
    ]
    _write_lines(lines, args.out)


def cmd_calibrate(args):
    cfg = _config(args)
    if args.sigma == 0:
        raise UsageError("calibration needs a positive sigma for DUST")
    lines = ["dataset,query,neighbor,eps_eucl,eps_dust"]
    for name in cfg.datasets:
        prep = _single_prepared(cfg, name, args.sigma, False)
        params = default_params(cfg, Technique.DUST, prep.point)
        tables = build_tables(prep, params)
        queries = prep.queries if args.query_index is None else [args.query_index]
        for qi in queries:
            if not 0 <= qi < prep.size:
                raise UsageError(f"--query-index must lie in [0, {prep.size})")
            ctx = query_context(prep, qi, cfg.neighbors)
            c = ctx.neighbor
            eps_dust = float(dust_many(prep.obs[qi], prep.kinds[qi], prep.stds[qi], prep.obs[c:c + 1],
                                       prep.kinds[c:c + 1], prep.stds[c:c + 1], tables)[0])
            lines.append(f"{name},{qi},{c},{ctx.eps_eucl:.6f},{eps_dust:.6f}")
    _write_lines(lines, args.out)


def cmd_chisq(args):
    cfg = _config(args)
    lines = ["dataset,values,bins,statistic,critical,reject"]
    for name in cfg.datasets:
        ds = load_dataset(cfg.data_dir, name)
        stat, reject = chi_square_uniformity(ds, args.alpha)
        bins = int(np.ceil(np.sqrt(ds.values.size)))
        lines.append(f"{name},{ds.values.size},{bins},{stat:.6f},{chi2_critical(args.alpha, bins - 1):.6f},"
                     f"{'true' if reject else 'false'}")
    _write_lines(lines, args.out)


def cmd_perturb(args):
    cfg = _config(args)
    if args.error_kind:
        cfg = replace(cfg, error_kind=args.error_kind)
    if args.sigma is None:
        raise UsageError("perturb needs --sigma")
    if not args.out:
        raise UsageError("perturb needs --out")
    name = cfg.datasets[0]
    ds = load_dataset(cfg.data_dir, name)
    prep = _single_prepared(cfg, name, args.sigma, False)
    labels = ds.labels if cfg.max_series is None else None
    write_ucr_file(args.out, prep.obs, labels)


def _write_lines(lines, path):
    text = "\n".join(lines) + "\n"
    if path:
        try:
            with open(path, "w") as fh:
                fh.write(text)
        except OSError as exc:
            raise DataError(f"cannot write {path}: {exc.strerror or exc}") from None
    else:
        sys.stdout.write(text)


COMMANDS = {
    "bench": cmd_bench,
    "query": cmd_query,
    "calibrate": cmd_calibrate,
    "sweep": cmd_sweep,
    "chisq": cmd_chisq,
    "perturb": cmd_perturb,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"uncertts: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, ValidationError, KeyError) as exc:
        print(f"uncertts: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
