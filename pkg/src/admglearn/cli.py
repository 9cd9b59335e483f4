"""Command-line interface.

Subcommands: check, simulate, discover, score, evaluate, project, bench.
Exit codes: 0 success, 1 usage or input-format error, 2 numeric or
convergence failure. Errors go to stderr as one JSON object. All file
outputs are written atomically, and --seed pins every source of
randomness. Set ADMGLEARN_THREADS to parallelize bench runs (the
aggregation order is fixed, so results do not depend on scheduling).
"""

from __future__ import annotations

import argparse
import csv
import io as _io
import json
import math
import sys
from typing import Optional

import numpy as np

from . import io as gio
from .discovery import DiscoveryError, Hyperparams, discover
from .experiments import run_random_graph_experiment, run_verma_experiment
from .graphs import (
    GenerationError,
    GraphClass,
    GraphError,
    check_properties,
    mag_projection,
)
from .metrics import compare_graphs
from .penalties import (
    PenaltyConfig,
    PenaltyMode,
    ancestrality_penalty,
    arid_penalty,
    bow_penalty,
)
from .ricf import OptimizationError, regularized_ricf
from .scores import ScoreConfig, abic, bic, count_nonzero_params
from .sem import Dataset, gaussian_neg2_loglik, random_parameters, sample_data


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _round12(x):
    if x is None:
        return None
    if isinstance(x, float):
        if math.isnan(x):
            return None
        return float(f"{x:.12g}")
    return x


def _json_out(obj) -> None:
    print(json.dumps(obj, indent=2))


def _fmt_cell(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        if math.isnan(x):
            return ""
        return f"{x:.12g}"
    return str(x)


def _add_penalty_flags(parser) -> None:
    parser.add_argument(
        "--mode",
        choices=["power", "exp"],
        default="power",
        help="walk-count form: matrix power or truncated exponential",
    )
    parser.add_argument("--c-directed", type=float, default=1.0,
                        help="power-form constant for directed parts")
    parser.add_argument("--c-bidirected", type=float, default=2.0,
                        help="power-form constant for bidirected parts")
    parser.add_argument("--tanh-scale", type=float, default=math.log(5000.0),
                        help="sharpness of the soft primal-fixing mask")
    parser.add_argument("--exp-terms", type=int, default=20,
                        help="series terms for the exponential mode")


def _penalty_from_args(args) -> PenaltyConfig:
    return PenaltyConfig(
        mode=PenaltyMode.parse(args.mode),
        c_directed=args.c_directed,
        c_bidirected=args.c_bidirected,
        tanh_scale=args.tanh_scale,
        exp_series_terms=args.exp_terms,
    )


def _add_hyper_flags(parser) -> None:
    parser.add_argument("--lambda", dest="lam", type=float, default=0.05,
                        help="regularization strength")
    parser.add_argument("--omega", type=float, default=0.05,
                        help="edge threshold on fitted magnitudes")
    parser.add_argument("--h-tol", type=float, default=1e-8,
                        help="constraint tolerance for convergence")
    parser.add_argument("--ricf-tol", type=float, default=1e-4,
                        help="parameter-change tolerance of the fitter")
    parser.add_argument("--max-dual-iterations", type=int, default=100)
    parser.add_argument("--ricf-increment", type=int, default=1,
                        help="fitter iteration budget added per dual step")
    parser.add_argument("--progress-rate", type=float, default=0.25,
                        help="required shrink factor of the constraint value")
    parser.add_argument("--rho-init", type=float, default=1.0)
    parser.add_argument("--rho-factor", type=float, default=10.0)
    parser.add_argument("--rho-max", type=float, default=1e16)
    parser.add_argument("--restarts", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    _add_penalty_flags(parser)


def _hyper_from_args(args) -> Hyperparams:
    return Hyperparams(
        lam=args.lam,
        omega=args.omega,
        h_tol=args.h_tol,
        ricf_tol=args.ricf_tol,
        max_dual_iterations=args.max_dual_iterations,
        ricf_increment=args.ricf_increment,
        progress_rate=args.progress_rate,
        rho_init=args.rho_init,
        rho_factor=args.rho_factor,
        rho_max=args.rho_max,
        restarts=args.restarts,
        graph_class=GraphClass.parse(args.graph_class),
        penalty=_penalty_from_args(args),
        seed=args.seed,
    )


def _check_names_match(data: Dataset, names) -> None:
    if tuple(names) != data.names:
        raise _UsageError(
            f"graph vertices {list(names)} do not match data columns "
            f"{list(data.names)}"
        )


# -- subcommands --------------------------------------------------------------

def _cmd_check(args) -> int:
    g = gio.load_graph(args.graph)
    props = check_properties(g)
    cfg = _penalty_from_args(args)
    D = g.directed.astype(float)
    B = g.bidirected.astype(float)
    _json_out(
        {
            "acyclic": props.acyclic,
            "ancestral": props.ancestral,
            "arid": props.arid,
            "bow_free": props.bow_free,
            "penalties": {
                "ancestral": _round12(ancestrality_penalty(D, B, cfg)),
                "arid": _round12(arid_penalty(D, B, cfg)),
                "bowfree": _round12(bow_penalty(D, B, cfg)),
            },
        }
    )
    return 0


def _cmd_simulate(args) -> int:
    g = gio.load_graph(args.graph)
    rng = np.random.default_rng(args.seed)
    if args.params:
        params, names = gio.load_params_json(args.params)
        if tuple(names) != g.names:
            raise _UsageError(
                "field 'names' of --params does not match the graph vertices"
            )
    else:
        params = random_parameters(g, rng)
    data = sample_data(params, args.n, rng, names=g.names)
    gio.save_dataset_csv(data, args.out)
    if args.params_out:
        gio.save_params_json(params, args.params_out, names=g.names)
    return 0


def _cmd_discover(args) -> int:
    data = gio.load_dataset_csv(args.data)
    hp = _hyper_from_args(args)
    result = discover(data, hp)
    gio.save_graph_json(result.graph, args.out)
    if args.params_out:
        gio.save_params_json(result.params, args.params_out, names=data.names)
    if args.trace:
        buffer = _io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(
            ["iteration", "rho", "alpha", "h", "neg2loglik", "abic", "ricf_iters"]
        )
        for step in result.trace:
            writer.writerow(
                [
                    step.iteration,
                    _fmt_cell(step.rho),
                    _fmt_cell(step.alpha),
                    _fmt_cell(step.h),
                    _fmt_cell(step.neg2loglik),
                    _fmt_cell(step.abic),
                    step.ricf_iters,
                ]
            )
        gio.atomic_write_text(args.trace, buffer.getvalue())
    _json_out(
        {
            "converged": result.converged,
            "bic": _round12(result.score),
            "h": _round12(result.trace[-1].h if result.trace else 0.0),
            "directed_edges": len(result.graph.directed_edges()),
            "bidirected_edges": len(result.graph.bidirected_edges()),
            "out": args.out,
        }
    )
    return 0


def _cmd_score(args) -> int:
    data = gio.load_dataset_csv(args.data)
    if args.fit:
        if not args.graph:
            raise _UsageError("--fit requires --graph for the support")
        g = gio.load_graph(args.graph)
        _check_names_match(data, g.names)
        fit = regularized_ricf(
            data, support=g, tol=args.fit_tol, max_iterations=args.fit_iterations
        )
        params = fit.params
    elif args.params:
        params, names = gio.load_params_json(args.params)
        _check_names_match(data, names)
    else:
        raise _UsageError("score needs either --params or --graph with --fit")
    cfg = ScoreConfig(lam=args.lam, zero_tol=args.zero_tol)
    _json_out(
        {
            "neg2loglik": _round12(gaussian_neg2_loglik(data, params)),
            "bic": _round12(bic(data, params, cfg)),
            "abic": _round12(abic(data, params, cfg)),
            "nonzero_params": count_nonzero_params(params, cfg.zero_tol),
        }
    )
    return 0


def _cmd_evaluate(args) -> int:
    pred = gio.load_graph(args.pred)
    truth = gio.load_graph(getattr(args, "true"))
    report = compare_graphs(pred, truth)
    _json_out({k: _round12(v) for k, v in report.to_dict().items()})
    return 0


def _cmd_project(args) -> int:
    g = gio.load_graph(args.graph)
    gio.save_graph_json(mag_projection(g), args.out)
    return 0


def _cmd_bench_verma(args) -> int:
    hp = _hyper_from_args(args)
    n_values = [int(v) for v in args.n.split(",") if v.strip()]
    records, summaries = run_verma_experiment(
        n_values, args.seeds, hp, progress=not args.quiet
    )
    buffer = _io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(
        [
            "row_type", "n", "run", "target", "outcome", "converged", "h", "score",
            "true_rate", "super_rate", "wrong_rate", "failure_rate",
        ]
    )
    for r in records:
        writer.writerow(
            ["run", r.n, r.run, r.target, r.outcome, int(r.converged),
             _fmt_cell(r.h), _fmt_cell(r.score), "", "", "", ""]
        )
    for s in summaries:
        writer.writerow(
            ["aggregate", s.n, s.runs, "", "", "", "", "",
             _fmt_cell(s.true_rate), _fmt_cell(s.super_rate),
             _fmt_cell(s.wrong_rate), _fmt_cell(s.failure_rate)]
        )
    gio.atomic_write_text(args.out, buffer.getvalue())
    _json_out(
        [
            {
                "n": s.n,
                "runs": s.runs,
                "true_rate": _round12(s.true_rate),
                "super_rate": _round12(s.super_rate),
                "wrong_rate": _round12(s.wrong_rate),
                "failure_rate": _round12(s.failure_rate),
            }
            for s in summaries
        ]
    )
    return 0


def _cmd_bench_random(args) -> int:
    hp = _hyper_from_args(args)
    records, means = run_random_graph_experiment(
        args.d, args.graphs, args.n, hp,
        p_dir=args.p_dir, p_bi=args.p_bi, progress=not args.quiet,
    )
    keys = [
        "skeleton_tpr", "skeleton_fdr", "arrowhead_tpr",
        "arrowhead_fdr", "tail_tpr", "tail_fdr",
    ]
    buffer = _io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["row_type", "graph", "converged"] + keys)
    for r in records:
        cells = ["run", r.graph, int(r.converged)]
        if r.report is None:
            cells += [""] * len(keys)
        else:
            cells += [_fmt_cell(getattr(r.report, k)) for k in keys]
        writer.writerow(cells)
    writer.writerow(
        ["aggregate", len(records), _fmt_cell(means.get("converged_rate"))]
        + [_fmt_cell(means.get(k)) for k in keys]
    )
    gio.atomic_write_text(args.out, buffer.getvalue())
    _json_out({k: _round12(v) for k, v in means.items()})
    return 0


def build_parser() -> _Parser:
    parser = _Parser(
        prog="admglearn",
        description="Learn mixed graphs from linear Gaussian data.",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)
    fmt = argparse.ArgumentDefaultsHelpFormatter

    p = sub.add_parser("check", help="classify a graph and print its penalties",
                       formatter_class=fmt)
    p.add_argument("--graph", required=True, help="graph JSON or edge-list file")
    _add_penalty_flags(p)
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser("simulate", help="sample data from a graph",
                       formatter_class=fmt)
    p.add_argument("--graph", required=True)
    p.add_argument("--n", type=int, required=True, help="number of samples")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--params", default=None,
                   help="parameter JSON to use instead of random coefficients")
    p.add_argument("--params-out", default=None,
                   help="write the generating parameters here")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("discover", help="learn a graph from data",
                       formatter_class=fmt)
    p.add_argument("--data", required=True, help="input CSV")
    p.add_argument("--class", dest="graph_class", required=True,
                   choices=["ancestral", "arid", "bowfree"])
    p.add_argument("--out", required=True, help="output graph JSON")
    p.add_argument("--trace", default=None, help="per-iteration trace CSV")
    p.add_argument("--params-out", default=None, help="fitted parameter JSON")
    _add_hyper_flags(p)
    p.set_defaults(func=_cmd_discover)

    p = sub.add_parser("score", help="score parameters or a fitted support",
                       formatter_class=fmt)
    p.add_argument("--data", required=True)
    p.add_argument("--params", default=None, help="parameter JSON to score")
    p.add_argument("--graph", default=None, help="support graph for --fit")
    p.add_argument("--fit", action="store_true",
                   help="fit the support by maximum likelihood before scoring")
    p.add_argument("--fit-tol", type=float, default=1e-6)
    p.add_argument("--fit-iterations", type=int, default=200)
    p.add_argument("--lambda", dest="lam", type=float, default=0.05)
    p.add_argument("--zero-tol", type=float, default=0.05)
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("evaluate", help="compare a predicted graph to the truth",
                       formatter_class=fmt)
    p.add_argument("--pred", required=True)
    p.add_argument("--true", required=True)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("project", help="maximal ancestral projection",
                       formatter_class=fmt)
    p.add_argument("--graph", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_project)

    p = sub.add_parser("bench", help="benchmark drivers", formatter_class=fmt)
    bench_sub = p.add_subparsers(dest="bench_command", required=True)

    b = bench_sub.add_parser("verma", help="equivalence-class recovery rates",
                             formatter_class=fmt)
    b.add_argument("--class", dest="graph_class", default="bowfree",
                   choices=["ancestral", "arid", "bowfree"])
    b.add_argument("--n", default="500,1000,1500,2000",
                   help="comma-separated sample sizes")
    b.add_argument("--seeds", type=int, default=100, help="datasets per sample size")
    b.add_argument("--out", required=True, help="report CSV")
    b.add_argument("--quiet", action="store_true")
    _add_hyper_flags(b)
    b.set_defaults(func=_cmd_bench_verma)

    b = bench_sub.add_parser("random", help="random-graph recovery metrics",
                             formatter_class=fmt)
    b.add_argument("--class", dest="graph_class", default="bowfree",
                   choices=["ancestral", "arid", "bowfree"])
    b.add_argument("--d", type=int, default=10, help="number of vertices")
    b.add_argument("--graphs", type=int, default=100, help="number of targets")
    b.add_argument("--n", type=int, default=1000, help="samples per dataset")
    b.add_argument("--p-dir", type=float, default=0.4,
                   help="directed edge probability")
    b.add_argument("--p-bi", type=float, default=0.3,
                   help="bidirected edge probability")
    b.add_argument("--out", required=True, help="report CSV")
    b.add_argument("--quiet", action="store_true")
    _add_hyper_flags(b)
    b.set_defaults(func=_cmd_bench_random)

    return parser


def _emit_error(kind: str, message: str) -> None:
    print(json.dumps({"error": kind, "message": message}), file=sys.stderr)


def run(argv: Optional[list[str]] = None) -> int:
    """Dispatch a command line; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        _emit_error("usage", str(exc))
        return 1
    except (
        OptimizationError,
        DiscoveryError,
        GenerationError,
        np.linalg.LinAlgError,  # subclasses ValueError, so catch it first
    ) as exc:
        _emit_error("numeric", str(exc))
        return 2
    except (gio.FormatError, GraphError, ValueError, FileNotFoundError) as exc:
        _emit_error("input", str(exc))
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
