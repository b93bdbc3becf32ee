"""Command-line interface.

Exit codes: 0 success, 2 input could not be read, 3 an estimator did not
converge, 4 invalid arguments or values outside a model's domain.
Component indices on the command line are 1-based.
"""

from __future__ import annotations

import argparse
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .conditional import TYPE1, TYPE2, PredictionRequest, _scale_type, predictive_conditional, summarize_prediction
from .estimation import FitSettings
from .estimators import METHODS, estimate
from .exceptions import DomainError, EstimationError, IngestError
from .imputation import IncompleteMatrix, multiple_impute, pool_estimates
from .io import atomic_write_text, csv_text, read_csv, to_json, write_csv, write_json
from .mcmc import sample_posterior
from .model import replicate_check, sample_dirichlet, to_type1, to_type2
from .params import ROW_SUM_TOL, DirichletParams, sufficient_stats
from .simstudy import DEFAULT_METHODS, parse_cell, results_to_csv, run_cell
from .special import RngStream

EXIT_OK, EXIT_INGEST, EXIT_CONVERGENCE, EXIT_DOMAIN = 0, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_DOMAIN, f"{self.prog}: error: {message}\n")


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _known(text):
    out = {}
    for part in text.split(","):
        idx, sep, val = part.partition("=")
        try:
            if not sep:
                raise ValueError
            out[int(idx) - 1] = float(val)
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected INDEX=VALUE pairs like 1=6,2=3, got {text!r}") from None
    if any(i < 0 for i in out):
        raise argparse.ArgumentTypeError("component indices start at 1")
    return out


def _emit(text, path):
    if path is None:
        sys.stdout.write(text)
    else:
        atomic_write_text(path, text)


def _ref_index(args, P):
    """1-based ``--ref-component`` (default P) to a 0-based index."""
    ref = P if args.ref_component is None else args.ref_component
    if not 1 <= ref <= P:
        raise DomainError(f"--ref-component must lie in 1..{P}")
    return ref - 1


def _load(args, allow_missing=False):
    """Read ``--input`` and return (table, composition or None)."""
    table = read_csv(args.input, args.missing_token, args.zeros_as_missing)
    vals = table.values
    if not allow_missing and np.isnan(vals).any():
        r, c = np.argwhere(np.isnan(vals))[0]
        raise IngestError("missing value; run 'impute' first", row=table.lines[r], column=int(c) + 1)
    scale = _scale_type(args.scale)
    if scale == TYPE1:
        if vals.shape[1] < 2:
            raise IngestError("Type I data need at least 2 columns")
        if not allow_missing:
            sums = vals.sum(axis=1)
            bad = np.flatnonzero(np.abs(sums - 1.0) > ROW_SUM_TOL)
            if bad.size:
                raise IngestError(f"components sum to {sums[bad[0]]:.9g}, not 1", row=table.lines[bad[0]])
            if np.any(vals >= 1):
                r, c = np.argwhere(vals >= 1)[0]
                raise IngestError("Type I entries must be below 1", row=table.lines[r], column=int(c) + 1)
            return table, vals / sums[:, None]
        return table, None
    if allow_missing:
        return table, None
    return table, to_type1(vals, _ref_index(args, vals.shape[1] + 1))


def _settings(args, objective="ml"):
    return FitSettings(max_iterations=args.max_iter, tolerance=args.tol, objective=objective)


def _input_summary(args, table):
    return {
        "path": str(args.input),
        "n": int(table.values.shape[0]),
        "columns": table.columns,
        "scale": _scale_type(args.scale),
    }


def cmd_fit(args):
    table, X = _load(args)
    res = estimate(X, args.method, _settings(args), args.T, args.burn_in, RngStream(args.seed))
    payload = {**res.to_dict(), "P": int(X.shape[1]), "input": _input_summary(args, table)}
    if _scale_type(args.scale) == TYPE2:
        payload["reference_component"] = _ref_index(args, X.shape[1]) + 1
    _emit(to_json(payload), args.output)
    if not res.converged:
        print(f"error: {args.method} did not converge (gradient norm {res.report.gradient_norm:.3g})", file=sys.stderr)
        return EXIT_CONVERGENCE
    return EXIT_OK


def cmd_sample(args):
    params = DirichletParams(np.array(args.k))
    X = sample_dirichlet(params, args.n, RngStream(args.seed))
    P = params.P
    if _scale_type(args.scale) == TYPE2:
        r = _ref_index(args, P)
        X = to_type2(X, r)
        cols = [f"y{j + 1}" for j in range(P) if j != r]
    else:
        cols = [f"x{j + 1}" for j in range(P)]
    _emit(csv_text(X, cols), args.output)
    return EXIT_OK


def cmd_predict(args):
    table, X = _load(args)
    scale = _scale_type(args.scale)
    if scale == TYPE2 and args.ref_component not in (None, X.shape[1]):
        raise DomainError("predict on Type II data needs the reference last")
    width = table.values.shape[1]
    request = PredictionRequest.from_known(width, args.known, scale)
    root = RngStream(args.seed)
    draws, mode = sample_posterior(
        sufficient_stats(X), args.prior, args.T, args.burn_in, root.substream(0),
        settings=_settings(args), warn=True,
    )
    if not mode.converged:
        raise EstimationError(f"posterior mode did not converge (gradient norm {mode.gradient_norm:.3g})")
    pred = predictive_conditional(draws, request, root.substream(1))
    summary = summarize_prediction(pred, args.levels)
    names = [table.columns[j] for j in request.missing]
    payload = {
        "prior": args.prior,
        "known": {table.columns[i]: v for i, v in request.known.items()},
        "posterior_mode": mode.estimate.tolist(),
        "mcmc": {"T": draws.T, "burn_in": draws.burn_in, "acceptance_rate": draws.acceptance_rate},
        **summary.to_dict(names),
        "input": _input_summary(args, table),
    }
    if args.draws_output is not None:
        write_csv(args.draws_output, pred, names)
    _emit(to_json(payload), args.output)
    return EXIT_OK


def cmd_impute(args):
    table, _ = _load(args, allow_missing=True)
    scale = _scale_type(args.scale)
    data = IncompleteMatrix(table.values, scale)
    settings = _settings(args, args.method)
    result = multiple_impute(data, args.M, args.inner_iters, settings, RngStream(args.seed), T=args.T, burn_in=args.burn_in)
    pooled, spread = pool_estimates(result)
    out = Path(args.output_dir)
    files = []
    for m, completed in enumerate(result.completed, start=1):
        path = out / f"completed_{m}.csv"
        write_csv(path, completed, table.columns)
        files.append(path.name)
    payload = {
        "method": settings.objective,
        "M": result.M,
        "inner_iters": args.inner_iters,
        "pooled_estimate": pooled.tolist(),
        "between_chain_sd": spread,
        "chain_estimates": [e.tolist() for e in result.estimates],
        "convergence_shift": result.convergence_shift,
        "missing_entries": int(data.mask.sum()),
        "completed_files": files,
        "input": _input_summary(args, table),
    }
    write_json(out / "pooled.json", payload)
    return EXIT_OK


def cmd_simstudy(args):
    methods = tuple(m.strip() for m in args.methods.split(",") if m.strip())
    results = []
    for i, text in enumerate(args.cell):
        cell = parse_cell(text, args.reps, methods, args.seed + i)
        results.append(run_cell(cell, args.jobs, _settings(args), args.T, args.burn_in))
    _emit(results_to_csv(results), args.output)
    return EXIT_OK


def _histograms(obs, rep, bins):
    edges = np.linspace(0.0, 1.0, bins + 1)
    return [
        {
            "edges": edges,
            "observed": np.histogram(obs[:, j], edges)[0],
            "replicate": np.histogram(rep[:, j], edges)[0],
        }
        for j in range(obs.shape[1])
    ]


def cmd_gof(args):
    table, X = _load(args)
    root = RngStream(args.seed)
    res = estimate(X, args.method, _settings(args), args.T, args.burn_in, root.substream(0))
    if not res.converged:
        raise EstimationError(f"{args.method} did not converge")
    report = replicate_check(res.estimate, X, root.substream(1))
    payload = {
        "method": args.method,
        "estimate": res.estimate.tolist(),
        **report.to_dict(),
        "histograms": _histograms(X, report.replicate, args.bins),
        "input": _input_summary(args, table),
    }
    _emit(to_json(payload), args.output)
    return EXIT_OK


def _common(p, data=True):
    p.add_argument("--seed", type=int, default=0, help="root random seed (default 0)")
    p.add_argument("--output", "-o", default=None, help="output file (default stdout)")
    p.add_argument("--tol", type=float, default=1e-8, help="gradient/step tolerance")
    p.add_argument("--max-iter", type=int, default=10_000)
    if data:
        p.add_argument("--input", "-i", required=True, help="CSV file, one observation per row")
        p.add_argument("--scale", default="type1", choices=("type1", "type2"),
                       help="type1: compositions summing to 1; type2: positive ratios to an implicit reference")
        p.add_argument("--missing-token", default="NA")
        p.add_argument("--zeros-as-missing", action="store_true", help="treat exact zeros as missing")
    p.add_argument("--ref-component", type=int, default=None,
                   help="1-based position of the Type II reference among the P components (default P); "
                        "a common choice is the component with the largest minimum")


def build_parser():
    parser = _Parser(prog="dirichletkit", description="Dirichlet Type I/II estimation, prediction and imputation.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fit", help="estimate the parameters")
    _common(p)
    p.add_argument("--method", default="mdi-mode", choices=METHODS)
    p.add_argument("--T", type=int, default=20_000, help="MCMC draws kept (mean methods)")
    p.add_argument("--burn-in", type=int, default=2_000)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("sample", help="simulate from given parameters")
    _common(p, data=False)
    p.add_argument("--k", type=_floats, required=True, help="parameters, e.g. 3,3,3")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--scale", default="type1", choices=("type1", "type2"))
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("predict", help="predictive distribution of missing components")
    _common(p)
    p.add_argument("--known", type=_known, required=True, help="observed components, e.g. 1=6,2=3")
    p.add_argument("--prior", default="mdi", choices=("mdi", "jeffreys"))
    p.add_argument("--T", type=int, default=9_999)
    p.add_argument("--burn-in", type=int, default=1_000)
    p.add_argument("--levels", type=_floats, default=[0.025, 0.5, 0.975])
    p.add_argument("--draws-output", default=None, help="CSV of predictive draws")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("impute", help="multiple imputation of missing entries")
    _common(p)
    p.add_argument("--output-dir", required=True)
    p.add_argument("--M", type=int, default=5, help="number of completed data sets")
    p.add_argument("--inner-iters", type=int, default=10)
    p.add_argument("--method", default="mdi-mode", choices=("mdi-mode", "jeffreys-mode"))
    p.add_argument("--T", type=int, default=2_000)
    p.add_argument("--burn-in", type=int, default=200)
    p.set_defaults(func=cmd_impute)

    p = sub.add_parser("simstudy", help="Monte Carlo RMSPE comparison")
    _common(p, data=False)
    p.add_argument("--cell", action="append", required=True, help="e.g. 'n=25,k=3;3;3'; repeatable")
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--methods", default=",".join(DEFAULT_METHODS))
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--T", type=int, default=20_000)
    p.add_argument("--burn-in", type=int, default=2_000)
    p.set_defaults(func=cmd_simstudy)

    p = sub.add_parser("gof", help="replicate-sample goodness-of-fit data")
    _common(p)
    p.add_argument("--method", default="mdi-mode", choices=METHODS)
    p.add_argument("--bins", type=int, default=10)
    p.add_argument("--T", type=int, default=20_000)
    p.add_argument("--burn-in", type=int, default=2_000)
    p.set_defaults(func=cmd_gof)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return args.func(args)
    except IngestError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INGEST
    except EstimationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (DomainError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
