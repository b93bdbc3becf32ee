"""Monte Carlo comparison of the estimators by root mean square percentage error."""

from __future__ import annotations

import csv
import io
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .estimation import FitSettings, method_of_moments, mle_fixed_point, posterior_mode
from .exceptions import DomainError, EstimationError
from .io import atomic_write_text
from .mcmc import calibrate_proposal, log_posterior, mh_sample, posterior_mean
from .model import sample_dirichlet
from .params import DirichletParams, as_params, sufficient_stats
from .special import RngStream

METHODS = ("jeffreys-mode", "ml", "jeffreys-mean", "mdi-mode", "mdi-mean", "mom")
DEFAULT_METHODS = ("jeffreys-mode", "ml", "mdi-mode", "mom")
CSV_FIELDS = ("n", "k_true", "method", "replications", "rmspe_percent", "failures")


@dataclass(frozen=True)
class StudyCell:
    n: int
    k_true: DirichletParams
    replications: int = 5000
    methods: tuple = DEFAULT_METHODS
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "k_true", as_params(self.k_true))
        object.__setattr__(self, "methods", tuple(self.methods))
        if self.replications < 1:
            raise DomainError("replications must be at least 1")
        if self.n < 2:
            raise DomainError("n must be at least 2")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise DomainError(f"unknown methods {sorted(unknown)}; choose from {METHODS}")


@dataclass(frozen=True)
class CellResult:
    cell: StudyCell
    rmspe: dict
    failures: dict
    # per replication relative errors (R x P), NaN rows for failures
    errors: dict = field(repr=False, default_factory=dict)

    def rows(self):
        k = ";".join(f"{v:g}" for v in self.cell.k_true.k)
        for m in self.cell.methods:
            yield {
                "n": self.cell.n,
                "k_true": k,
                "method": m,
                "replications": self.cell.replications,
                "rmspe_percent": self.rmspe[m],
                "failures": self.failures[m],
            }


def rmspe(estimates, truth):
    """100 * sqrt(mean of squared relative errors over replications and components).

    ``None`` entries mark failed replications and are skipped.
    """
    truth = as_params(truth).k
    kept = [np.asarray(e.k if isinstance(e, DirichletParams) else e, dtype=float) for e in estimates if e is not None]
    if not kept:
        raise DomainError("no estimates to score")
    E = np.array(kept)
    if E.ndim != 2 or E.shape[1] != truth.size:
        raise DomainError("estimates and truth have different dimensions")
    return float(100.0 * np.sqrt(np.mean(((E - truth) / truth) ** 2)))


def parse_cell(text, replications=1000, methods=DEFAULT_METHODS, seed=0):
    """Parse ``"n=25,k=3;3;3"`` into a :class:`StudyCell`."""
    parts = dict(p.split("=", 1) for p in text.replace(" ", "").split(",") if p)
    try:
        n = int(parts["n"])
        k = [float(v) for v in parts["k"].split(";")]
    except (KeyError, ValueError) as exc:
        raise DomainError(f"cannot parse cell {text!r}; expected 'n=25,k=3;3;3'") from exc
    return StudyCell(n, DirichletParams(np.array(k)), replications, tuple(methods), seed)


def _mean_estimate(stats, prior, mode, T, burn_in, stream):
    lp = log_posterior(stats, prior)
    scales = calibrate_proposal(lp, mode)
    draws = mh_sample(lp, mode, scales, T, burn_in, stream, warn=False)
    return posterior_mean(draws)


def _one_replication(cell, rep, settings, T, burn_in):
    stream = RngStream(cell.seed).substream(rep)
    X = sample_dirichlet(cell.k_true, cell.n, stream)
    stats = sufficient_stats(X)
    out = {}
    try:
        mom = method_of_moments(X)
    except EstimationError:
        return {m: None for m in cell.methods}
    if "mom" in cell.methods:
        out["mom"] = mom.k
    if "ml" in cell.methods:
        try:
            r = mle_fixed_point(stats, mom, settings)
            out["ml"] = r.estimate.k if r.converged else None
        except EstimationError:
            out["ml"] = None
    for prior in ("mdi", "jeffreys"):
        wanted = [m for m in (f"{prior}-mode", f"{prior}-mean") if m in cell.methods]
        if not wanted:
            continue
        s = FitSettings(settings.max_iterations, settings.tolerance, settings.step_size, f"{prior}-mode",
                        settings.preconditioned, settings.lower_bound)
        try:
            mode = posterior_mode(stats, s, mom)
        except (EstimationError, DomainError):
            mode = None
        ok = mode is not None and mode.converged
        if f"{prior}-mode" in cell.methods:
            out[f"{prior}-mode"] = mode.estimate.k if ok else None
        if f"{prior}-mean" in cell.methods:
            try:
                out[f"{prior}-mean"] = _mean_estimate(stats, prior, mode.estimate, T, burn_in, stream).k if ok else None
            except (EstimationError, DomainError):
                out[f"{prior}-mean"] = None
    return out


def _run_chunk(args):
    cell, reps, settings, T, burn_in = args
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return [(r, _one_replication(cell, r, settings, T, burn_in)) for r in reps]


def run_cell(cell, n_jobs=1, settings=None, T=20_000, burn_in=2_000):
    """Simulate ``cell.replications`` samples and score every requested method.

    Replication ``r`` draws from substream ``r`` of ``cell.seed``, so results do
    not depend on ``n_jobs``. Failed fits (non-convergence, degenerate moments)
    are counted and left out of the RMSPE.
    """
    settings = settings or FitSettings()
    reps = list(range(cell.replications))
    if n_jobs == 1:
        results = _run_chunk((cell, reps, settings, T, burn_in))
    else:
        chunks = [reps[i::n_jobs] for i in range(n_jobs)]
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            parts = pool.map(_run_chunk, [(cell, c, settings, T, burn_in) for c in chunks])
            results = [item for part in parts for item in part]
    results.sort(key=lambda item: item[0])

    truth = cell.k_true.k
    scores, failures, errors = {}, {}, {}
    for m in cell.methods:
        ests = [res.get(m) for _, res in results]
        failures[m] = sum(e is None for e in ests)
        kept = [e for e in ests if e is not None]
        errors[m] = np.array([np.full(truth.size, np.nan) if e is None else (e - truth) / truth for e in ests])
        scores[m] = rmspe(kept, cell.k_true) if kept else float("nan")
    return CellResult(cell, scores, failures, errors)


def paired_difference(result, first, second):
    """Mean squared percentage error of ``first`` minus ``second`` and its Monte Carlo standard error.

    Uses the replications where both methods succeeded; units are squared percent.
    """
    a = np.mean(result.errors[first] ** 2, axis=1)
    b = np.mean(result.errors[second] ** 2, axis=1)
    ok = np.isfinite(a) & np.isfinite(b)
    d = 1e4 * (a[ok] - b[ok])
    if d.size < 2:
        raise DomainError("need at least two common replications")
    return float(d.mean()), float(d.std(ddof=1) / np.sqrt(d.size))


def results_to_csv(results, path=None):
    """Write one row per (cell, method); returns the CSV text when ``path`` is None."""
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for res in results:
        for row in res.rows():
            writer.writerow({**row, "rmspe_percent": f"{row['rmspe_percent']:.4f}"})
    text = buf.getvalue()
    if path is not None:
        atomic_write_text(path, text)
    return text
