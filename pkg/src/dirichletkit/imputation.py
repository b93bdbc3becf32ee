"""Multiple imputation of missing components by chained predictive draws."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .conditional import TYPE1, TYPE2, _scale_type, conditional
from .estimation import FitSettings, method_of_moments, posterior_mode
from .exceptions import ConvergenceWarning, DomainError, EstimationError
from .mcmc import calibrate_proposal, log_posterior, mh_sample
from .model import to_type1
from .params import DirichletParams, check_composition, check_type2, sufficient_stats
from .special import as_stream


@dataclass(frozen=True)
class IncompleteMatrix:
    """Data with missing entries marked ``NaN``; a row may be entirely missing.

    Type I rows have P columns, Type II rows P - 1 (the reference is implicit
    and last).
    """

    values: np.ndarray
    scale_type: str = TYPE2
    mask: np.ndarray = field(init=False)

    def __post_init__(self):
        vals = np.array(self.values, dtype=float, ndmin=2)
        st = _scale_type(self.scale_type)
        mask = np.isnan(vals)
        if vals.ndim != 2 or vals.shape[0] == 0:
            raise DomainError("data must be a non-empty 2-D array")
        obs = vals[~mask]
        if not np.all(np.isfinite(obs)) or np.any(obs <= 0):
            raise DomainError("observed entries must be positive and finite")
        if st == TYPE1:
            if np.any(obs >= 1):
                raise DomainError("observed Type I entries must lie in (0, 1)")
            partial = np.where(mask, 0.0, vals).sum(axis=1)
            bad = mask.any(axis=1) & (partial >= 1)
            if np.any(bad):
                raise DomainError(f"row {int(np.argmax(bad))}: observed components already sum to 1 or more")
        if not np.any(~mask.any(axis=1)):
            raise DomainError("need at least one fully observed row")
        vals.setflags(write=False)
        mask.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "scale_type", st)
        object.__setattr__(self, "mask", mask)

    @classmethod
    def from_array(cls, values, scale_type=TYPE2, zeros_as_missing=False):
        vals = np.array(values, dtype=float, ndmin=2)
        if zeros_as_missing:
            vals = np.where(vals == 0, np.nan, vals)
        return cls(vals, scale_type)

    @property
    def complete_rows(self):
        return ~self.mask.any(axis=1)

    @property
    def P(self):
        return self.values.shape[1] + (1 if self.scale_type == TYPE2 else 0)


@dataclass(frozen=True)
class ImputationResult:
    completed: list
    estimates: list
    trace: list
    convergence_shift: list

    @property
    def M(self):
        return len(self.estimates)


def _as_type1(values, scale_type):
    return check_composition(values) if scale_type == TYPE1 else to_type1(values)


def _fit(values, scale_type, settings, init):
    X = _as_type1(values, scale_type)
    stats = sufficient_stats(X)
    if init is None:
        init = method_of_moments(X)
    report = posterior_mode(stats, settings, init)
    if not report.converged:
        raise EstimationError(f"fit did not converge (gradient norm {report.gradient_norm:.3g})")
    return report.estimate, stats


def _draw_missing(data, current, K, stream):
    out = current.copy()
    rows = np.flatnonzero(data.mask.any(axis=1))
    picks = stream.integers(K.shape[0], size=rows.size)
    for row, t in zip(rows, picks):
        miss = data.mask[row]
        known = {int(j): data.values[row, j] for j in np.flatnonzero(~miss)}
        if not known:
            # nothing observed: draw from the unconditional law
            g = stream.gamma(K[t])
            out[row] = g / g.sum() if data.scale_type == TYPE1 else g[:-1] / g[-1]
            continue
        spec = conditional(K[t], known, data.scale_type)
        if spec.deterministic:
            draw = np.array([spec.scale])
        else:
            g = stream.gamma(spec.reduced_params.k)
            draw = spec.scale * (g / g.sum() if data.scale_type == TYPE1 else g[:-1] / g[-1])
        out[row, list(spec.unknown)] = draw
    return out


def _posterior_draws(estimate, stats, prior, T, burn_in, stream):
    lp = log_posterior(stats, prior)
    scales = calibrate_proposal(lp, estimate)
    return mh_sample(lp, estimate, scales, T, burn_in, stream, warn=False).draws


def _halves(trace):
    tail = np.asarray(trace)[len(trace) // 2 :]
    half = tail.shape[0] // 2
    return tail[:half], tail[half:], tail


def _trace_shift(trace):
    # mean shift between the two quarters of the trace's second half, in units of
    # the between-iteration standard deviation over that half
    early, late, tail = _halves(trace)
    if tail.shape[0] < 4:
        return 0.0
    sd = tail.std(axis=0, ddof=1)
    shift = np.abs(late.mean(axis=0) - early.mean(axis=0))
    return float(np.max(np.where(sd > 0, shift / np.where(sd > 0, sd, 1.0), 0.0)))


def pooled_trace_shift(traces):
    """Chain-averaged signed trace shift and the shift noise alone would produce.

    Genuine drift moves every chain the same way while noise cancels, so the
    signed late-minus-early shifts are averaged over chains before dividing by
    the pooled within-chain standard deviation.

    Returns
    -------
    shift : float
        Largest per-parameter shift, in standard deviations.
    noise : float
        Two standard errors of that shift for a stationary trace, same units.
    """
    diffs, variances = [], []
    early = late = None
    for trace in traces:
        early, late, tail = _halves(trace)
        if tail.shape[0] < 4:
            return 0.0, np.inf
        diffs.append(late.mean(axis=0) - early.mean(axis=0))
        variances.append(tail.var(axis=0, ddof=1))
    shift = np.abs(np.mean(diffs, axis=0))
    sd = np.sqrt(np.mean(variances, axis=0))
    ratio = np.where(sd > 0, shift / np.where(sd > 0, sd, 1.0), 0.0)
    noise = 2.0 * np.sqrt(1.0 / early.shape[0] + 1.0 / late.shape[0]) / np.sqrt(len(diffs))
    return float(np.max(ratio)), float(noise)


def multiple_impute(data, M=5, inner_iters=10, settings=None, rng=None, prior=None, T=2000, burn_in=200):
    """Create ``M`` completed data sets by chained predictive draws.

    Each chain fits on the complete rows, draws every missing value from its
    predictive posterior conditional (a short Metropolis-Hastings run supplies
    the parameter draws, one random draw per incomplete row), then alternates
    refitting on the completed matrix and redrawing ``inner_iters`` times. A
    row's missing entries are drawn jointly from their multivariate conditional.

    Parameters
    ----------
    data : IncompleteMatrix
    M : int
        Number of independent chains; chain ``m`` uses substream ``m`` of ``rng``.
    inner_iters : int
        Refit/redraw rounds after the initial draw.
    settings : FitSettings, optional
        Fit objective and controls; defaults to the MDI posterior mode.
    prior : {"mdi", "jeffreys"}, optional
        Posterior for the predictive draws; follows ``settings.objective``
        when omitted.
    T, burn_in : int
        Metropolis-Hastings chain length and burn-in per round.

    Returns
    -------
    ImputationResult

    Warns
    -----
    ConvergenceWarning
        When the chain-averaged shift within the second half of the traces
        reaches half a standard deviation and exceeds its noise level (see
        :func:`pooled_trace_shift`).
    """
    if not isinstance(data, IncompleteMatrix):
        data = IncompleteMatrix(data)
    if M < 1:
        raise DomainError("M must be at least 1")
    if inner_iters < 1:
        raise DomainError("inner_iters must be at least 1")
    settings = settings or FitSettings(objective="mdi-mode")
    if prior is None:
        prior = "jeffreys" if settings.objective == "jeffreys-mode" else "mdi"
    root = as_stream(rng)
    complete = data.values[data.complete_rows]
    any_missing = bool(data.mask.any())

    completed, estimates, traces, shifts = [], [], [], []
    for m in range(M):
        stream = root.substream(m)
        try:
            est, stats = _fit(complete, data.scale_type, settings, None)
            trace = [est.k.copy()]
            current = np.where(data.mask, np.nan, data.values)
            if any_missing:
                K = _posterior_draws(est, stats, prior, T, burn_in, stream)
                current = _draw_missing(data, current, K, stream)
                for _ in range(inner_iters):
                    est, stats = _fit(current, data.scale_type, settings, est)
                    trace.append(est.k.copy())
                    K = _posterior_draws(est, stats, prior, T, burn_in, stream)
                    current = _draw_missing(data, current, K, stream)
                est, _ = _fit(current, data.scale_type, settings, est)
                trace.append(est.k.copy())
        except (EstimationError, DomainError) as exc:
            raise EstimationError(f"imputation chain {m}: {exc}") from exc
        completed.append(current)
        estimates.append(est)
        traces.append(np.array(trace))
        shifts.append(_trace_shift(trace))

    drift, noise = pooled_trace_shift(traces)
    if any_missing and drift >= max(0.5, noise):
        warnings.warn(
            f"parameter traces still drifting (shift {drift:.2f} sd); consider more inner iterations",
            ConvergenceWarning,
            stacklevel=2,
        )
    return ImputationResult(completed, estimates, traces, shifts)


def pool_estimates(result):
    """Componentwise mean across chains and between-chain standard deviation."""
    K = np.array([e.k for e in result.estimates])
    if K.shape[0] == 0:
        raise DomainError("no estimates to pool")
    spread = K.std(axis=0, ddof=1) if K.shape[0] > 1 else np.zeros(K.shape[1])
    return DirichletParams(K.mean(axis=0)), spread


def check_completed(values, scale_type, tol=1e-9):
    """Raise :class:`DomainError` unless a completed matrix satisfies its scale constraints."""
    values = np.asarray(values, dtype=float)
    if np.any(np.isnan(values)):
        raise DomainError("completed matrix still has missing entries")
    if _scale_type(scale_type) == TYPE2:
        check_type2(values)
        return
    if np.any(values <= 0) or np.any(np.abs(values.sum(axis=1) - 1.0) > tol):
        raise DomainError("completed Type I rows must be positive and sum to 1")
