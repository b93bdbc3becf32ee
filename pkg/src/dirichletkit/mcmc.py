"""Random-walk Metropolis-Hastings for the Dirichlet posteriors."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .estimation import FitSettings, objective_function, posterior_mode
from .exceptions import AcceptanceRateWarning, CalibrationError, DomainError, EstimationError
from .params import DirichletParams, as_params
from .special import as_stream

ACCEPTANCE_BAND = (0.15, 0.6)
_PRIORS = {"mdi": "mdi-mode", "mdi-mode": "mdi-mode", "jeffreys": "jeffreys-mode", "jeffreys-mode": "jeffreys-mode"}


@dataclass(frozen=True)
class ProposalScales:
    sd: np.ndarray

    def __post_init__(self):
        sd = np.array(self.sd, dtype=float)
        if sd.ndim != 1 or not np.all(np.isfinite(sd)) or np.any(sd <= 0):
            raise DomainError("proposal scales must be positive and finite")
        sd.setflags(write=False)
        object.__setattr__(self, "sd", sd)


@dataclass(frozen=True)
class PosteriorDraws:
    """Retained (post burn-in) draws of k, one row per draw."""

    draws: np.ndarray
    n_accepted: int
    n_steps: int
    burn_in: int
    objective: str = ""

    @property
    def acceptance_rate(self):
        return self.n_accepted / self.n_steps if self.n_steps else 0.0

    @property
    def T(self):
        return self.draws.shape[0]

    def split_half_shift(self):
        """Difference of the two half-chain means in units of the draw standard deviation."""
        half = self.T // 2
        if half < 2:
            return np.zeros(self.draws.shape[1])
        a, b = self.draws[:half], self.draws[half:]
        sd = self.draws.std(axis=0, ddof=1)
        return (b.mean(axis=0) - a.mean(axis=0)) / np.where(sd > 0, sd, 1.0)


def log_posterior(stats, prior="mdi"):
    """Log posterior evaluator on raw arrays; ``-inf`` outside the support."""
    objective = _PRIORS.get(prior)
    if objective is None:
        raise ValueError(f"unknown prior {prior!r}; expected 'mdi' or 'jeffreys'")
    return objective_function(objective, stats)[0]


def _crossing(log_post, mode, peak, j, direction, drop, start, factor, limit):
    base = mode[j]
    prev_off, prev_drop = 0.0, 0.0
    off = start * base
    point = mode.copy()
    while off <= limit * base:
        point[j] = base + direction * off
        d = peak - log_post(point) if point[j] > 0 else np.inf
        if d >= drop:
            if not np.isfinite(d):
                return prev_off
            # linear interpolation of the drop between consecutive scan points
            return prev_off + (off - prev_off) * (drop - prev_drop) / (d - prev_drop)
        prev_off, prev_drop = off, d
        off *= factor
    raise CalibrationError(f"no {drop}-unit drop found along component {j} within {limit:g} x k_j")


def calibrate_proposal(log_post, mode, drop=0.5, start=1e-3, factor=1.2, limit=1e6):
    """Per-component jump sizes matched to the curvature at the mode.

    Along each coordinate the log posterior is scanned outward from the mode on
    a geometric grid (``start * k_j * factor**m``). The points where it falls
    ``drop`` below the peak are located by linear interpolation between scan
    points; ``drop=0.5`` is the one-standard-deviation point of a normal. The
    scale is half the distance between the two crossings.

    Parameters
    ----------
    log_post : callable
        Maps a parameter array to its log posterior.
    mode : DirichletParams or array_like
        A local maximum of ``log_post``.

    Returns
    -------
    ProposalScales
    """
    mode = np.array(as_params(mode).k, dtype=float)
    peak = log_post(mode)
    if not np.isfinite(peak):
        raise CalibrationError("log posterior is not finite at the mode")
    sd = np.empty(mode.size)
    for j in range(mode.size):
        up = _crossing(log_post, mode, peak, j, +1.0, drop, start, factor, limit)
        down = _crossing(log_post, mode, peak, j, -1.0, drop, start, factor, limit)
        sd[j] = 0.5 * (up + down)
    return ProposalScales(sd)


def mh_sample(log_post, init, scales, T, burn_in=None, rng=None, objective="", warn=True):
    """Random-walk Metropolis-Hastings with independent normal jumps.

    A candidate ``k + sd * z`` is accepted when
    ``log_post(candidate) - log_post(current) > log(u)``, ``u ~ U(0, 1)``.
    Candidates with a non-positive component are rejected without evaluating
    ``log_post``; a ``-inf`` log posterior rejects as well. ``burn_in`` steps
    (default ``T // 10``) are run first and discarded, then ``T`` draws kept.
    """
    if T < 1:
        raise DomainError("T must be at least 1")
    burn_in = T // 10 if burn_in is None else int(burn_in)
    if burn_in < 0:
        raise DomainError("burn_in must be non-negative")
    k = np.array(as_params(init).k, dtype=float)
    sd = scales.sd if isinstance(scales, ProposalScales) else ProposalScales(scales).sd
    if sd.size != k.size:
        raise DomainError("scales and init have different dimensions")
    stream = as_stream(rng)
    steps = burn_in + int(T)
    jumps = stream.normal((steps, k.size)) * sd
    log_u = np.log(stream.uniform(steps))

    current = log_post(k)
    if not np.isfinite(current):
        raise DomainError("log posterior is not finite at the initial point")
    out = np.empty((int(T), k.size))
    accepted = 0
    for i in range(steps):
        cand = k + jumps[i]
        if np.all(cand > 0):
            lp = log_post(cand)
            if lp - current > log_u[i]:
                k, current = cand, lp
                accepted += 1
        if i >= burn_in:
            out[i - burn_in] = k
    draws = PosteriorDraws(out, accepted, steps, burn_in, objective)
    lo, hi = ACCEPTANCE_BAND
    if warn and not lo <= draws.acceptance_rate <= hi:
        warnings.warn(
            f"Metropolis-Hastings acceptance rate {draws.acceptance_rate:.3f} outside [{lo}, {hi}]",
            AcceptanceRateWarning,
            stacklevel=2,
        )
    return draws


def posterior_mean(draws):
    """Componentwise mean of the retained draws."""
    arr = draws.draws if isinstance(draws, PosteriorDraws) else np.asarray(draws, dtype=float)
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise EstimationError("no retained draws")
    return DirichletParams(arr.mean(axis=0))


def sample_posterior(stats, prior="mdi", T=20_000, burn_in=None, rng=None, init=None, settings=None, warn=True):
    """Locate the posterior mode, calibrate the jumps there and run a chain from it.

    Returns
    -------
    draws : PosteriorDraws
    mode : FitReport
    """
    objective = _PRIORS.get(prior)
    if objective is None:
        raise ValueError(f"unknown prior {prior!r}; expected 'mdi' or 'jeffreys'")
    settings = settings or FitSettings()
    if settings.objective != objective:
        settings = FitSettings(
            max_iterations=settings.max_iterations,
            tolerance=settings.tolerance,
            step_size=settings.step_size,
            objective=objective,
            preconditioned=settings.preconditioned,
            lower_bound=settings.lower_bound,
        )
    mode = posterior_mode(stats, settings, init)
    lp = log_posterior(stats, prior)
    scales = calibrate_proposal(lp, mode.estimate)
    draws = mh_sample(lp, mode.estimate, scales, T, burn_in, rng, objective, warn=warn)
    return draws, mode
