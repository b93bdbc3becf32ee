"""Point estimators: method of moments, maximum likelihood and posterior modes.

Posterior objectives take the additive constant of the log posterior as zero;
only differences are ever used.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy import special as sp

from .exceptions import DomainError, EstimationError
from .params import DirichletParams, SufficientStats, as_params, check_composition, sufficient_stats
from .special import _tetragamma, _trigamma, inv_digamma

__all__ = [
    "FitSettings",
    "FitReport",
    "OBJECTIVES",
    "sufficient_stats",
    "method_of_moments",
    "mle_fixed_point",
    "log_likelihood_gradient",
    "mdi_log_prior",
    "mdi_log_posterior",
    "mdi_gradient",
    "jeffreys_log_prior",
    "jeffreys_log_posterior",
    "jeffreys_gradient",
    "posterior_mode",
    "objective_function",
]

OBJECTIVES = ("ml", "mdi-mode", "jeffreys-mode")
K0_OVERFLOW = 1e12
_ALIASES = {"ml": "ml", "mdi": "mdi-mode", "mdi-mode": "mdi-mode", "jeffreys": "jeffreys-mode", "jeffreys-mode": "jeffreys-mode"}


@dataclass(frozen=True)
class FitSettings:
    """Iteration controls shared by the iterative estimators.

    ``step_size=None`` picks 1.0 for the preconditioned ascent and ``1e-3/n``
    for plain gradient ascent.
    """

    max_iterations: int = 10_000
    tolerance: float = 1e-8
    step_size: float | None = None
    objective: str = "ml"
    preconditioned: bool = True
    lower_bound: float = 1e-8

    def __post_init__(self):
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.step_size is not None and self.step_size <= 0:
            raise ValueError("step_size must be positive")
        obj = _ALIASES.get(str(self.objective).lower())
        if obj is None:
            raise ValueError(f"unknown objective {self.objective!r}; expected one of {OBJECTIVES}")
        object.__setattr__(self, "objective", obj)


@dataclass(frozen=True)
class FitReport:
    estimate: DirichletParams
    objective_value: float
    iterations: int
    converged: bool
    gradient_norm: float
    objective: str = "ml"

    def to_dict(self):
        return {
            "estimate": self.estimate.tolist(),
            "objective": self.objective,
            "objective_value": self.objective_value,
            "iterations": self.iterations,
            "converged": self.converged,
            "gradient_norm": self.gradient_norm,
        }


def method_of_moments(X):
    """Moment estimate using the first component's first two moments for k0.

    ``k0 = (m1 - q1) / (q1 - m1**2)`` where ``m1``/``q1`` are the sample mean
    and mean square of column 0; then ``k_j = m_j * k0``. The choice of column
    0 is deliberate and makes the estimator asymmetric in the components.
    """
    X = check_composition(X)
    if X.shape[0] < 2:
        raise EstimationError("method of moments needs at least 2 observations")
    m = X.mean(axis=0)
    q1 = np.mean(X[:, 0] ** 2)
    denom = q1 - m[0] ** 2
    if not denom > 0:
        raise EstimationError("first component has zero sample variance")
    k0 = (m[0] - q1) / denom
    k = m * k0
    if not np.all(np.isfinite(k)) or np.any(k <= 0):
        raise EstimationError(f"method of moments gave non-positive parameters {k.tolist()}")
    return DirichletParams(k)


# --- objectives on raw arrays ------------------------------------------------


def _loglik(k, stats):
    return stats.n * (sp.gammaln(k.sum()) - sp.gammaln(k).sum()) + stats.sum_log @ (k - 1.0)


def _loglik_grad(k, stats):
    return stats.n * (sp.digamma(k.sum()) - sp.digamma(k)) + stats.sum_log


def _mdi_prior(k):
    k0 = k.sum()
    return sp.gammaln(k0) - sp.gammaln(k).sum() + (k - 1.0) @ (sp.digamma(k) - sp.digamma(k0))


def _mdi_post(k, stats):
    k0 = k.sum()
    return (stats.n + 1) * (sp.gammaln(k0) - sp.gammaln(k).sum()) + (k - 1.0) @ (
        sp.digamma(k) - sp.digamma(k0) + stats.sum_log
    )


def _mdi_grad(k, stats):
    k0 = k.sum()
    return (
        stats.n * (sp.digamma(k0) - sp.digamma(k))
        + stats.sum_log
        + (k - 1.0) * _trigamma(k)
        - _trigamma(k0) * (k0 - k.size)
    )


def _jeffreys_bracket(k):
    return 1.0 - _trigamma(k.sum()) * np.sum(1.0 / _trigamma(k))


def _jeffreys_prior(k):
    br = _jeffreys_bracket(k)
    if not br > 0:
        return -np.inf
    return 0.5 * np.log(_trigamma(k)).sum() + 0.5 * np.log(br)


def _jeffreys_post(k, stats):
    prior = _jeffreys_prior(k)
    if prior == -np.inf:
        return -np.inf
    return prior + _loglik(k, stats)


def _jeffreys_grad(k, stats):
    k0 = k.sum()
    tri = _trigamma(k)
    tetra = _tetragamma(k)
    tri0 = _trigamma(k0)
    inv_sum = np.sum(1.0 / tri)
    br = 1.0 - tri0 * inv_sum
    if not br > 0:
        raise DomainError("Jeffreys bracket is not positive at these parameters")
    prior_grad = 0.5 * tetra / tri - 0.5 * (_tetragamma(k0) * inv_sum - tri0 * tetra / tri**2) / br
    return _loglik_grad(k, stats) + prior_grad


def _fns(objective):
    if objective == "ml":
        return _loglik, _loglik_grad
    if objective == "mdi-mode":
        return _mdi_post, _mdi_grad
    if objective == "jeffreys-mode":
        return _jeffreys_post, _jeffreys_grad
    raise ValueError(f"unknown objective {objective!r}")


def objective_function(objective, stats):
    """Return ``(value, gradient)`` callables on raw parameter arrays.

    ``value`` returns ``-inf`` outside the support (non-positive components, or
    a non-positive Jeffreys bracket) instead of raising.
    """
    objective = _ALIASES.get(objective, objective)
    value, grad = _fns(objective)

    def safe_value(k):
        if np.any(k <= 0) or not np.all(np.isfinite(k)):
            return -np.inf
        v = value(k, stats)
        return v if np.isfinite(v) else -np.inf

    return safe_value, lambda k: grad(k, stats)


# --- public objective API -------------------------------------------------------


def _check(params, stats):
    params = as_params(params)
    if stats.P != params.P:
        raise DomainError(f"statistics have {stats.P} components, parameters have {params.P}")
    return params.k


def log_likelihood_gradient(params, stats):
    return _loglik_grad(_check(params, stats), stats)


def mdi_log_prior(params):
    """Expected log density under the model (the MDI log prior)."""
    return float(_mdi_prior(as_params(params).k))


def mdi_log_posterior(params, stats):
    return float(_mdi_post(_check(params, stats), stats))


def mdi_gradient(params, stats):
    return _mdi_grad(_check(params, stats), stats)


def jeffreys_log_prior(params):
    """Half the log determinant of the Fisher information, in product form."""
    k = as_params(params).k
    v = _jeffreys_prior(k)
    if v == -np.inf:
        raise DomainError("Jeffreys bracket is not positive (outside the numerically positive-definite region)")
    return float(v)


def jeffreys_log_posterior(params, stats):
    k = _check(params, stats)
    return jeffreys_log_prior(params) + float(_loglik(k, stats))


def jeffreys_gradient(params, stats):
    return _jeffreys_grad(_check(params, stats), stats)


# --- iterative fits ------------------------------------------------------------


def _default_init(stats):
    # geometric means shrink towards zero for small k; this start is only a fallback
    # when no sample is available for method of moments
    return np.ones(stats.P) * 2.0


def mle_fixed_point(stats, init=None, settings=None):
    """Maximum likelihood by the fixed point ``psi(k_j) <- psi(k0) + mean_log_j``.

    All components update simultaneously. Converged when the sup-norm change
    drops to ``settings.tolerance``.

    Raises
    ------
    EstimationError
        If the concentration ``k0`` exceeds 1e12, a symptom of near-degenerate
        data (for instance all rows identical).
    """
    settings = settings or FitSettings()
    if stats.n == 0:
        raise EstimationError("maximum likelihood needs data")
    k = _default_init(stats) if init is None else as_params(init).k.copy()
    if k.size != stats.P:
        raise DomainError("init has the wrong dimension")
    converged = False
    it = 0
    for it in range(1, settings.max_iterations + 1):
        new = np.asarray(inv_digamma(sp.digamma(k.sum()) + stats.mean_log))
        if not np.all(np.isfinite(new)) or new.sum() > K0_OVERFLOW:
            raise EstimationError("fixed point diverged (k0 > 1e12); data are nearly degenerate")
        change = np.max(np.abs(new - k))
        k = new
        if change <= settings.tolerance:
            converged = True
            break
    return FitReport(
        DirichletParams(k),
        float(_loglik(k, stats)),
        it,
        converged,
        float(np.max(np.abs(_loglik_grad(k, stats)))),
        "ml",
    )


def _natural_direction(k, g, weight):
    # solves (weight * (diag(psi'(k)) - psi'(k0) 11^T)) d = g by Sherman-Morrison;
    # the matrix is the Fisher information of `weight` observations
    q = _trigamma(k)
    c = _trigamma(k.sum())
    denom = 1.0 - c * np.sum(1.0 / q)
    if not denom > 0:
        return g
    return (g / q + (c * np.sum(g / q) / denom) / q) / weight


def posterior_mode(stats, settings=None, init=None):
    """Maximize a log posterior (or the likelihood) by projected gradient ascent.

    Each iteration proposes ``k + step * d`` projected onto ``k >= lower_bound``.
    A proposal that lowers the objective (or leaves the support) halves the
    step; an accepted one grows it by 1.1. With ``settings.preconditioned`` the
    direction ``d`` is the gradient premultiplied by the inverse Fisher
    information (step capped at 1), otherwise ``d`` is the raw gradient.
    Terminates when the gradient sup-norm is at most ``settings.tolerance``.

    Parameters
    ----------
    stats : SufficientStats
    settings : FitSettings, optional
        ``objective`` selects ``"mdi-mode"``, ``"jeffreys-mode"`` or ``"ml"``;
        defaults to ``"mdi-mode"`` when no settings are given.
    init : DirichletParams, optional
        Starting point, typically the method-of-moments estimate.

    Returns
    -------
    FitReport
        ``converged=False`` if the iteration cap is hit or no ascent step can be
        found before the gradient condition holds.
    """
    settings = settings or FitSettings(objective="mdi-mode")
    value, grad = objective_function(settings.objective, stats)
    k = _default_init(stats) if init is None else as_params(init).k.copy()
    if k.size != stats.P:
        raise DomainError("init has the wrong dimension")
    k = np.maximum(k, settings.lower_bound)
    f = value(k)
    if f == -np.inf:
        raise DomainError(f"objective is not finite at the initial point {k.tolist()}")
    g = grad(k)
    weight = max(stats.n, 1)
    pre = settings.preconditioned
    max_step = 1.0 if pre else np.inf
    step = settings.step_size or (1.0 if pre else 1e-3 / weight)
    noise = 1e-10

    converged = False
    it = 0
    while True:
        gnorm = float(np.max(np.abs(g)))
        if gnorm <= settings.tolerance:
            converged = True
            break
        if it >= settings.max_iterations:
            break
        d = _natural_direction(k, g, weight) if pre else g
        # never shrink a component by more than half in one step: the MDI posterior
        # is unbounded as any k_j -> 0, so the ascent must stay local
        shrinking = d < 0
        t_max = np.min(0.5 * k[shrinking] / -d[shrinking]) if np.any(shrinking) else np.inf
        accepted = False
        while step > 1e-30:
            cand = np.maximum(k + min(step, t_max) * d, settings.lower_bound)
            fc = value(cand)
            if fc >= f:
                accepted = True
                break
            if fc > f - noise * max(1.0, abs(f)):
                # inside rounding noise of the objective: let the gradient decide
                gc = grad(cand)
                if np.max(np.abs(gc)) < gnorm:
                    accepted = True
                    break
            step *= 0.5
        if not accepted or np.array_equal(cand, k):
            break
        k, f = cand, fc
        g = grad(k)
        step = min(step * 1.1, max_step)
        it += 1
    f_final = value(k)
    return FitReport(
        DirichletParams(k), float(f_final), it, converged, float(np.max(np.abs(g))), settings.objective
    )


def fit_mode(X, objective="mdi-mode", settings=None, init=None):
    """Convenience: MoM start then :func:`posterior_mode` on a Type I sample."""
    settings = settings or FitSettings()
    settings = replace(settings, objective=objective)
    stats = sufficient_stats(X)
    if init is None:
        init = method_of_moments(X)
    return posterior_mode(stats, settings, init)
