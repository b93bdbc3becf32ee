"""scikit-learn style wrappers and the method dispatcher shared with the CLI."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .conditional import TYPE1, TYPE2, _scale_type, conditional
from .estimation import FitReport, FitSettings, method_of_moments, mle_fixed_point, posterior_mode
from .exceptions import ConvergenceWarning, DomainError
from .imputation import IncompleteMatrix, multiple_impute, pool_estimates
from .mcmc import PosteriorDraws, posterior_mean, sample_posterior
from .model import log_density_type1, log_density_type2, sample_dirichlet, to_type1, to_type2, warn_small
from .params import DirichletParams, check_composition, sufficient_stats
from .special import as_stream

METHODS = ("mom", "ml", "mdi-mode", "jeffreys-mode", "mdi-mean", "jeffreys-mean")


@dataclass(frozen=True)
class EstimateResult:
    """Point estimate plus whatever diagnostics the method produced."""

    estimate: DirichletParams
    method: str
    report: FitReport | None = None
    draws: PosteriorDraws | None = None

    @property
    def converged(self):
        return self.report is None or self.report.converged

    def to_dict(self):
        out = {"method": self.method, "estimate": self.estimate.tolist(), "converged": self.converged}
        if self.report is not None:
            out["iterations"] = self.report.iterations
            out["objective_value"] = self.report.objective_value
            out["gradient_norm"] = self.report.gradient_norm
        if self.draws is not None:
            out["mcmc"] = {
                "T": self.draws.T,
                "burn_in": self.draws.burn_in,
                "acceptance_rate": self.draws.acceptance_rate,
                "posterior_sd": self.draws.draws.std(axis=0, ddof=1).tolist() if self.draws.T > 1 else None,
            }
        return out


def estimate(X, method="mdi-mode", settings=None, T=20_000, burn_in=None, rng=None):
    """Estimate ``k`` from a Type I sample with any supported method.

    Iterative methods start from the method-of-moments estimate. Posterior
    means run a Metropolis-Hastings chain from the matching posterior mode.
    Non-convergence is reported through ``EstimateResult.converged`` rather
    than raised.

    Parameters
    ----------
    X : array_like of shape (n, P)
        Compositions, rows summing to one.
    method : {"mom", "ml", "mdi-mode", "jeffreys-mode", "mdi-mean", "jeffreys-mean"}
    settings : FitSettings, optional
        Iteration controls; its ``objective`` is overridden by ``method``.
    T, burn_in : int
        Chain controls for the posterior means.
    rng : RngStream, int or None

    Returns
    -------
    EstimateResult
    """
    method = str(method).lower()
    if method not in METHODS:
        raise DomainError(f"unknown method {method!r}; choose from {METHODS}")
    X = check_composition(X)
    settings = settings or FitSettings()
    mom = method_of_moments(X)
    if method == "mom":
        return EstimateResult(mom, method)
    stats = sufficient_stats(X)
    if method == "ml":
        report = mle_fixed_point(stats, mom, settings)
        return EstimateResult(report.estimate, method, report)
    prior, kind = method.split("-")
    if kind == "mode":
        s = FitSettings(settings.max_iterations, settings.tolerance, settings.step_size, method,
                        settings.preconditioned, settings.lower_bound)
        report = posterior_mode(stats, s, mom)
        return EstimateResult(report.estimate, method, report)
    draws, mode = sample_posterior(stats, prior, T, burn_in, as_stream(rng), mom, settings)
    return EstimateResult(posterior_mean(draws), method, mode, draws)


def _to_composition(X, scale, ref_component):
    return check_composition(X) if scale == TYPE1 else to_type1(X, ref_component)


class DirichletEstimator(BaseEstimator):
    """Fit a Dirichlet model to compositions (Type I) or ratios (Type II).

    Parameters
    ----------
    method : str, default="mdi-mode"
        One of ``"mom"``, ``"ml"``, ``"mdi-mode"``, ``"jeffreys-mode"``,
        ``"mdi-mean"``, ``"jeffreys-mean"``.
    scale : {"type1", "type2"}, default="type1"
        Type II input has P - 1 columns; the reference is implicit.
    ref_component : int, default=-1
        Where the reference sits among the P components (Type II only).
    tol, max_iter : float, int
        Convergence controls of the iterative methods.
    n_draws, burn_in : int
        Metropolis-Hastings chain length for the posterior means.
    random_state : int or None

    Attributes
    ----------
    alpha_ : ndarray of shape (P,)
    result_ : EstimateResult
    n_features_in_ : int
    """

    def __init__(
        self,
        method="mdi-mode",
        scale="type1",
        ref_component=-1,
        tol=1e-8,
        max_iter=10_000,
        n_draws=20_000,
        burn_in=None,
        random_state=None,
    ):
        self.method = method
        self.scale = scale
        self.ref_component = ref_component
        self.tol = tol
        self.max_iter = max_iter
        self.n_draws = n_draws
        self.burn_in = burn_in
        self.random_state = random_state

    def _check(self, X, reset):
        X = check_array(X, dtype=float, ensure_min_samples=1, ensure_all_finite=True)
        if reset:
            self.n_features_in_ = X.shape[1]
        elif X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return X

    def fit(self, X, y=None):
        scale = _scale_type(self.scale)
        X = self._check(X, reset=True)
        comp = _to_composition(X, scale, self.ref_component)
        settings = FitSettings(max_iterations=self.max_iter, tolerance=self.tol)
        seed = 0 if self.random_state is None else self.random_state
        self.result_ = estimate(comp, self.method, settings, self.n_draws, self.burn_in, seed)
        if not self.result_.converged:
            warnings.warn(f"{self.method} fit did not converge", ConvergenceWarning, stacklevel=2)
        self.alpha_ = self.result_.estimate.k.copy()
        warn_small(self.alpha_, stacklevel=2)
        return self

    def score_samples(self, X):
        """Log density of each row under the fitted model."""
        check_is_fitted(self, "alpha_")
        X = self._check(X, reset=False)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            if _scale_type(self.scale) == TYPE1:
                return log_density_type1(self.alpha_, check_composition(X))
            k = self.alpha_
            if self.ref_component not in (-1, k.size - 1):
                # the Type II density takes the reference as the last parameter
                r = self.ref_component % k.size
                k = np.append(np.delete(k, r), k[r])
            return log_density_type2(k, X)

    def score(self, X, y=None):
        """Mean log density per row."""
        return float(np.mean(self.score_samples(X)))

    def sample(self, n_samples=1, random_state=None):
        """Draw rows from the fitted model in the fitted scale."""
        check_is_fitted(self, "alpha_")
        X = sample_dirichlet(self.alpha_, n_samples, as_stream(random_state))
        if _scale_type(self.scale) == TYPE1:
            return X
        return to_type2(X, self.ref_component)

    def predict(self, X):
        """Fill ``NaN`` entries with their conditional means given the row's observed values.

        Uses the fitted point estimate. For Type II data the conditional mean
        is infinite when the merged tail parameter is at most one.
        """
        check_is_fitted(self, "alpha_")
        scale = _scale_type(self.scale)
        X = check_array(X, dtype=float, ensure_all_finite="allow-nan")
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        if scale == TYPE2 and self.ref_component not in (-1, self.alpha_.size - 1):
            raise ValueError("predict supports only a last reference component for Type II data")
        out = X.copy()
        for i, row in enumerate(X):
            miss = np.isnan(row)
            if not miss.any():
                continue
            if miss.all():
                out[i] = _unconditional_mean(self.alpha_, scale)
                continue
            known = {int(j): row[j] for j in np.flatnonzero(~miss)}
            spec = conditional(self.alpha_, known, scale)
            out[i, list(spec.unknown)] = spec.mean()
        return out


def _unconditional_mean(k, scale):
    if scale == TYPE1:
        return k / k.sum()
    return k[:-1] / (k[-1] - 1.0) if k[-1] > 1 else np.full(k.size - 1, np.inf)


class Type2Transformer(TransformerMixin, BaseEstimator):
    """Map compositions to ratios against a reference component and back."""

    def __init__(self, ref_component=-1):
        self.ref_component = ref_component

    def fit(self, X, y=None):
        X = check_array(X, dtype=float)
        check_composition(X)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "n_features_in_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return to_type2(check_composition(X), self.ref_component)

    def inverse_transform(self, Y):
        check_is_fitted(self, "n_features_in_")
        return to_type1(check_array(Y, dtype=float), self.ref_component)


class DirichletImputer(TransformerMixin, BaseEstimator):
    """Multiple imputation of ``NaN`` entries under a Dirichlet model.

    ``fit`` runs ``n_imputations`` chains and keeps the completed matrices in
    ``completed_``. ``transform`` fills missing entries with conditional
    means under the pooled estimate, so it also applies to new rows.

    Attributes
    ----------
    completed_ : list of ndarray
    alpha_ : ndarray
        Pooled (chain-averaged) estimate.
    spread_ : ndarray
        Between-chain standard deviation of the estimates.
    """

    def __init__(self, n_imputations=5, inner_iters=10, scale="type2", method="mdi-mode",
                 n_draws=2000, burn_in=200, random_state=None):
        self.n_imputations = n_imputations
        self.inner_iters = inner_iters
        self.scale = scale
        self.method = method
        self.n_draws = n_draws
        self.burn_in = burn_in
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_array(X, dtype=float, ensure_all_finite="allow-nan")
        self.n_features_in_ = X.shape[1]
        settings = FitSettings(objective=self.method)
        if settings.objective == "ml":
            raise ValueError("imputation needs a posterior; use 'mdi-mode' or 'jeffreys-mode'")
        seed = 0 if self.random_state is None else self.random_state
        result = multiple_impute(
            IncompleteMatrix(X, self.scale), self.n_imputations, self.inner_iters, settings,
            as_stream(seed), T=self.n_draws, burn_in=self.burn_in,
        )
        pooled, spread = pool_estimates(result)
        self.result_ = result
        self.completed_ = result.completed
        self.alpha_ = pooled.k.copy()
        self.spread_ = spread
        return self

    def transform(self, X):
        check_is_fitted(self, "alpha_")
        helper = DirichletEstimator(scale=self.scale)
        helper.alpha_ = self.alpha_
        helper.n_features_in_ = self.n_features_in_
        return helper.predict(X)
