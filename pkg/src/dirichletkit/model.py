"""Dirichlet Type I and Type II densities, transforms, sampling and fit checks."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import special as sp

from .exceptions import DomainError, SmallParameterWarning
from .params import (
    DirichletParams,
    SufficientStats,
    as_params,
    check_composition,
    check_type2,
    sufficient_stats,
)
from .special import as_stream


def warn_small(params, stacklevel=3):
    """Emit :class:`SmallParameterWarning` when some ``k_j < 1`` (density unbounded at the boundary)."""
    k = as_params(params).k
    if np.any(k < 1):
        warnings.warn(
            f"parameters below one ({np.round(k[k < 1], 6).tolist()}): density is unbounded near the boundary",
            SmallParameterWarning,
            stacklevel=stacklevel,
        )


def _log_norm(params):
    return sp.gammaln(params.k0) - sp.gammaln(params.k).sum()


def log_density_type1(params, x):
    """Log density of D(k) at ``x``.

    ``x`` may be a single composition (returns a float) or an ``n x P`` array
    (returns one value per row). Points must be strictly inside the simplex.
    """
    params = as_params(params)
    warn_small(params)
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    if X.shape[1] != params.P:
        raise DomainError(f"expected {params.P} components, got {X.shape[1]}")
    if np.any(X <= 0) or np.any(X >= 1):
        raise DomainError("x must lie strictly inside the simplex")
    if np.any(np.abs(X.sum(axis=1) - 1.0) > 1e-9):
        raise DomainError("x must sum to 1")
    out = _log_norm(params) + np.log(X) @ (params.k - 1.0)
    return float(out[0]) if single else out


def log_density_type2(params, y):
    """Log density of the Type II law D2(k) at ``y`` (length P-1, all positive)."""
    params = as_params(params)
    warn_small(params)
    y = np.asarray(y, dtype=float)
    single = y.ndim == 1
    Y = np.atleast_2d(y)
    if Y.shape[1] != params.P - 1:
        raise DomainError(f"expected {params.P - 1} Type II components, got {Y.shape[1]}")
    if not np.all(np.isfinite(Y)) or np.any(Y <= 0):
        raise DomainError("Type II values must be positive and finite")
    out = (
        _log_norm(params)
        + np.log(Y) @ (params.k[:-1] - 1.0)
        - params.k0 * np.log1p(Y.sum(axis=1))
    )
    return float(out[0]) if single else out


def log_likelihood_type1(params, data):
    """Type I log-likelihood from a sample or a :class:`SufficientStats`."""
    params = as_params(params)
    stats = data if isinstance(data, SufficientStats) else sufficient_stats(data)
    if stats.n == 0:
        raise DomainError("log-likelihood of an empty sample")
    if stats.P != params.P:
        raise DomainError(f"data has {stats.P} components, parameters have {params.P}")
    return float(stats.n * _log_norm(params) + stats.sum_log @ (params.k - 1.0))


def log_likelihood_type2(params, data):
    params = as_params(params)
    Y = check_type2(data)
    if Y.shape[1] != params.P - 1:
        raise DomainError(f"expected {params.P - 1} Type II columns, got {Y.shape[1]}")
    n = Y.shape[0]
    return float(
        n * _log_norm(params)
        + np.log(Y).sum(axis=0) @ (params.k[:-1] - 1.0)
        - params.k0 * np.log1p(Y.sum(axis=1)).sum()
    )


def _ref_index(ref_component, P):
    r = int(ref_component)
    if not -P <= r < P:
        raise DomainError(f"reference component {ref_component} out of range for P={P}")
    return r % P


def to_type2(X, ref_component=-1):
    """Divide every non-reference column by the reference column.

    Column order of the remaining components is preserved. ``ref_component``
    is a 0-based index (negative values count from the end).
    """
    X = np.array(X, dtype=float, ndmin=2)
    r = _ref_index(ref_component, X.shape[1])
    ref = X[:, r]
    if np.any(~np.isfinite(ref)) or np.any(ref <= 0):
        raise DomainError("reference column must be strictly positive")
    return np.delete(X, r, axis=1) / ref[:, None]


def to_type1(Y, ref_component=-1):
    """Inverse of :func:`to_type2`; the reference column is reinstated at ``ref_component``."""
    Y = check_type2(Y)
    P = Y.shape[1] + 1
    r = _ref_index(ref_component, P)
    denom = 1.0 + Y.sum(axis=1)
    if not np.all(np.isfinite(denom)):
        raise DomainError("row sums overflow")
    # 1/denom equals 1 - sum(others) without the cancellation when the reference share is small
    return np.insert(Y / denom[:, None], r, 1.0 / denom, axis=1)


def aggregate(params, merge):
    """Replace the components in ``merge`` (0-based indices) by their sum.

    The merged component takes the position of the smallest merged index.
    """
    params = as_params(params)
    idx = sorted({int(i) for i in merge})
    if len(idx) < 2 or len(idx) != len(list(merge)):
        raise DomainError("merge needs at least two distinct indices")
    if idx[0] < 0 or idx[-1] >= params.P:
        raise DomainError(f"merge indices {idx} out of range for P={params.P}")
    merged = params.k[idx].sum()
    keep = [params.k[i] for i in range(params.P) if i not in idx[1:]]
    keep[idx[0]] = merged
    return DirichletParams(np.array(keep))


def marginal_beta(params, j):
    """Beta(k_j, k0 - k_j) parameters of component ``j``."""
    params = as_params(params)
    if not 0 <= j < params.P:
        raise DomainError(f"component {j} out of range for P={params.P}")
    a = float(params.k[j])
    return a, params.k0 - a


def sample_dirichlet(params, n, rng=None):
    """Draw ``n`` rows from D(k) as normalized independent Gamma(k_j, 1) draws."""
    params = as_params(params)
    if n < 1:
        raise DomainError("n must be at least 1")
    g = as_stream(rng).gamma(params.k, size=(int(n), params.P))
    return g / g.sum(axis=1, keepdims=True)


def sample_type2(params, n, rng=None, method="ratio", ref_component=-1):
    """Draw ``n`` Type II rows.

    ``method="ratio"`` divides Gamma(k_j, 1) draws by the reference draw;
    ``method="transform"`` applies :func:`to_type2` to Type I draws.
    """
    params = as_params(params)
    if n < 1:
        raise DomainError("n must be at least 1")
    if method == "ratio":
        g = as_stream(rng).gamma(params.k, size=(int(n), params.P))
        r = _ref_index(ref_component, params.P)
        return np.delete(g, r, axis=1) / g[:, [r]]
    if method == "transform":
        return to_type2(sample_dirichlet(params, n, rng), ref_component)
    raise ValueError(f"unknown method {method!r}")


@dataclass(frozen=True)
class GoodnessReport:
    """Observed vs replicate correlations and per-margin QQ pairs."""

    observed_correlation: np.ndarray
    replicate_correlation: np.ndarray
    marginal_quantile_pairs: list
    replicate: np.ndarray

    def to_dict(self):
        return {
            "observed_correlation": self.observed_correlation.tolist(),
            "replicate_correlation": self.replicate_correlation.tolist(),
            "qq": [
                {"observed": pairs[:, 0].tolist(), "theoretical": pairs[:, 1].tolist()}
                for pairs in self.marginal_quantile_pairs
            ],
        }


def _corr(X):
    C = np.corrcoef(X, rowvar=False)
    C = (C + C.T) / 2
    np.fill_diagonal(C, 1.0)
    return C


def beta_qq_pairs(x, a, b):
    """Sorted ``x`` against Beta(a, b) quantiles at plotting positions (i - 0.5)/n."""
    x = np.sort(np.asarray(x, dtype=float))
    n = x.size
    probs = (np.arange(1, n + 1) - 0.5) / n
    return np.column_stack([x, sp.betaincinv(a, b, probs)])


def replicate_check(params, data, rng=None):
    """Simulate one replicate sample of the same size and compare it to ``data``."""
    params = as_params(params)
    X = check_composition(data)
    if X.shape[1] != params.P:
        raise DomainError(f"data has {X.shape[1]} components, parameters have {params.P}")
    rep = sample_dirichlet(params, X.shape[0], rng)
    pairs = [beta_qq_pairs(X[:, j], *marginal_beta(params, j)) for j in range(params.P)]
    return GoodnessReport(_corr(X), _corr(rep), pairs, rep)
