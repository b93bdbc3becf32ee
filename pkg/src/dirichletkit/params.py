"""Parameter container, sufficient statistics and input validation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import DomainError

ROW_SUM_TOL = 1e-6


def _frozen(arr):
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class DirichletParams:
    """Dirichlet parameters ``k_1..k_P`` (shared by Type I and Type II).

    Attributes
    ----------
    k : ndarray of shape (P,)
        Strictly positive, finite. Read-only.
    """

    k: np.ndarray

    def __post_init__(self):
        k = _frozen(np.ravel(self.k))
        if k.size < 2:
            raise DomainError(f"need at least 2 components, got {k.size}")
        if not np.all(np.isfinite(k)) or np.any(k <= 0):
            raise DomainError(f"parameters must be positive and finite, got {k.tolist()}")
        object.__setattr__(self, "k", k)

    @property
    def k0(self):
        return float(self.k.sum())

    @property
    def P(self):
        return int(self.k.size)

    def __len__(self):
        return self.P

    def __eq__(self, other):
        if not isinstance(other, DirichletParams):
            return NotImplemented
        return np.array_equal(self.k, other.k)

    def __hash__(self):
        return hash(self.k.tobytes())

    def __repr__(self):
        return f"DirichletParams({np.array2string(self.k, precision=6, separator=', ')})"

    def tolist(self):
        return self.k.tolist()


def as_params(k):
    return k if isinstance(k, DirichletParams) else DirichletParams(np.asarray(k, dtype=float))


@dataclass(frozen=True, eq=False)
class SufficientStats:
    """Column means of log data; the only data-dependent term of the likelihood.

    ``n == 0`` is allowed and denotes "no data" (prior-only objectives).
    """

    n: int
    mean_log: np.ndarray
    sum_log: np.ndarray = field(init=False)

    def __post_init__(self):
        mean_log = _frozen(self.mean_log)
        object.__setattr__(self, "mean_log", mean_log)
        object.__setattr__(self, "sum_log", _frozen(self.n * mean_log))

    @property
    def P(self):
        return int(self.mean_log.size)

    @classmethod
    def empty(cls, P):
        return cls(0, np.zeros(P))


def sufficient_stats(X):
    """Sufficient statistics of a Type I sample (rows on the open simplex)."""
    X = check_composition(X)
    return SufficientStats(X.shape[0], np.log(X).mean(axis=0))


def check_composition(X, renormalize_tol=ROW_SUM_TOL):
    """Validate an ``n x P`` Type I sample and return it as a float array.

    Rows whose sum is within ``renormalize_tol`` of one are renormalized; any
    other row, and any entry outside (0, 1), raises :class:`DomainError` naming
    the (0-based) row.
    """
    X = np.array(X, dtype=float, ndmin=2)
    if X.ndim != 2 or X.shape[0] == 0:
        raise DomainError("composition data must be a non-empty 2-D array")
    if X.shape[1] < 2:
        raise DomainError("composition data needs at least 2 columns")
    if not np.all(np.isfinite(X)):
        row = int(np.argwhere(~np.isfinite(X))[0, 0])
        raise DomainError(f"row {row}: non-finite entry")
    bad = np.argwhere(X <= 0)
    if bad.size:
        row, col = bad[0]
        raise DomainError(
            f"row {row}: entry in column {col} is {X[row, col]!r}; zeros are outside the "
            "open simplex (treat them as missing and use multiple imputation)"
        )
    sums = X.sum(axis=1)
    off = np.abs(sums - 1.0) > renormalize_tol
    if np.any(off):
        row = int(np.argmax(off))
        raise DomainError(f"row {row}: components sum to {sums[row]!r}, not 1")
    X = X / sums[:, None]
    if np.any(X >= 1):
        raise DomainError(f"row {int(np.argwhere(X >= 1)[0, 0])}: entry not below 1")
    return X


def check_type2(Y):
    """Validate an ``n x (P-1)`` Type II sample (strictly positive, finite)."""
    Y = np.array(Y, dtype=float, ndmin=2)
    if Y.ndim != 2 or Y.shape[0] == 0 or Y.shape[1] == 0:
        raise DomainError("Type II data must be a non-empty 2-D array")
    bad = np.argwhere(~np.isfinite(Y) | (Y <= 0))
    if bad.size:
        row, col = bad[0]
        raise DomainError(f"row {row}: entry in column {col} is {Y[row, col]!r}, must be positive")
    return Y
