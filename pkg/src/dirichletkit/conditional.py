"""Conditional Dirichlet laws and the predictive posterior conditional distribution."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import DomainError
from .mcmc import PosteriorDraws
from .params import DirichletParams, as_params
from .special import as_stream

TYPE1 = "type1"
TYPE2 = "type2"


def _scale_type(value):
    v = str(value).lower().replace(" ", "").replace("_", "")
    if v in ("type1", "i", "1"):
        return TYPE1
    if v in ("type2", "ii", "2"):
        return TYPE2
    raise ValueError(f"unknown scale type {value!r}; expected 'type1' or 'type2'")


@dataclass(frozen=True)
class ConditionalSpec:
    """Law of the unknown components given the known ones.

    Type I: unknowns = ``scale * W`` with ``W ~ D(reduced_params)``; with a
    single unknown the value is exactly ``scale`` and ``reduced_params`` is
    ``None``.

    Type II: unknowns = ``scale * V`` where ``V`` is Type II with
    ``reduced_params`` (the last entry, the merged tail, is its reference).
    """

    reduced_params: DirichletParams | None
    scale: float
    known: dict
    unknown: tuple
    scale_type: str = TYPE1

    @property
    def deterministic(self):
        return self.reduced_params is None

    def mean(self):
        if self.deterministic:
            return np.array([self.scale])
        a = self.reduced_params.k
        if self.scale_type == TYPE1:
            return self.scale * a / a.sum()
        b = a[-1]
        if b <= 1:
            return np.full(a.size - 1, np.inf)
        return self.scale * a[:-1] / (b - 1.0)

    def var(self):
        if self.deterministic:
            return np.array([0.0])
        a = self.reduced_params.k
        if self.scale_type == TYPE1:
            a0 = a.sum()
            return self.scale**2 * a * (a0 - a) / (a0**2 * (a0 + 1.0))
        b, ai = a[-1], a[:-1]
        if b <= 2:
            return np.full(ai.size, np.inf)
        return self.scale**2 * ai * (ai + b - 1.0) / ((b - 1.0) ** 2 * (b - 2.0))


def _known_map(known, width):
    if not known:
        raise DomainError("at least one component must be known")
    out = {}
    for idx, val in dict(known).items():
        i = int(idx)
        if not 0 <= i < width:
            raise DomainError(f"known index {idx} out of range (0..{width - 1})")
        out[i] = float(val)
    return out


def conditional_type1(params, known):
    """Condition D(k) on exact values of some components (0-based index -> value).

    The unknown components, divided by ``1 - sum(known)``, are Dirichlet with
    the unknowns' parameters.
    """
    params = as_params(params)
    known = _known_map(known, params.P)
    vals = np.array(list(known.values()))
    if np.any(vals <= 0) or np.any(vals >= 1):
        raise DomainError("known Type I values must lie in (0, 1)")
    scale = 1.0 - vals.sum()
    if not scale > 0:
        raise DomainError(f"known components sum to {vals.sum()!r} >= 1")
    unknown = tuple(i for i in range(params.P) if i not in known)
    if not unknown:
        raise DomainError("every component is known; nothing to predict")
    reduced = DirichletParams(params.k[list(unknown)]) if len(unknown) >= 2 else None
    return ConditionalSpec(reduced, float(scale), known, unknown, TYPE1)


def conditional_type2(params, known):
    """Condition the Type II law D2(k) on exact values of some Y components.

    Indices run over the ``P - 1`` Type II components (the reference
    component, last in ``k``, is never observed). Given the known ``y``,
    ``Y_unknown / (1 + sum(known y))`` is Type II with the unknowns'
    parameters followed by the summed parameters of the known components and
    the reference.
    """
    params = as_params(params)
    known = _known_map(known, params.P - 1)
    vals = np.array(list(known.values()))
    if not np.all(np.isfinite(vals)) or np.any(vals <= 0):
        raise DomainError("known Type II values must be positive")
    unknown = tuple(i for i in range(params.P - 1) if i not in known)
    if not unknown:
        raise DomainError("every component is known; nothing to predict")
    tail = params.k[list(known)].sum() + params.k[-1]
    reduced = DirichletParams(np.append(params.k[list(unknown)], tail))
    return ConditionalSpec(reduced, float(1.0 + vals.sum()), known, unknown, TYPE2)


def conditional(params, known, scale_type=TYPE1):
    if _scale_type(scale_type) == TYPE1:
        return conditional_type1(params, known)
    return conditional_type2(params, known)


def sample_conditional(spec, n, rng=None):
    """``n`` draws of the unknown components, in original units (n x Q)."""
    if spec.deterministic:
        return np.full((int(n), 1), spec.scale)
    g = as_stream(rng).gamma(spec.reduced_params.k, size=(int(n), spec.reduced_params.P))
    if spec.scale_type == TYPE1:
        return spec.scale * g / g.sum(axis=1, keepdims=True)
    return spec.scale * g[:, :-1] / g[:, -1:]


@dataclass(frozen=True)
class PredictionRequest:
    """A partially observed row; ``NaN`` marks the components to predict.

    Type I rows have length P, Type II rows length P - 1.
    """

    observed: np.ndarray
    scale_type: str = TYPE1
    known: dict = field(init=False)
    missing: tuple = field(init=False)

    def __post_init__(self):
        obs = np.array(self.observed, dtype=float).ravel()
        obs.setflags(write=False)
        st = _scale_type(self.scale_type)
        missing = tuple(int(i) for i in np.flatnonzero(np.isnan(obs)))
        known = {i: float(v) for i, v in enumerate(obs) if not np.isnan(v)}
        if not missing:
            raise DomainError("nothing to predict: no missing components")
        if not known:
            raise DomainError("no observed components to condition on")
        object.__setattr__(self, "observed", obs)
        object.__setattr__(self, "scale_type", st)
        object.__setattr__(self, "missing", missing)
        object.__setattr__(self, "known", known)

    @property
    def width(self):
        return self.observed.size

    @classmethod
    def from_known(cls, width, known, scale_type=TYPE1):
        obs = np.full(width, np.nan)
        for i, v in known.items():
            if not 0 <= int(i) < width:
                raise DomainError(f"component index {int(i) + 1} is outside 1..{width}")
            obs[int(i)] = v
        return cls(obs, scale_type)


def predictive_conditional(draws, request, rng=None):
    """Simulate the predictive posterior conditional of the missing components.

    For each retained posterior draw ``k_t`` one set of missing values is drawn
    from the conditional law under ``k_t`` and rescaled to original units.
    Returns a ``T x Q`` array whose columns follow ``request.missing``.
    """
    K = draws.draws if isinstance(draws, PosteriorDraws) else np.atleast_2d(np.asarray(draws, dtype=float))
    if K.shape[0] == 0:
        raise DomainError("no posterior draws")
    P = K.shape[1]
    width = P if request.scale_type == TYPE1 else P - 1
    if request.width != width:
        raise DomainError(f"request has {request.width} components, expected {width}")
    # validates the known values once; all draws share them
    spec = conditional(K[0], request.known, request.scale_type)
    unknown = list(spec.unknown)
    known = list(request.known)
    T = K.shape[0]
    if spec.deterministic:
        return np.full((T, 1), spec.scale)
    if request.scale_type == TYPE1:
        shapes = K[:, unknown]
    else:
        tail = K[:, known].sum(axis=1) + K[:, -1]
        shapes = np.column_stack([K[:, unknown], tail])
    g = as_stream(rng).gamma(shapes)
    if request.scale_type == TYPE1:
        return spec.scale * g / g.sum(axis=1, keepdims=True)
    return spec.scale * g[:, :-1] / g[:, -1:]


@dataclass(frozen=True)
class PredictionSummary:
    mean: np.ndarray
    quantiles: dict

    def to_dict(self, names=None):
        names = names or [str(i) for i in range(self.mean.size)]
        return {
            "mean": dict(zip(names, self.mean.tolist())),
            "quantiles": {
                f"{lvl:g}": dict(zip(names, q.tolist())) for lvl, q in self.quantiles.items()
            },
        }


def summarize_prediction(predictive, levels=(0.025, 0.5, 0.975)):
    """Componentwise means and empirical quantiles (linear interpolation)."""
    arr = np.atleast_2d(np.asarray(predictive, dtype=float))
    if arr.size == 0:
        raise DomainError("empty predictive sample")
    if arr.shape[0] < 2:
        raise DomainError("need at least 2 predictive draws")
    levels = [float(lv) for lv in levels]
    if any(not 0 <= lv <= 1 for lv in levels):
        raise DomainError("quantile levels must lie in [0, 1]")
    return PredictionSummary(
        arr.mean(axis=0), {lv: np.quantile(arr, lv, axis=0) for lv in levels}
    )
