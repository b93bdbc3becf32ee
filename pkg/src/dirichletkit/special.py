"""Special functions and random-variate primitives.

The log-gamma and polygamma functions are thin, validated wrappers around
``scipy.special``; the inverse digamma is a Newton solver. All functions accept
scalars or arrays and return the same shape.
"""

from __future__ import annotations

import numpy as np
from scipy import special as sp

from .exceptions import DomainError

EULER_GAMMA = 0.57721566490153286061


def _positive(x, name="x"):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
        raise DomainError(f"{name} must be positive and finite")
    return arr


def _out(arr):
    return arr.item() if np.ndim(arr) == 0 else arr


# polygammas through the Hurwitz zeta ufunc; sp.polygamma is several times slower
def _trigamma(x):
    return sp.zeta(2.0, x)


def _tetragamma(x):
    return -2.0 * sp.zeta(3.0, x)


def log_gamma(x):
    """Natural log of the gamma function for positive ``x``."""
    return _out(sp.gammaln(_positive(x)))


def digamma(x):
    """psi(x), the derivative of ``log_gamma``."""
    return _out(sp.digamma(_positive(x)))


def trigamma(x):
    """psi'(x); positive and decreasing on x > 0."""
    return _out(_trigamma(_positive(x)))


def tetragamma(x):
    """psi''(x); negative on x > 0."""
    return _out(_tetragamma(_positive(x)))


def inv_digamma(y, max_newton=10, tol=1e-12):
    """Solve ``digamma(x) = y`` for x > 0.

    Starts from Minka's two-branch guess and refines with Newton steps. psi is
    concave and increasing, so after the first step the iterates approach the
    root from below.

    Parameters
    ----------
    y : float or array_like
        Target value(s); must be finite.
    max_newton : int
        Newton step cap.
    tol : float
        Early exit once every ``|psi(x) - y|`` is below this.

    Returns
    -------
    float or ndarray
    """
    y = np.asarray(y, dtype=float)
    if not np.all(np.isfinite(y)):
        raise DomainError("inv_digamma requires finite input")
    with np.errstate(divide="ignore"):
        x = np.where(y >= -2.22, np.exp(np.minimum(y, 700.0)) + 0.5, -1.0 / (y + EULER_GAMMA))
    for _ in range(max_newton):
        resid = sp.digamma(x) - y
        if np.all(np.abs(resid) <= tol * np.maximum(1.0, np.abs(y))):
            break
        step = x - resid / _trigamma(x)
        x = np.where(step > 0, step, 0.5 * x)
    return _out(x)


class RngStream:
    """Seeded random stream with index-addressable substreams.

    Wraps :class:`numpy.random.Generator` (PCG64). ``substream(i)`` derives an
    independent stream from the same root seed, so parallel work indexed by
    ``i`` gives the same numbers regardless of scheduling.

    A stream is single-owner; derive a substream per task instead of sharing.
    """

    def __init__(self, seed=0, _seed_seq=None):
        if _seed_seq is None:
            if seed is None or int(seed) < 0:
                raise DomainError("seed must be a non-negative integer")
            _seed_seq = np.random.SeedSequence(int(seed))
        self._seed_seq = _seed_seq
        self.generator = np.random.Generator(np.random.PCG64(_seed_seq))

    @property
    def seed(self):
        return self._seed_seq.entropy

    def substream(self, index):
        if index < 0:
            raise DomainError("substream index must be non-negative")
        child = np.random.SeedSequence(
            self._seed_seq.entropy, spawn_key=tuple(self._seed_seq.spawn_key) + (int(index),)
        )
        return RngStream(_seed_seq=child)

    def uniform(self, size=None):
        return self.generator.random(size)

    def normal(self, size=None):
        return self.generator.standard_normal(size)

    def gamma(self, shape, size=None):
        return self.generator.standard_gamma(shape, size)

    def integers(self, high, size=None):
        return self.generator.integers(0, high, size)

    def __repr__(self):
        return f"RngStream(entropy={self._seed_seq.entropy}, spawn_key={self._seed_seq.spawn_key})"


def as_stream(rng):
    """Coerce ``None``/int/RngStream/Generator into an :class:`RngStream`."""
    if isinstance(rng, RngStream):
        return rng
    if rng is None:
        return RngStream(0)
    if isinstance(rng, (int, np.integer)):
        return RngStream(int(rng))
    if isinstance(rng, np.random.Generator):
        stream = RngStream.__new__(RngStream)
        stream._seed_seq = rng.bit_generator.seed_seq
        stream.generator = rng
        return stream
    raise TypeError(f"cannot build an RngStream from {type(rng).__name__}")


def sample_gamma(shape, rng, size=None):
    """Draw from Gamma(shape, 1).

    numpy's generator uses Marsaglia-Tsang squeeze rejection, boosting shapes
    below one with the ``U**(1/shape)`` identity.
    """
    shape = _positive(shape, "shape")
    return as_stream(rng).gamma(shape, size)
