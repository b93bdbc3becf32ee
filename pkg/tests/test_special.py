import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from dirichletkit.exceptions import DomainError
from dirichletkit.special import (
    EULER_GAMMA,
    RngStream,
    as_stream,
    digamma,
    inv_digamma,
    log_gamma,
    sample_gamma,
    tetragamma,
    trigamma,
)

positive = st.floats(min_value=1e-3, max_value=1e4, allow_nan=False)


@pytest.mark.parametrize(
    "x, expected",
    [(1.0, 0.0), (5.0, math.log(24.0)), (0.5, 0.5 * math.log(math.pi))],
)
def test_log_gamma_known_values(x, expected):
    assert log_gamma(x) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize(
    "x, expected",
    [(1.0, -EULER_GAMMA), (2.0, 1 - EULER_GAMMA), (0.5, -EULER_GAMMA - 2 * math.log(2))],
)
def test_digamma_known_values(x, expected):
    assert digamma(x) == pytest.approx(expected, abs=1e-10)


@pytest.mark.parametrize(
    "x, expected",
    [(1.0, math.pi**2 / 6), (2.0, math.pi**2 / 6 - 1), (100.0, 1 / 100 + 1 / (2 * 100**2) + 1 / (6 * 100**3))],
)
def test_trigamma_known_values(x, expected):
    assert trigamma(x) == pytest.approx(expected, rel=1e-8)


@pytest.mark.parametrize(
    "x, expected",
    [
        (1.0, -2 * 1.2020569031595942),
        (2.0, -2 * 1.2020569031595942 + 2),
        # asymptotic series -1/x^2 - 1/x^3 - 1/(2x^4) + 1/(6x^6)
        (10.0, -1 / 10**2 - 1 / 10**3 - 1 / (2 * 10**4) + 1 / (6 * 10**6)),
    ],
)
def test_tetragamma_known_values(x, expected):
    assert tetragamma(x) == pytest.approx(expected, rel=1e-5)


@given(positive)
def test_polygammas_match_arbitrary_precision(x):
    assert log_gamma(x) == pytest.approx(float(mpmath.loggamma(x)), rel=1e-12, abs=1e-12)
    assert digamma(x) == pytest.approx(float(mpmath.digamma(x)), rel=1e-12, abs=1e-12)
    assert trigamma(x) == pytest.approx(float(mpmath.polygamma(1, x)), rel=1e-12)
    assert tetragamma(x) == pytest.approx(float(mpmath.polygamma(2, x)), rel=1e-10)


def test_finite_difference_chain():
    x = np.geomspace(0.1, 100, 200)
    # relative step: the fourth polygamma grows like 24/x^5 near 0.1
    h = 1e-5 * x
    fd = lambda f: (f(x + h) - f(x - h)) / (2 * h)
    assert np.max(np.abs(fd(log_gamma) - digamma(x))) <= 1e-6
    assert np.max(np.abs(fd(digamma) - trigamma(x))) <= 1e-6
    assert np.max(np.abs(fd(trigamma) - tetragamma(x))) <= 1e-6


def test_array_shape_preserved():
    x = np.array([[0.5, 1.0], [2.0, 3.0]])
    for f in (log_gamma, digamma, trigamma, tetragamma):
        assert f(x).shape == (2, 2)
    assert isinstance(digamma(2.0), float)


@pytest.mark.parametrize("bad", [0.0, -1.0, np.nan, np.inf, [1.0, -2.0]])
def test_polygamma_domain(bad):
    for f in (log_gamma, digamma, trigamma, tetragamma):
        with pytest.raises(DomainError):
            f(bad)


def test_inv_digamma_examples():
    assert inv_digamma(-EULER_GAMMA) == pytest.approx(1.0, abs=1e-10)
    assert inv_digamma(digamma(10.0)) == pytest.approx(10.0, rel=1e-10)
    x = inv_digamma(-10.0)
    # bisection oracle
    root = float(mpmath.findroot(lambda t: mpmath.digamma(t) + 10, (0.05, 0.2), solver="bisect"))
    assert x == pytest.approx(root, rel=1e-9)
    assert 0.1 < x < 0.11


@given(st.floats(min_value=1e-4, max_value=1e7))
def test_inv_digamma_round_trip(x):
    assert inv_digamma(digamma(x)) == pytest.approx(x, rel=1e-8)


@given(st.floats(min_value=-50, max_value=20))
def test_digamma_of_inverse(y):
    assert digamma(inv_digamma(y)) == pytest.approx(y, abs=1e-9 * max(1, abs(y)))


def test_inv_digamma_rejects_non_finite():
    with pytest.raises(DomainError):
        inv_digamma(np.nan)


def test_inv_digamma_vectorized():
    x = np.array([0.01, 1.0, 50.0, 3e5])
    np.testing.assert_allclose(inv_digamma(digamma(x)), x, rtol=1e-10)


def test_stream_reproducible():
    a = RngStream(7).normal(5)
    b = RngStream(7).normal(5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, RngStream(8).normal(5))


def test_substreams_independent_and_stable():
    root = RngStream(3)
    s0 = root.substream(0).uniform(1000)
    s1 = root.substream(1).uniform(1000)
    assert not np.array_equal(s0, s1)
    # using the parent does not disturb its substreams
    root.uniform(50)
    assert np.array_equal(root.substream(0).uniform(1000), s0)
    assert abs(np.corrcoef(s0, s1)[0, 1]) < 0.15
    nested = root.substream(0).substream(2).uniform(3)
    assert np.array_equal(nested, RngStream(3).substream(0).substream(2).uniform(3))


def test_stream_validation():
    with pytest.raises(DomainError):
        RngStream(-1)
    with pytest.raises(DomainError):
        RngStream(1).substream(-1)
    with pytest.raises(TypeError):
        as_stream("seed")
    g = np.random.default_rng(1)
    assert as_stream(g).generator is g
    assert isinstance(as_stream(None), RngStream)


def test_gamma_moments_shape_three():
    draws = sample_gamma(3.0, RngStream(11), size=10**6)
    assert abs(draws.mean() - 3.0) < 0.006


def test_gamma_variance_shape_half():
    draws = sample_gamma(0.5, RngStream(12), size=10**6)
    # variance of the sample variance for Gamma(a): (m4 - s^4)/n with m4 = 3a^2 + 6a
    a = 0.5
    se = math.sqrt((3 * a * a + 6 * a - a * a) / 10**6)
    assert abs(draws.var() - 0.5) < 3 * se


def test_gamma_shape_one_is_exponential():
    draws = sample_gamma(1.0, RngStream(13), size=10**6)
    assert stats.kstest(draws, "expon").statistic < 0.002


def test_gamma_small_shape_distribution():
    draws = sample_gamma(0.2, RngStream(14), size=20000)
    assert stats.kstest(draws, stats.gamma(0.2).cdf).pvalue > 1e-3


def test_gamma_rejects_bad_shape():
    with pytest.raises(DomainError):
        sample_gamma(0.0, RngStream(1))
