import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tdpsf.special import GammaDomainError, inverse_upper_incomplete_gamma, upper_incomplete_gamma

mpmath.mp.dps = 40


def oracle(a, x):
    return float(mpmath.quad(lambda t: t ** (a - 1) * mpmath.e ** (-t), [x, x + 1, x + 30, mpmath.inf]))


def test_exponential_case():
    assert upper_incomplete_gamma(1.0, 0.0) == pytest.approx(1.0, rel=1e-15)
    assert upper_incomplete_gamma(1.0, 1.0) == pytest.approx(math.exp(-1), rel=1e-14)


def test_half_integer_value():
    assert upper_incomplete_gamma(0.5, 1.0) == pytest.approx(0.2788055852806619, rel=1e-12)
    assert upper_incomplete_gamma(0.5, 1.0) == pytest.approx(math.sqrt(math.pi) * math.erfc(1.0), rel=1e-13)


def test_inverse_exponential_case():
    assert inverse_upper_incomplete_gamma(1.0, 0.5) == pytest.approx(math.log(2), rel=1e-13)


def test_inverse_against_root_of_oracle():
    x = float(mpmath.findroot(lambda s: mpmath.gammainc(1.5, s) - 0.1, 3.0))
    assert x == pytest.approx(2.987448821846179, rel=1e-12)
    assert inverse_upper_incomplete_gamma(1.5, 0.1) == pytest.approx(x, rel=1e-12)


@pytest.mark.parametrize("a, y", [(0.0, 0.5), (-1.0, 0.5), (1.0, 0.0), (1.0, 1.0), (1.0, 2.0), (0.5, -1e-3)])
def test_inverse_domain(a, y):
    with pytest.raises(GammaDomainError):
        inverse_upper_incomplete_gamma(a, y)


def test_forward_domain():
    with pytest.raises(GammaDomainError):
        upper_incomplete_gamma(1.0, -1.0)
    with pytest.raises(GammaDomainError):
        upper_incomplete_gamma(0.0, 1.0)


@pytest.mark.parametrize("a", [0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0])
def test_forward_matches_quadrature(a):
    for x in np.logspace(-8, math.log10(50), 12):
        assert upper_incomplete_gamma(a, x) == pytest.approx(oracle(a, x), rel=1e-10)


@given(st.floats(0.25, 4.0), st.floats(1e-3, 40.0))
def test_round_trip(a, x):
    y = upper_incomplete_gamma(a, x)
    assert upper_incomplete_gamma(a, inverse_upper_incomplete_gamma(a, y)) == pytest.approx(y, rel=1e-10)


@given(st.floats(0.25, 4.0), st.floats(1e-3, 40.0), st.floats(1e-3, 40.0))
def test_monotone_decreasing(a, x1, x2):
    lo, hi = sorted((x1, x2))
    assert upper_incomplete_gamma(a, lo) >= upper_incomplete_gamma(a, hi)
