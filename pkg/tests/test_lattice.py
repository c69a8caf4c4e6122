import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tdpsf.lattice import (
    Field,
    SubBox,
    dft_forward,
    dft_inverse,
    hs_norm,
    l2_norm_on_box,
    make_grid,
)


def direct_dft(v):
    m = len(v)
    j = np.arange(m)
    return np.exp(-2j * np.pi * np.outer(j, j) / m) @ v / math.sqrt(m)


@pytest.mark.parametrize(
    "ndim, half, points, dx",
    [(1, 102.4, 2048, 0.1), (2, 25.6, 256, 0.2), (1, 25.6, 1024, 0.05), (1, 1.0, 8, 0.25)],
)
def test_grid_spacing(ndim, half, points, dx):
    g = make_grid(ndim, half, points)
    assert g.dx == pytest.approx(dx, rel=1e-14)
    assert g.shape == (points,) * ndim


def test_small_grid_wavenumbers():
    g = make_grid(1, 1.0, 8)
    k = np.sort(g.wavenumbers)
    assert np.allclose(k, np.pi * np.arange(-4, 4))
    assert g.kmax == pytest.approx(4 * np.pi)


@pytest.mark.parametrize("points", [7, 6, 0])
def test_grid_rejects_bad_point_counts(points):
    with pytest.raises(ValueError):
        make_grid(1, 1.0, points)


def test_grid_rejects_nonpositive_width():
    with pytest.raises(ValueError):
        make_grid(1, 0.0, 8)


def test_dft_constant_and_plane_wave():
    g = make_grid(1, 1.0, 16)
    F = dft_forward(g.field(np.ones(16)))
    assert abs(F.values[0]) == pytest.approx(4.0)
    assert np.allclose(F.values[1:], 0, atol=1e-14)
    x = g.axis
    k = g.wavenumbers[3]
    F = dft_forward(g.field(np.exp(1j * k * x)))
    nonzero = np.flatnonzero(np.abs(F.values) > 1e-12)
    assert list(nonzero) == [3]


def test_dft_matches_direct_sum():
    rng = np.random.default_rng(1)
    g = make_grid(1, 3.2, 64)
    v = rng.normal(size=64) + 1j * rng.normal(size=64)
    F = dft_forward(g.field(v))
    # the transform is the orthonormal DFT of the samples, up to a phase from the origin shift
    expect = direct_dft(v)
    assert np.allclose(np.abs(F.values), np.abs(expect), atol=1e-12)
    assert np.allclose(dft_inverse(F).values, v, atol=1e-13)


@given(st.integers(min_value=4, max_value=64).map(lambda m: 2 * m), st.integers(0, 2**31 - 1))
def test_parseval_and_round_trip(points, seed):
    rng = np.random.default_rng(seed)
    g = make_grid(1, 5.0, points)
    v = rng.normal(size=points) + 1j * rng.normal(size=points)
    f = g.field(v)
    F = dft_forward(f)
    assert np.linalg.norm(F.values) == pytest.approx(np.linalg.norm(v), rel=1e-12)
    assert F.norm() == pytest.approx(f.norm(), rel=1e-12)
    assert np.allclose(dft_inverse(F).values, v, atol=1e-12 * np.abs(v).max())


def test_l2_norm_zero_and_indicator():
    g = make_grid(1, 10.0, 200)
    box = SubBox.cube(1.0, 1)
    assert l2_norm_on_box(g.zeros(), box) == 0.0
    m = box.mask(g)
    assert m.sum() == 21
    f = g.field(m.astype(float))
    assert l2_norm_on_box(f, box) == pytest.approx(math.sqrt(21 * g.dx), rel=1e-14)


def test_l2_norm_gaussian_against_quadrature():
    g = make_grid(1, 102.4, 2048)
    f = g.field(np.exp(-g.axis**2 / 4))
    mpmath.mp.dps = 30
    exact = mpmath.sqrt(mpmath.quad(lambda x: mpmath.e ** (-x * x / 2), [-88, 0, 88]))
    assert l2_norm_on_box(f, SubBox.cube(88.0, 1)) == pytest.approx(float(exact), rel=1e-10)


def test_l2_norm_monotone_in_box():
    rng = np.random.default_rng(3)
    g = make_grid(2, 6.4, 64)
    f = g.field(rng.normal(size=g.shape))
    values = [l2_norm_on_box(f, SubBox.cube(r, 2)) for r in (0.5, 1.0, 3.0, 6.4)]
    assert all(a <= b for a, b in zip(values, values[1:]))
    assert values[-1] == pytest.approx(f.norm())


def test_hs_norm_s0_is_l2():
    rng = np.random.default_rng(4)
    g = make_grid(1, 4.0, 64)
    f = g.field(rng.normal(size=64) + 1j * rng.normal(size=64))
    assert hs_norm(f, 0) == pytest.approx(f.norm(), rel=1e-13)


def test_hs_norm_plane_wave():
    g = make_grid(1, 1.0, 16)
    k = g.wavenumbers[2]
    f = g.field(np.exp(1j * k * g.axis))
    assert hs_norm(f, 1) == pytest.approx(math.sqrt(1 + k**2) * f.norm(), rel=1e-13)


def test_hs_norm_matches_finite_difference_gradient():
    g = make_grid(1, 20.0, 4096)
    x = g.axis
    f = np.exp(-x**2 / 3 + 2j * x) + 0.5 * np.exp(-(x - 2) ** 2)
    h = g.dx
    df = (-np.roll(f, -2) + 8 * np.roll(f, -1) - 8 * np.roll(f, 1) + np.roll(f, 2)) / (12 * h)
    expect = math.sqrt(np.sum(np.abs(f) ** 2 + np.abs(df) ** 2) * h)
    # fourth-order stencil error is about 1e-8 here
    assert hs_norm(g.field(f), 1) == pytest.approx(expect, rel=1e-7)


def test_field_arithmetic_checks_grid():
    a = make_grid(1, 1.0, 8).zeros()
    b = make_grid(1, 2.0, 8).zeros()
    with pytest.raises(ValueError):
        a + b
    assert isinstance(a * 2.0, Field)
