import math
import warnings

import mpmath
import numpy as np
import pytest
from scipy import integrate
from hypothesis import given, settings
from hypothesis import strategies as st

from bgkspectral.numerics import (
    SQRT_PI,
    BoundaryLeakageWarning,
    Grid,
    GridFunction,
    GridMismatchError,
    dawson,
    inner_w,
    moment,
    norm_w,
    norms,
    plemelj,
    principal_value,
    pv_quad,
    pv_weight,
    random_smooth,
    weight,
)


def test_grid_nodes_contain_zero_and_are_mirrored(grid):
    v = grid.nodes
    assert v[0] == -grid.half_width
    assert v[grid.n // 2] == 0.0
    assert np.allclose(v[1:], -v[1:][::-1], atol=1e-13)
    assert grid.spacing == pytest.approx(2 * grid.half_width / grid.n)


@pytest.mark.parametrize("n, half", [(3, 8.0), (2, 8.0), (64, 0.0), (64, -1.0)])
def test_grid_rejects_bad_parameters(n, half):
    with pytest.raises(ValueError):
        Grid(half, n)


def test_grid_arrays_are_read_only(grid):
    with pytest.raises(ValueError):
        grid.nodes[0] = 1.0
    with pytest.raises(ValueError):
        grid.weights[0] = 1.0


def test_grid_function_arithmetic(grid):
    f = grid.identity()
    g = grid.constant(2.0)
    assert np.allclose((f + g).values, grid.nodes + 2)
    assert np.allclose((2 - f).values, 2 - grid.nodes)
    assert np.allclose((f * g / 4).values, grid.nodes / 2)
    assert np.allclose((-f).conj().values, -grid.nodes)
    assert len(f) == grid.n
    assert np.asarray(f).shape == (grid.n,)


def test_grid_function_validation(grid):
    with pytest.raises(ValueError):
        GridFunction(grid, np.zeros(grid.n - 1))
    vals = np.zeros(grid.n)
    vals[3] = np.nan
    with pytest.raises(FloatingPointError):
        GridFunction(grid, vals)
    with pytest.raises(GridMismatchError):
        grid.constant() + Grid(8.0, 64).constant()
    with pytest.raises(GridMismatchError):
        inner_w(grid.constant(), Grid(8.0, 64).constant())


def test_weight_moments(grid):
    assert moment(grid.constant()).real == pytest.approx(1.0, abs=1e-14)
    assert moment(grid.identity() * grid.identity()).real == pytest.approx(0.5, abs=1e-14)
    assert weight(0.0) == pytest.approx(1 / SQRT_PI)


@pytest.mark.parametrize("x", [-3.0, -0.4, 0.0, 0.7, 1.5, 6.0])
def test_dawson_matches_mpmath(x):
    exact = float(mpmath.sqrt(mpmath.pi) / 2 * mpmath.exp(-x * x) * mpmath.erfi(x))
    assert dawson(x) == pytest.approx(exact, rel=1e-13, abs=1e-300)


@pytest.mark.parametrize("lam", [-1.3, 0.0, 0.4, 2.2])
def test_pv_weight_matches_quadrature(lam):
    ref = pv_quad(weight, lam)
    assert pv_weight(lam) == pytest.approx(ref, abs=1e-12)


def test_principal_value_of_first_moment(grid):
    # p.v. int z w(z)/(z - lam) dz = 1 - 2 lam D(lam)
    g = grid.identity() * grid.weights
    lam = grid.nodes
    sel = np.abs(lam) <= 4
    exact = 1 - 2 * lam * dawson(lam)
    assert np.max(np.abs(principal_value(g).values - exact)[sel]) < 1e-10


def test_plemelj_jump_is_exact(grid, rng):
    g = random_smooth(grid, rng) * grid.weights
    jump = plemelj(g, 1) - plemelj(g, -1)
    assert np.max(np.abs((jump - 2j * math.pi * g).values)) < 1e-13


def test_plemelj_side_and_leakage(grid):
    with pytest.raises(ValueError):
        plemelj(grid.constant(), 0)
    with pytest.warns(BoundaryLeakageWarning):
        plemelj(grid.constant(), 1)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        plemelj(GridFunction(grid, grid.weights), 1)


def test_norms(grid, rng):
    f = random_smooth(grid, rng)
    n = norms(f)
    assert n.l2w == pytest.approx(norm_w(f))
    assert n.h1w >= n.l2w


def test_random_smooth_is_reproducible(grid):
    a = random_smooth(grid, np.random.default_rng(7))
    b = random_smooth(grid, np.random.default_rng(7))
    assert np.array_equal(a.values, b.values)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.complex_numbers(max_magnitude=10, allow_nan=False))
def test_inner_product_is_hermitian_and_sesquilinear(seed, c):
    grid = Grid(8.0, 256)
    rng = np.random.default_rng(seed)
    f, g = random_smooth(grid, rng), random_smooth(grid, rng)
    assert inner_w(f, g) == pytest.approx(inner_w(g, f).conjugate(), rel=1e-12, abs=1e-12)
    assert inner_w(c * f, g) == pytest.approx(c * inner_w(f, g), rel=1e-10, abs=1e-10)
    assert inner_w(f, f).real >= 0


def test_weight_and_dawson_examples():
    assert weight(1.0) == pytest.approx(math.exp(-1) / SQRT_PI, rel=1e-15)
    assert dawson(0.0) == 0.0
    h = 1e-6
    assert (dawson(h) - dawson(-h)) / (2 * h) == pytest.approx(1.0, abs=1e-10)
    x = np.linspace(-4, 4, 41)
    dd = (dawson(x + h) - dawson(x - h)) / (2 * h)
    assert np.allclose(dd, 1 - 2 * x * dawson(x), atol=1e-8)
    ref, _ = integrate.quad(lambda t: math.exp(t * t), 0, 1, epsabs=1e-13, epsrel=1e-13)
    assert dawson(1.0) == pytest.approx(math.exp(-1) * ref, abs=1e-10)


def test_pv_weight_parity():
    assert pv_weight(0.0) == 0.0
    for lam in (0.3, 1.7):
        assert pv_weight(-lam) == -pv_weight(lam)


def test_plemelj_of_weight_at_zero(grid):
    s = plemelj(GridFunction(grid, grid.weights), 1)
    assert abs(s.values[grid.n // 2] - 1j * SQRT_PI) < 1e-12


def test_plemelj_far_from_compact_support(grid):
    v = grid.nodes
    inside = np.abs(v) < 1
    bump = np.zeros(grid.n)
    bump[inside] = np.exp(-1 / (1 - v[inside] ** 2))
    g = GridFunction(grid, bump)
    j = int(np.argmin(np.abs(v - 5.0)))
    plain, _ = integrate.quad(lambda z: math.exp(-1 / (1 - z * z)) / (z - v[j]), -1, 1, epsabs=1e-15)
    assert abs(plemelj(g, 1).values[j] - plain) < 1e-8


def test_inner_product_examples(grid):
    one, v = grid.constant(), grid.identity()
    assert inner_w(one, one) == pytest.approx(1.0, abs=1e-12)
    assert abs(inner_w(v, one)) < 1e-15
    assert inner_w(v, v) == pytest.approx(0.5, abs=1e-12)
    assert weight(grid.half_width) < 1e-20
