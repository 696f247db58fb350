import math
import warnings
from fractions import Fraction

import mpmath
import numpy as np
import pytest

from bgkspectral import dispersion as d
from bgkspectral.numerics import SQRT_PI, Grid

SAMPLE_XI = (0.1, 0.3, 0.5, 0.8, 1.2, 1.6)


def _mp_lambda_star(xi):
    # root of 1 - sqrt(pi)/xi * erfcx((1+lam)/xi) at 30 digits, independent of scipy
    mpmath.mp.dps = 30
    x = mpmath.mpf(xi)
    f = lambda lam: 1 - mpmath.sqrt(mpmath.pi) / x * mpmath.exp(((1 + lam) / x) ** 2) * mpmath.erfc((1 + lam) / x)  # noqa: E731
    return float(mpmath.findroot(f, (mpmath.mpf(-1) + mpmath.mpf("1e-20"), mpmath.mpf(0)), solver="anderson"))


def test_omega_simple_values():
    assert d.omega(1.0, 0.0) == pytest.approx(0.5)
    assert abs(d.omega(1e6, 1.0) - 1.0) < 1e-5
    assert abs(d.omega(-1 + 1e-6, 2.0) - (1 - SQRT_PI / 2)) < 5e-7


@pytest.mark.parametrize("lam, xi", [(0.3, 0.7), (-0.5 + 0.8j, 1.3), (2.0 - 1.0j, -0.4), (-2.5 + 0.3j, 0.9)])
def test_omega_quadrature_matches_closed_form(lam, xi):
    q = d.omega(lam, xi, method="quadrature")
    c = d.omega(lam, xi, method="closed")
    assert abs(q - c) < 1e-12


def test_omega_integral_form():
    for lam, xi in [(-0.3, 0.6), (0.5, 1.4), (-0.8, 2.0)]:
        assert d.omega_integral_form(lam, xi) == pytest.approx(d.omega(lam, xi).real, abs=1e-12)


def test_omega_rejects_essential_line():
    with pytest.raises(d.EssentialSpectrumError):
        d.omega(-1.0 + 0.3j, 1.0)
    with pytest.raises(d.EssentialSpectrumError):
        d.omega(-1.0 + 1e-4, 1.0, method="quadrature")


@pytest.mark.parametrize("xi", [0.7, -0.7, 2.3, -2.3])
@pytest.mark.parametrize("s", [-1.2, 0.0, 0.6])
def test_boundary_values_are_one_sided_limits(xi, s):
    lam = -1.0 - 1j * s * xi
    plus = d.omega(lam + 1e-8, xi, method="closed")
    minus = d.omega(lam - 1e-8, xi, method="closed")
    assert abs(plus - d.omega_plus(s, xi)) < 1e-6
    assert abs(minus - d.omega_minus(s, xi)) < 1e-6


def test_boundary_value_jump():
    s = np.linspace(-3, 3, 13)
    for xi in (0.6, -1.4):
        jump = d.omega_plus(s, xi) - d.omega_minus(s, xi)
        assert np.allclose(jump, -2 * SQRT_PI * np.exp(-s**2) / abs(xi), atol=1e-14)


def test_omega_plus_vanishes_at_resonance():
    assert abs(d.omega_plus(0.0, SQRT_PI)) < 1e-14
    assert d.omega_plus(0.0, 1.0) == pytest.approx(1 - SQRT_PI, abs=1e-14)
    assert d.omega_minus(0.0, 1.0) == pytest.approx(1 + SQRT_PI, abs=1e-14)
    with pytest.raises(ValueError):
        d.omega_plus(0.0, 0.0)


@pytest.mark.parametrize("xi", SAMPLE_XI)
def test_lambda_star_matches_high_precision_root(xi):
    lam = d.lambda_star(xi)
    assert lam == pytest.approx(_mp_lambda_star(xi), abs=1e-12)
    assert abs(d.omega(lam, xi)) < 1e-10
    assert d.implicit_residual(lam, xi) < 1e-10


def test_lambda_star_range_and_symmetry():
    assert d.lambda_star(0.0) == 0.0
    assert d.lambda_star(2.0) is None
    assert d.lambda_star(SQRT_PI) is None
    assert d.lambda_star(-0.8) == d.lambda_star(0.8)
    xs = np.linspace(0.05, 1.75, 30)
    lam = np.array([d.lambda_star(x) for x in xs])
    assert np.all(np.diff(lam) < 0)
    assert np.all((lam > -1) & (lam < 0))
    assert d.lambda_star(1.772) < -0.99


def test_lambda_star_curve_matches_root_finder():
    xs = np.array([-1.6, -0.3, 0.0, 0.2, 0.9, 1.7, 1.8])
    curve = d.lambda_star_curve(xs)
    for x, c in zip(xs, curve):
        ref = d.lambda_star(x)
        if ref is None:
            assert math.isnan(c)
        else:
            assert c == pytest.approx(ref, abs=1e-12)


@pytest.mark.parametrize("xi", [0.4, 1.1, 1.6])
def test_omega_prime(xi):
    lam = d.lambda_star(xi)
    h = 1e-5
    fd = (d.omega(lam + h, xi) - d.omega(lam - h, xi)).real / (2 * h)
    assert d.omega_prime_lambda(lam, xi).real == pytest.approx(fd, rel=1e-7)
    assert d.omega_prime_lambda(lam, xi).real == pytest.approx(-2 * lam / xi**2, rel=1e-9)


def test_series_coefficients_exact():
    a = d.series_coefficients(5)
    assert a[:3] == [Fraction(-1, 2), Fraction(1, 4), Fraction(-1, 2)]
    assert a[3] == Fraction(27, 16)
    with pytest.raises(ValueError):
        d.series_coefficients(0)


def test_series_agrees_inside_validated_range():
    for xi in (0.05, 0.1, 0.2):
        assert abs(d.lambda_star_series(xi) - d.lambda_star(xi)) < 1e-8


def test_series_is_asymptotic_beyond_cap():
    # the optimally truncated series cannot reach 1e-8 at xi = 0.3 or 0.5
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", d.SeriesRangeWarning)
        for xi, floor in ((0.3, 1e-6), (0.5, 1e-3)):
            best = min(abs(d.lambda_star_series(xi, k) - d.lambda_star(xi))
                       for k in range(1, d.SERIES_MAX_TERMS + 1))
            assert best > floor
    with pytest.warns(d.SeriesRangeWarning):
        d.lambda_star_series(0.5)
    with pytest.raises(ValueError):
        d.lambda_star_series(0.1, terms=0)


def test_series_optimal_terms():
    assert d.series_optimal_terms(0.0) == 1
    assert d.series_optimal_terms(0.5) < d.series_optimal_terms(0.3) < d.series_optimal_terms(0.1)


def test_ode_transport():
    assert d.lambda_star_ode_check(0.5, 1.5) < 1e-6
    assert d.lambda_star_ode_check(0.5, 1.74) < 1e-6
    with pytest.raises(ValueError):
        d.lambda_star_ode_check(1.0, 0.5)


def test_heat_and_xi_ode_residuals():
    assert d.heat_residual(-0.5, 0.5) < 1e-4
    assert d.omega_xi_ode_residual(0.0, 1.5) < 1e-4
    r = d.heat_residual(0.0, 1.0, step=0.02) / d.heat_residual(0.0, 1.0, step=0.01)
    assert r == pytest.approx(4.0, rel=0.1)


def test_dispersion_point():
    p = d.dispersion_point(0.0)
    assert p.lambda_star == 0.0 and p.omega_prime == 1.0
    b = d.dispersion_point(SQRT_PI)
    assert b.boundary and b.limit_value == -1.0
    assert b.omega_prime == pytest.approx(2 / math.pi)
    n = d.dispersion_point(2.0)
    assert n.lambda_star is None and not n.boundary
    q = d.dispersion_point(0.15)
    assert set(q.route_residuals) == {"root", "implicit", "series"}


def test_lambda_star_on_coarse_grid_still_accurate():
    # the root route switches to the closed form near the line, so the grid only matters far away
    assert d.lambda_star(0.8, grid=Grid(8.0, 512)) == pytest.approx(d.lambda_star(0.8), abs=1e-10)
