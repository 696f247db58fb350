"""Dispersion function ``omega(lam, xi)`` and the discrete eigenvalue curve.

``omega(lam, xi) = 1 - int w(v) / (i*v*xi + 1 + lam) dv`` vanishes exactly at
the discrete eigenvalue ``lambda_star(xi)`` of the linearized operator, which
exists for ``|xi| < sqrt(pi)``.  The curve is computed four independent ways:

* bracketed root of the grid-quadrature ``omega`` (:func:`lambda_star`),
* the erf form of the implicit equation (:func:`implicit_residual`,
  :func:`lambda_star_curve`),
* the even power series from the coefficient recursion
  (:func:`lambda_star_series`) -- an *asymptotic* series, see
  :data:`SERIES_XI_CAP`,
* transport along the singular ODE in ``xi`` (:func:`lambda_star_ode_check`).

Boundary values on the essential line ``Re lam = -1`` are parametrized by a
real ``s`` through the point ``lam = -1 - i*s*xi``.  With the Cauchy boundary
values ``S_pm w(s) = -2 D(s) pm i*sqrt(pi)*exp(-s**2)``::

    omega_plus(s, xi)  = 1 - S_{sgn xi} w(s) / (i*xi)    (limit from Re lam > -1)
    omega_minus(s, xi) = 1 - S_{-sgn xi} w(s) / (i*xi)   (limit from Re lam < -1)
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import integrate, special

from .numerics import SQRT_PI, Grid, dawson

#: half-width of the band around Re lam = -1 rejected by the quadrature route
ESSENTIAL_BAND = 1e-3
#: pole distance (in v units) below which ``omega`` switches to the Faddeeva form
QUADRATURE_MIN_POLE_DISTANCE = 0.05
#: left end of the root bracket is -1 + ROOT_BRACKET_OFFSET
ROOT_BRACKET_OFFSET = 1e-8
ROOT_TOL = 1e-12
#: |xi - sqrt(pi)| below which xi is treated as the resonant boundary
BOUNDARY_TOL = 1e-12
#: validated range of the power series at 1e-8 agreement with 12 terms
SERIES_XI_CAP = 0.2
SERIES_MAX_TERMS = 32

DEFAULT_GRID = Grid()


class EssentialSpectrumError(ValueError):
    """``lam`` lies on (or too close to) the essential line ``Re lam = -1``."""


class BracketError(RuntimeError):
    """The root bracket for ``lambda_star`` shows no sign change."""


class SeriesRangeWarning(UserWarning):
    """Power series evaluated outside its validated range."""


class StepRejectedError(RuntimeError):
    """ODE transport left the admissible region ``-1 < lambda_star < 0``."""


@dataclass(frozen=True)
class DispersionPoint:
    xi: float
    lambda_star: float | None
    omega_prime: float | None
    boundary: bool = False
    route_residuals: dict = field(default_factory=dict)

    @property
    def limit_value(self) -> float | None:
        """Limit of ``lambda_star`` at the resonant endpoints ``|xi| = sqrt(pi)``."""
        return -1.0 if self.boundary else None


def _cauchy_weight(zeta):
    """``int w(v)/(v - zeta) dv`` for non-real ``zeta`` via the Faddeeva function."""
    zeta = np.asarray(zeta, dtype=complex)
    upper = zeta.imag > 0
    return np.where(
        upper,
        1j * SQRT_PI * special.wofz(np.where(upper, zeta, 1j)),
        -1j * SQRT_PI * special.wofz(np.where(upper, -1j, -zeta)),
    )


def omega(lam, xi, *, grid: Grid = DEFAULT_GRID, method: str = "auto"):
    """Dispersion function at complex ``lam``.

    ``method`` is ``"quadrature"`` (trapezoid on the velocity grid; rejects
    ``|Re lam + 1| < ESSENTIAL_BAND``), ``"closed"`` (Faddeeva form, valid for
    any ``Re lam != -1``) or ``"auto"``, which uses the quadrature unless the
    integrand pole is too close to the real axis for the grid to resolve it.
    """
    lam = complex(lam)
    xi = float(xi)
    a = lam.real + 1.0
    if xi == 0.0:
        if lam == -1.0:
            raise EssentialSpectrumError("omega(., 0) has a pole at lam = -1")
        return 1.0 - 1.0 / (1.0 + lam)
    if a == 0.0:
        raise EssentialSpectrumError(
            "lam on Re lam = -1; use omega_plus/omega_minus for boundary values"
        )
    if method == "auto":
        method = "quadrature" if abs(a) / abs(xi) >= QUADRATURE_MIN_POLE_DISTANCE else "closed"
    if method == "quadrature":
        if abs(a) < ESSENTIAL_BAND:
            raise EssentialSpectrumError(f"|Re lam + 1| = {abs(a):.1e} < {ESSENTIAL_BAND}")
        v, w = grid.nodes, grid.weights
        return complex(1.0 - grid.spacing * np.sum(w / (1j * v * xi + 1.0 + lam)))
    if method == "closed":
        zeta = 1j * (1.0 + lam) / xi
        return complex(1.0 - _cauchy_weight(zeta) / (1j * xi))
    raise ValueError(f"unknown method {method!r}")


def _boundary_cauchy(s, side):
    s = np.asarray(s, dtype=float)
    return -2.0 * dawson(s) + side * 1j * SQRT_PI * np.exp(-s * s)


def omega_plus(s, xi):
    """Boundary value of ``omega`` at ``lam = -1 - i*s*xi`` approached from the right."""
    xi = float(xi)
    if xi == 0.0:
        raise ValueError("no boundary strip at xi = 0")
    return 1.0 - _boundary_cauchy(s, math.copysign(1, xi)) / (1j * xi)


def omega_minus(s, xi):
    """Boundary value of ``omega`` at ``lam = -1 - i*s*xi`` approached from the left."""
    xi = float(xi)
    if xi == 0.0:
        raise ValueError("no boundary strip at xi = 0")
    return 1.0 - _boundary_cauchy(s, -math.copysign(1, xi)) / (1j * xi)


def omega_prime_lambda(lam, xi, *, grid: Grid = DEFAULT_GRID, method: str = "auto"):
    """``d omega / d lam`` at real ``lam`` from the identity
    ``1 = (xi**2/2) omega' + (1 + lam)(1 - omega)``.

    At ``lam = -1`` the boundary value ``2/xi**2`` is returned (the identity
    with the ``(1 + lam)`` term vanishing).
    """
    lam = float(lam)
    xi = float(xi)
    if xi == 0.0:
        return 1.0 / (1.0 + lam) ** 2
    if lam == -1.0:
        return 2.0 / xi**2
    om = omega(lam, xi, grid=grid, method=method).real
    return 2.0 * (1.0 - (1.0 + lam) * (1.0 - om)) / xi**2


def _is_boundary(xi):
    return abs(abs(xi) - SQRT_PI) <= BOUNDARY_TOL


def lambda_star(xi, *, grid: Grid = DEFAULT_GRID, method: str = "auto"):
    """Discrete eigenvalue ``lambda_star(xi)`` in ``(-1, 0]``, or ``None``.

    ``None`` is returned for ``|xi| >= sqrt(pi)``; see :func:`dispersion_point`
    for the boundary flag.  The root is bracketed on
    ``(-1 + ROOT_BRACKET_OFFSET, 0]``, narrowed by bisection and polished by
    Newton steps until ``|omega| < ROOT_TOL``.
    """
    xi = abs(float(xi))
    if xi == 0.0:
        return 0.0
    if xi >= SQRT_PI or _is_boundary(xi):
        return None

    def f(lam):
        return omega(lam, xi, grid=grid, method=method).real

    lo, hi = -1.0 + ROOT_BRACKET_OFFSET, 0.0
    flo, fhi = f(lo), f(hi)
    if fhi == 0.0:
        return 0.0
    if flo * fhi > 0:
        raise BracketError(f"no sign change for xi={xi}: omega({lo})={flo}, omega(0)={fhi}")
    while hi - lo > 1e-6:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    lam = 0.5 * (lo + hi)
    for _ in range(50):
        val = f(lam)
        if abs(val) < ROOT_TOL:
            break
        step = val / omega_prime_lambda(lam, xi, grid=grid, method=method)
        new = lam - step
        if not lo <= new <= hi:
            new = 0.5 * (lo + hi)
        if (val < 0) == (flo < 0):
            lo = lam
        else:
            hi = lam
        if new == lam:
            break
        lam = new
    return lam


def implicit_residual(lam, xi, *, relative: bool = False):
    """Residual of the erf form of the implicit eigenvalue equation.

    Returns ``|exp(-z**2) - (sqrt(pi)/xi)(sgn xi - erf z)|`` with
    ``z = (lam + 1)/xi``.  With ``relative=True`` the equation is divided by
    ``exp(-z**2)`` first (``erfcx`` form), which keeps it informative when
    ``z`` is large.
    """
    xi = float(xi)
    if xi == 0.0:
        raise ValueError("implicit equation undefined at xi = 0")
    z = (float(lam) + 1.0) / xi
    sgn = math.copysign(1.0, xi)
    if relative:
        return abs(1.0 - (SQRT_PI / xi) * sgn * special.erfcx(sgn * z))
    return abs(math.exp(-z * z) - (SQRT_PI / xi) * (sgn - special.erf(z)))


def lambda_star_curve(xi, iterations: int = 60):
    """Vectorized ``lambda_star`` from the erfcx form of the implicit equation.

    Entries with ``|xi| >= sqrt(pi)`` are NaN.  Used for dense scans where a
    per-point grid-quadrature root would be wasteful.
    """
    xi = np.abs(np.asarray(xi, dtype=float))
    out = np.full(xi.shape, np.nan)
    ok = (xi > 0) & (xi < SQRT_PI)
    out[xi == 0] = 0.0
    x = xi[ok]
    lo = np.full(x.shape, -1.0 + 1e-15)
    hi = np.zeros(x.shape)
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        g = 1.0 - (SQRT_PI / x) * special.erfcx((1.0 + mid) / x)
        neg = g < 0
        lo = np.where(neg, mid, lo)
        hi = np.where(neg, hi, mid)
    lam = 0.5 * (lo + hi)
    for _ in range(3):
        a = (1.0 + lam) / x
        e = special.erfcx(a)
        g = 1.0 - (SQRT_PI / x) * e
        dg = 2.0 / x**2 - 2.0 * a * SQRT_PI * e / x**2
        lam = np.clip(lam - g / dg, lo, hi)
    out[ok] = lam
    return out


def series_coefficients(terms: int):
    """Exact coefficients ``a_2, a_4, ..., a_{2J}`` of the even expansion of
    ``lambda_star`` about ``xi = 0``."""
    if terms < 1:
        raise ValueError("need at least one term")
    a = [Fraction(0), Fraction(-1, 2)]
    for j in range(2, terms + 1):
        a.append(sum((2 * r - 1) * a[r] * a[j - r] for r in range(1, j)))
    return a[1:]


def lambda_star_series(xi, terms: int = 12):
    """Partial sum of the ``lambda_star`` power series.

    The coefficients grow factorially, so the series is asymptotic rather
    than convergent; accuracy is best for ``|xi| <= SERIES_XI_CAP`` and a
    :class:`SeriesRangeWarning` is issued outside it.
    """
    if not 1 <= terms <= SERIES_MAX_TERMS:
        raise ValueError(f"terms must be in [1, {SERIES_MAX_TERMS}]")
    if abs(xi) > SERIES_XI_CAP:
        warnings.warn(
            f"series used at |xi|={abs(xi)} beyond validated cap {SERIES_XI_CAP}",
            SeriesRangeWarning,
            stacklevel=2,
        )
    coeffs = [float(c) for c in series_coefficients(terms)]
    x2 = float(xi) ** 2
    return float(sum(c * x2 ** (j + 1) for j, c in enumerate(coeffs)))


def series_optimal_terms(xi) -> int:
    """Term count that stops before the smallest term ``|a_{2k} xi^{2k}|``
    (optimal truncation of the asymptotic series)."""
    x2 = float(xi) ** 2
    if x2 == 0:
        return 1
    mags = [abs(float(c)) * x2 ** (j + 1) for j, c in enumerate(series_coefficients(SERIES_MAX_TERMS))]
    return max(1, int(np.argmin(mags)))


def _ode_rhs(xi, lam):
    return xi / (2.0 * lam) + lam / xi + 1.0 / xi


def lambda_star_ode_check(xi_start, xi_end, *, step: float = 1e-4, checkpoints: int = 100,
                          grid: Grid = DEFAULT_GRID):
    """Transport ``lambda_star`` along ``d lam/d xi = xi/(2 lam) + lam/xi + 1/xi``
    with classical RK4 and return the largest deviation from the root finder.

    The root finder is consulted at ``checkpoints`` evenly spaced stations and
    at the end point.
    """
    if not 0 < xi_start <= xi_end < SQRT_PI:
        raise ValueError("need 0 < xi_start <= xi_end < sqrt(pi)")
    if xi_end == xi_start:
        return 0.0
    n = max(1, int(math.ceil((xi_end - xi_start) / step)))
    h = (xi_end - xi_start) / n
    every = max(1, n // checkpoints)
    lam = lambda_star(xi_start, grid=grid)
    x = xi_start
    worst = 0.0
    for i in range(1, n + 1):
        k1 = _ode_rhs(x, lam)
        k2 = _ode_rhs(x + h / 2, lam + h / 2 * k1)
        k3 = _ode_rhs(x + h / 2, lam + h / 2 * k2)
        k4 = _ode_rhs(x + h, lam + h * k3)
        lam = lam + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        x = xi_start + i * h
        if not (-1.0 < lam < 0.0) or not math.isfinite(lam):
            raise StepRejectedError(f"ODE transport left (-1, 0) at xi={x:.6f}")
        if i % every == 0 or i == n:
            worst = max(worst, abs(lam - lambda_star(x, grid=grid)))
    return worst


def _omega_real(lam, xi, grid, method):
    return omega(lam, xi, grid=grid, method=method).real


def heat_residual(lam, tau, *, step: float = 1e-4, grid: Grid = DEFAULT_GRID,
                  method: str = "auto"):
    """Finite-difference residual of ``d_tau omega = -(1/4) d_lamlam omega`` at
    ``xi = sqrt(tau)``."""
    if lam <= -1 + 1e-2 or tau < 1e-2:
        raise ValueError("need lam > -0.99 and tau >= 0.01")
    f = lambda l, t: _omega_real(l, math.sqrt(t), grid, method)  # noqa: E731
    d_tau = (f(lam, tau + step) - f(lam, tau - step)) / (2 * step)
    d_ll = (f(lam + step, tau) - 2 * f(lam, tau) + f(lam - step, tau)) / step**2
    return abs(d_tau + 0.25 * d_ll)


def omega_xi_ode_residual(lam, xi, *, step: float = 1e-4, grid: Grid = DEFAULT_GRID,
                          method: str = "auto"):
    """Finite-difference residual of the first-order ODE satisfied by
    ``omega`` in ``xi`` at fixed real ``lam``."""
    if lam <= -1 or xi < 0.1:
        raise ValueError("need lam > -1 and xi >= 0.1")
    f = lambda x: _omega_real(lam, x, grid, method)  # noqa: E731
    a = 1.0 + lam
    d_xi = (f(xi + step) - f(xi - step)) / (2 * step)
    lhs = d_xi + (1.0 / xi + 2 * a * a / xi**3) * f(xi)
    rhs = 1.0 / xi + 2 * lam * a / xi**3
    return abs(lhs - rhs)


def omega_integral_form(lam, xi):
    """``omega`` at real ``lam > -1``, ``xi > 0`` from the integrated ``xi``-ODE
    with initial value ``omega(lam, 0) = 1 - 1/(1 + lam)``."""
    a = 1.0 + lam
    if a <= 0 or xi <= 0:
        raise ValueError("need lam > -1 and xi > 0")
    # exp(a^2/xi^2) * exp(-a^2/t^2) is combined to avoid overflow
    integrand = lambda t: math.exp(a * a / xi**2 - a * a / t**2) * (1 + 2 * lam * a / t**2)  # noqa: E731
    val, _ = integrate.quad(integrand, 0.0, xi, epsabs=1e-14, epsrel=1e-13, limit=200)
    return val / xi


def dispersion_point(xi, *, grid: Grid = DEFAULT_GRID) -> DispersionPoint:
    """Eigenvalue, ``omega'`` and cross-route residuals at one frequency."""
    xi = float(xi)
    if _is_boundary(xi):
        return DispersionPoint(xi, None, 2.0 / math.pi, boundary=True)
    lam = lambda_star(xi, grid=grid)
    if lam is None:
        return DispersionPoint(xi, None, None)
    residuals = {"root": abs(omega(lam, xi, grid=grid)) if xi else 0.0}
    if xi != 0.0:
        residuals["implicit"] = implicit_residual(lam, xi, relative=True)
        omp = -2.0 * lam / xi**2
    else:
        omp = 1.0
    if abs(xi) <= SERIES_XI_CAP:
        residuals["series"] = abs(lambda_star_series(xi) - lam)
    return DispersionPoint(xi, lam, omp, route_residuals=residuals)
