"""Linearized operator ``L_xi``, its discrete eigenmode, Riesz projector and
resolvent.

    L_xi f = -(1 + i v xi) f + (f, 1)_w 1

is a multiplication operator plus the rank-one projection ``V = (., 1)_w 1``.
For ``|xi| < sqrt(pi)`` it has one isolated eigenvalue ``lambda_star(xi)``
with eigenvector ``e1 = 1/(i v xi + 1 + lambda_star)`` and adjoint
eigenvector ``e1bar = 1/(-i v xi + 1 + lambda_star)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import dispersion
from .numerics import SQRT_PI, Grid, GridFunction, inner_w, moment, plemelj

#: |xi| within this distance of sqrt(pi) is the resonant exclusion zone
RESONANCE_TOL = 1e-6
#: |omega| below this means lam is treated as the eigenvalue (pole of R)
POLE_TOL = 1e-8


class ResonanceError(ValueError):
    """``xi`` lies in the resonant exclusion zone ``|xi| = sqrt(pi)``."""


class PoleError(ValueError):
    """``lam`` is an eigenvalue or lies on the essential line."""


def is_resonant(xi) -> bool:
    return abs(abs(xi) - SQRT_PI) < RESONANCE_TOL


def check_resonance(xi):
    if is_resonant(xi):
        raise ResonanceError(f"xi={xi} is within {RESONANCE_TOL} of +-sqrt(pi)")


@dataclass(frozen=True, eq=False)
class Mode:
    """Discrete eigenpair of ``L_xi`` and its normalization ``omega'``."""

    xi: float
    lambda_star: float
    e1: GridFunction
    e1bar: GridFunction
    omega_prime: float

    @property
    def grid(self) -> Grid:
        return self.e1.grid

    def coefficient(self, f: GridFunction) -> complex:
        """Projector amplitude ``(f, e1bar)_w / omega'``."""
        return inner_w(f, self.e1bar) / self.omega_prime


def discrete_mode(xi, grid: Grid) -> Mode | None:
    """Eigenmode at ``xi``; ``None`` when ``|xi| > sqrt(pi)``."""
    xi = float(xi)
    check_resonance(xi)
    lam = dispersion.lambda_star(xi, grid=grid)
    if lam is None:
        return None
    v = grid.nodes
    e1 = GridFunction(grid, 1.0 / (1j * v * xi + 1.0 + lam))
    e1bar = GridFunction(grid, 1.0 / (-1j * v * xi + 1.0 + lam))
    omp = 1.0 if xi == 0.0 else -2.0 * lam / xi**2
    return Mode(xi, lam, e1, e1bar, omp)


def apply_L(xi, f: GridFunction) -> GridFunction:
    v = f.grid.nodes
    return GridFunction(f.grid, -(1.0 + 1j * v * xi) * f.values + moment(f))


def apply_L_adjoint(xi, f: GridFunction) -> GridFunction:
    """Adjoint in ``L2_w``: ``(i v xi - 1) f + (f, 1)_w 1``."""
    v = f.grid.nodes
    return GridFunction(f.grid, (1j * v * xi - 1.0) * f.values + moment(f))


def project(xi, f: GridFunction) -> GridFunction:
    """Riesz projection onto the discrete mode (zero when there is none)."""
    mode = discrete_mode(xi, f.grid)
    if mode is None:
        return GridFunction(f.grid, np.zeros(f.grid.n))
    return mode.coefficient(f) * mode.e1


def free_resolvent(lam, xi, g: GridFunction) -> GridFunction:
    """``R0 g = g / (-i v xi - 1 - lam)``."""
    v = g.grid.nodes
    denom = -1j * v * xi - 1.0 - lam
    return GridFunction(g.grid, g.values / denom)


def grid_omega(lam, xi, grid: Grid) -> complex:
    """``omega`` as ``1 + (R0 1, 1)_w`` on the grid, consistent with the
    discrete resolvent."""
    return 1.0 + moment(free_resolvent(lam, xi, grid.constant()))


def k_inverse_apply(lam, xi, g: GridFunction) -> GridFunction:
    """Inverse of ``K = I + V R0`` applied to ``g``; ``K^{-1} 1 = 1/omega``."""
    om = grid_omega(lam, xi, g.grid)
    if abs(om) < POLE_TOL:
        raise PoleError(f"|omega({lam}, {xi})| = {abs(om):.1e}")
    return g - moment(free_resolvent(lam, xi, g)) / om


def resolvent_apply(lam, xi, g: GridFunction) -> GridFunction:
    """``R(lam, xi) g = (L_xi - lam)^{-1} g`` by the rank-one formula
    ``R = R0 - R0 V K^{-1} V R0``."""
    lam = complex(lam)
    if xi != 0 and abs(lam.real + 1.0) < dispersion.ESSENTIAL_BAND:
        raise PoleError(f"lam={lam} on the essential line Re lam = -1")
    if xi == 0 and lam == -1:
        raise PoleError("lam = -1 is the essential spectrum of L_0")
    om = grid_omega(lam, xi, g.grid)
    if abs(om) < POLE_TOL:
        raise PoleError(f"lam={lam} is an eigenvalue (|omega| = {abs(om):.1e})")
    r0g = free_resolvent(lam, xi, g)
    r0one = free_resolvent(lam, xi, g.grid.constant())
    return r0g - (moment(r0g) / om) * r0one


def resonant_pairing(xi, f: GridFunction, *, experimental_resonance: bool = False) -> complex:
    """Pairing ``<f, e1bar>`` at ``xi = +-sqrt(pi)`` where ``e1 = +-1/(sqrt(pi) i v)``
    leaves ``L2_w``.

    Evaluated as the limit of ``(f, e1bar)_w`` from ``|xi| < sqrt(pi)``: the
    pole of ``e1`` reaches ``v = 0`` from the side ``sgn xi``, giving
    ``sgn(xi)/(i sqrt(pi)) * S_{sgn xi}(f w)(0)``.  Experimental; reported,
    never asserted.
    """
    if not experimental_resonance:
        raise ResonanceError("resonant pairing requires experimental_resonance=True")
    if not is_resonant(xi):
        raise ValueError("resonant pairing is only defined at |xi| = sqrt(pi)")
    sgn = 1 if xi > 0 else -1
    grid = f.grid
    boundary = plemelj(f * grid.weights, sgn).values[grid.n // 2]
    return complex(sgn * boundary / (1j * SQRT_PI))
