"""Generalized Fourier transforms diagonalizing ``L_xi`` on its continuous
spectrum, their adjoints, and the eigenfunction expansion.

For ``xi != 0`` and real ``lam`` (the point ``-1 - i*xi*lam`` of the
essential line), with ``sigma = BRANCH * sgn(xi)``::

    (B_xi f)(lam) = f(lam) - S_sigma(f w)(lam) / (-i xi conj(omega_-))
    (U_xi g)(lam) = g(lam) - S_sigma(g w)(lam) / ( i xi conj(omega_+))
    (U*_xi h)(v)  = h(v) - S_sigma(h w / omega_+)(v) / (i xi)
    (B*_xi h)(v)  = h(v) + S_sigma(h w / omega_-)(v) / (i xi)

where ``omega_+ = omega_plus(lam, xi)`` and ``conj(omega_-) =
conj(omega_minus(lam, -xi))``.  The same Cauchy side ``sigma`` must enter the
numerator and the denominator for ``B_xi`` to intertwine ``L_xi`` with
multiplication by ``-1 - i*xi*lam``.  ``BRANCH = -1`` makes the ``B_xi``
denominator non-vanishing for every ``xi != 0``, so only ``U_xi`` degenerates
at resonance; the expansion identity is checked for both signs of ``xi``.

At ``xi = 0`` the operator is ``-(I - V)``; the continuous part is
``(I - V) f`` and the discrete part is ``V f = (f, 1)_w 1``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .dispersion import omega_minus, omega_plus
from .numerics import GridFunction, inner_w, moment, plemelj
from .spectral import Mode, check_resonance, discrete_mode

#: Cauchy side relative to sgn(xi) used by every transform
BRANCH = -1
#: min |omega_+| over the grid below which forward_U warns
NEAR_RESONANCE_TOL = 1e-3


class NearResonanceWarning(RuntimeWarning):
    """``omega_+`` nearly vanishes on the grid; ``U_xi`` is ill-conditioned."""


@dataclass(frozen=True, eq=False)
class SpectralAmplitudes:
    xi: float
    continuous: GridFunction
    discrete: complex
    mode: Mode | None = None


def _side(xi):
    return BRANCH * (1 if xi > 0 else -1)


def _identity_minus_v(f: GridFunction) -> GridFunction:
    return f - moment(f)


def _denominator_B(xi, lam):
    # -i xi conj(omega_minus(lam, -xi)) == -(i xi - S_sigma w(lam))
    return -1j * xi * np.conj(omega_minus(lam, -xi))


def _denominator_U(xi, lam):
    return 1j * xi * np.conj(omega_plus(lam, xi))


def forward_B(xi, f: GridFunction) -> GridFunction:
    """``B_xi f`` sampled on the grid's ``lambda`` nodes."""
    xi = float(xi)
    if xi == 0.0:
        return _identity_minus_v(f)
    lam = f.grid.nodes
    s = plemelj(f * f.grid.weights, _side(xi))
    return f - s / _denominator_B(xi, lam)


def forward_U(xi, g: GridFunction) -> GridFunction:
    """``U_xi g`` sampled on the grid's ``lambda`` nodes."""
    xi = float(xi)
    if xi == 0.0:
        return _identity_minus_v(g)
    check_resonance(xi)
    lam = g.grid.nodes
    denom = _denominator_U(xi, lam)
    smallest = np.min(np.abs(denom)) / abs(xi)
    if smallest < NEAR_RESONANCE_TOL:
        warnings.warn(f"min |omega_+| = {smallest:.1e} at xi={xi}", NearResonanceWarning,
                      stacklevel=2)
    s = plemelj(g * g.grid.weights, _side(xi))
    return g - s / denom


def forward_lambda_U(xi, g: GridFunction, *, experimental_resonance: bool = False) -> GridFunction:
    """``lam * U_xi g``, which stays bounded at ``xi = +-sqrt(pi)``.

    Experimental: at resonance ``omega_+`` has a simple zero at ``lam = 0``
    that the factor ``lam`` cancels; the node ``lam = 0`` takes the limit
    value ``S(g w)(0) / 2``.
    """
    if not experimental_resonance:
        raise ValueError("lam*U_xi requires experimental_resonance=True")
    xi = float(xi)
    lam = g.grid.nodes
    denom = _denominator_U(xi, lam)
    s = plemelj(g * g.grid.weights, _side(xi)).values
    ratio = np.empty_like(s)
    zero = lam == 0.0
    ratio[~zero] = lam[~zero] / denom[~zero]
    # conj(-i xi omega_+) = -2 lam + O(lam^2) at resonance => lam/denom -> 1/2
    ratio[zero] = 0.5 if abs(abs(xi) - math.sqrt(math.pi)) < 1e-6 else 0.0
    return GridFunction(g.grid, lam * g.values - ratio * s)


def adjoint_U(xi, h: GridFunction) -> GridFunction:
    """``U*_xi h`` on the velocity nodes."""
    xi = float(xi)
    if xi == 0.0:
        return _identity_minus_v(h)
    check_resonance(xi)
    om = omega_plus(h.grid.nodes, xi)
    s = plemelj(h * (h.grid.weights / om), _side(xi))
    return h - s / (1j * xi)


def adjoint_B(xi, h: GridFunction) -> GridFunction:
    """``B*_xi h`` on the velocity nodes."""
    xi = float(xi)
    if xi == 0.0:
        return _identity_minus_v(h)
    om = omega_minus(h.grid.nodes, -xi)
    s = plemelj(h * (h.grid.weights / om), _side(xi))
    return h + s / (1j * xi)


def decompose(xi, f: GridFunction) -> SpectralAmplitudes:
    """Continuous amplitudes ``B_xi f`` and the discrete projector coefficient."""
    xi = float(xi)
    check_resonance(xi)
    mode = discrete_mode(xi, f.grid)
    coeff = 0j if mode is None else mode.coefficient(f)
    return SpectralAmplitudes(xi, forward_B(xi, f), coeff, mode)


def reconstruct(amps: SpectralAmplitudes) -> GridFunction:
    """``U*_xi`` of the continuous part plus ``discrete * e1``."""
    out = adjoint_U(amps.xi, amps.continuous)
    if amps.mode is not None:
        out = out + amps.discrete * amps.mode.e1
    return out


def continuous_pairing(xi, f: GridFunction, g: GridFunction) -> complex:
    """``int (B_xi f)(lam) conj((U_xi g)(lam)) w(lam) dlam``."""
    return inner_w(forward_B(xi, f), forward_U(xi, g))


def parseval(xi, f: GridFunction, g: GridFunction) -> complex:
    """Spectral side of the expansion identity; equals ``(f, g)_w``."""
    xi = float(xi)
    check_resonance(xi)
    total = continuous_pairing(xi, f, g)
    mode = discrete_mode(xi, f.grid)
    if mode is not None:
        total += mode.coefficient(f) * inner_w(mode.e1, g)
    return total
