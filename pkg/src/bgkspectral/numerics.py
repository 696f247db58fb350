"""Grids, the Maxwellian weight, special functions and weighted quadrature.

All velocity-side and spectral-side functions live on one symmetric uniform
grid.  Node convention: ``v_j = -L + j*h`` for ``j = 0..N-1`` with ``h = 2L/N``,
so the grid contains ``-L`` and ``0`` but not ``+L``.  Every node except
``-L`` has its mirror image on the grid (``v_{N-j} = -v_j``); the unpaired
endpoint carries weight ``w(L) ~ 1e-28`` and does not disturb odd symmetry.

The Sokhotski-Plemelj boundary values

    S_pm g(lam) = lim_{eta -> 0pm} int g(z) / (z - (lam + i*eta)) dz
                = p.v. int g(z) / (z - lam) dz  pm  i*pi*g(lam)

are computed from the principal value on the grid nodes with the
odd-offset discrete Hilbert kernel

    p.v. int g(z)/(z - v_j) dz  ~  sum_{k - j odd} 2 g_k / (k - j),

which is spectrally accurate for analytic, Gaussian-decaying integrands.
The discrete convolution is evaluated exactly by FFT on a zero-padded
circulant of length 2N, so no periodic wrap-around enters the result.
"""

from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft
from scipy import integrate, special

SQRT_PI = math.sqrt(math.pi)

#: relative edge amplitude above which ``plemelj`` warns about truncation
LEAKAGE_TOL = 1e-10


class GridMismatchError(ValueError):
    """Two grid functions on different grids were combined."""


class BoundaryLeakageWarning(RuntimeWarning):
    """Input to a Cauchy transform does not decay at the grid edge."""


@dataclass(frozen=True)
class Grid:
    """Symmetric uniform grid on ``[-L, L)`` shared by ``v`` and ``lambda``."""

    half_width: float = 8.0
    n: int = 4096

    def __post_init__(self):
        if self.n < 4 or self.n % 2:
            raise ValueError(f"point count must be even and >= 4, got {self.n}")
        if not self.half_width > 0:
            raise ValueError(f"half width must be positive, got {self.half_width}")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.n

    @property
    def nodes(self) -> np.ndarray:
        return _nodes(self.half_width, self.n)

    @property
    def weights(self) -> np.ndarray:
        """Maxwellian ``w`` sampled on the nodes (read-only)."""
        return _weights(self.half_width, self.n)

    def function(self, values) -> "GridFunction":
        return GridFunction(self, values)

    def constant(self, c=1.0) -> "GridFunction":
        return GridFunction(self, np.full(self.n, c, dtype=complex))

    def identity(self) -> "GridFunction":
        """The coordinate function ``v -> v``."""
        return GridFunction(self, self.nodes)


@functools.lru_cache(maxsize=16)
def _nodes(half_width, n):
    v = -half_width + (2.0 * half_width / n) * np.arange(n)
    v[n // 2] = 0.0
    v.flags.writeable = False
    return v


@functools.lru_cache(maxsize=16)
def _weights(half_width, n):
    w = weight(_nodes(half_width, n))
    w.flags.writeable = False
    return w


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Complex samples of a function on a :class:`Grid`.

    Arithmetic with scalars and with other grid functions on the *same* grid
    is supported; mixing grids raises :class:`GridMismatchError`.
    """

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.array(self.values, dtype=complex)
        if vals.shape != (self.grid.n,):
            raise ValueError(f"expected {self.grid.n} samples, got shape {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise FloatingPointError("grid function has non-finite samples")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    def _other(self, other):
        if isinstance(other, GridFunction):
            if other.grid != self.grid:
                raise GridMismatchError(f"{self.grid} vs {other.grid}")
            return other.values
        return other

    def __add__(self, other):
        return GridFunction(self.grid, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return GridFunction(self.grid, self.values - self._other(other))

    def __rsub__(self, other):
        return GridFunction(self.grid, self._other(other) - self.values)

    def __mul__(self, other):
        return GridFunction(self.grid, self.values * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return GridFunction(self.grid, self.values / self._other(other))

    def __neg__(self):
        return GridFunction(self.grid, -self.values)

    def conj(self):
        return GridFunction(self.grid, self.values.conj())

    def __len__(self):
        return self.grid.n

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)


@dataclass(frozen=True)
class WeightedNorms:
    l2w: float
    h1w: float


def weight(v):
    """Maxwellian weight ``exp(-v**2)/sqrt(pi)``."""
    return np.exp(-np.square(v)) / SQRT_PI


def dawson(x):
    """Dawson's integral ``D(x) = exp(-x**2) int_0^x exp(t**2) dt``."""
    return special.dawsn(x)


def pv_weight(lam):
    """Principal value ``p.v. int w(v)/(v - lam) dv``, equal to ``-2 D(lam)``."""
    return -2.0 * dawson(lam)


def pv_quad(func, lam, cutoff=12.0):
    """Principal value of ``int func(v)/(v - lam) dv`` by singularity subtraction.

    Slow adaptive-quadrature reference used only for verification: on the
    symmetric window ``|v - lam| < cutoff`` the principal value equals the
    regular integral of ``(func(v) - func(lam))/(v - lam)``.
    """
    f0 = func(lam)

    def regular(v):
        return f0 * 0.0 if v == lam else (func(v) - f0) / (v - lam)

    val, _ = integrate.quad(regular, lam - cutoff, lam + cutoff, points=[lam],
                            epsabs=1e-14, epsrel=1e-13, limit=400)
    return val


@functools.lru_cache(maxsize=8)
def _hilbert_kernel_fft(n):
    # c_j = sum_k g_k K[j - k] with K[d] = -2/d for odd d; K depends on n only
    size = 2 * n
    d = np.arange(n)
    pos = np.where(d % 2 == 1, -2.0 / np.maximum(d, 1), 0.0)
    ker = np.zeros(size)
    ker[:n] = pos
    ker[size - n + 1:] = -pos[1:][::-1]
    out = sfft.fft(ker)
    out.flags.writeable = False
    return out


def principal_value(g: GridFunction) -> GridFunction:
    """``p.v. int g(z)/(z - lam) dz`` at every node ``lam``."""
    n = g.grid.n
    padded = np.zeros(2 * n, dtype=complex)
    padded[:n] = g.values
    conv = sfft.ifft(sfft.fft(padded) * _hilbert_kernel_fft(n))[:n]
    return GridFunction(g.grid, conv)


def plemelj(g: GridFunction, side: int) -> GridFunction:
    """Boundary value ``S_side g`` of the Cauchy transform, ``side`` in {+1, -1}.

    ``S_+ - S_- = 2*pi*i*g`` holds exactly.  ``g`` must decay at the grid
    edge; a :class:`BoundaryLeakageWarning` is issued otherwise.
    """
    if side not in (1, -1):
        raise ValueError(f"side must be +1 or -1, got {side!r}")
    vals = g.values
    peak = np.max(np.abs(vals))
    edge = max(abs(vals[0]), abs(vals[-1]))
    if peak > 0 and edge > LEAKAGE_TOL * peak:
        warnings.warn(
            f"Cauchy transform input not decayed at grid edge ({edge / peak:.2e} of max)",
            BoundaryLeakageWarning,
            stacklevel=2,
        )
    return principal_value(g) + side * 1j * math.pi * g


def _check_same(f: GridFunction, g: GridFunction):
    if f.grid != g.grid:
        raise GridMismatchError(f"{f.grid} vs {g.grid}")


def inner_w(f: GridFunction, g: GridFunction) -> complex:
    """Weighted inner product ``int f conj(g) w dv`` (trapezoid rule)."""
    _check_same(f, g)
    grid = f.grid
    return complex(grid.spacing * np.sum(f.values * g.values.conj() * grid.weights))


def moment(f: GridFunction) -> complex:
    """``(f, 1)_w = int f w dv``."""
    return complex(f.grid.spacing * np.sum(f.values * f.grid.weights))


def norm_w(f: GridFunction) -> float:
    return math.sqrt(max(inner_w(f, f).real, 0.0))


def norms(f: GridFunction) -> WeightedNorms:
    """Weighted ``L2`` norm and the ``H1`` norm from centered differences."""
    l2 = norm_w(f)
    df = GridFunction(f.grid, np.gradient(f.values, f.grid.spacing))
    return WeightedNorms(l2w=l2, h1w=math.sqrt(l2 * l2 + norm_w(df) ** 2))


def random_smooth(grid: Grid, rng: np.random.Generator, degree: int = 4) -> GridFunction:
    """Random complex polynomial plus a modulated bump; weighted-decaying."""
    v = grid.nodes
    c = rng.normal(size=(2, degree + 1))
    poly = np.polynomial.polynomial.polyval(v / 2.0, c[0] + 1j * c[1])
    a, k, s = rng.normal(size=3)
    bump = a * np.exp(-((v - 0.5 * s) ** 2) + 1j * k * v)
    return GridFunction(grid, poly + bump)
