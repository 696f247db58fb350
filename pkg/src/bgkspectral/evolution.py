"""Time evolution per Fourier mode, grossly determined solutions and decay
diagnostics.

Each mode solves ``df/dt = L_xi f``.  Two propagators are provided:

* spectral: ``f(t) = e^{-t} U*_xi(e^{-i xi lam t} B_xi f0) + e^{lambda_star t} P f0``
* direct: classical RK4 on the grid ODE, with a half-step Richardson estimate.

The direct integrator is the arbiter when the two disagree.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy import integrate

from . import dispersion
from .gft import adjoint_U, forward_B
from .numerics import SQRT_PI, Grid, GridFunction, moment, norm_w
from .spectral import check_resonance, discrete_mode

DEFAULT_DT = 0.01
#: Richardson error per unit time (relative to ||f0||) above which a run is rejected
RICHARDSON_TOL = 1e-6
#: margin above lambda_star(xi0) allowed for the truncated-GDS decay rate
TRUNCATION_EPS = 0.05
MIN_FIT_SAMPLES = 5
METHODS = ("spectral", "direct", "both")


class StepSizeError(RuntimeError):
    """The Richardson estimate of the direct integrator exceeds tolerance."""


class FitError(ValueError):
    """Too few samples in the tail window for a rate fit."""


@dataclass(frozen=True)
class EvolutionConfig:
    xi_list: tuple
    times: tuple
    dt: float = DEFAULT_DT
    method: str = "both"
    experimental_resonance: bool = False

    def __post_init__(self):
        object.__setattr__(self, "xi_list", tuple(float(x) for x in self.xi_list))
        object.__setattr__(self, "times", tuple(float(t) for t in self.times))
        if not self.xi_list:
            raise ValueError("xi_list is empty")
        if not self.times or any(t < 0 for t in self.times):
            raise ValueError("times must be a non-empty list of t >= 0")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("times must be strictly increasing")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if not self.experimental_resonance:
            for xi in self.xi_list:
                check_resonance(xi)


@dataclass(frozen=True)
class DirectResult:
    solution: GridFunction
    error_estimate: float  # Richardson estimate per unit time, relative to ||f0||
    steps: int


@dataclass(frozen=True)
class GDSCoefficient:
    xi: float
    mu0: complex


@dataclass(frozen=True)
class FitResult:
    rate: float
    intercept: float
    residual: float  # rms of the log-norm residual
    window: tuple


@dataclass
class DecayReport:
    xi_list: tuple
    times: tuple
    quadrature: str
    per_xi: dict  # xi -> array of ||f(t) - g(t)||_{L2_w}
    per_xi_fit: dict  # xi -> FitResult
    aggregate: dict  # "l2", "h1", "hm1" -> arrays over times
    aggregate_fit: FitResult | None
    reference_rate: float
    rate_tolerance: float
    truncated: dict = field(default_factory=dict)
    lambda_norm_deviation: float = 0.0
    oracle_disagreement: float = 0.0
    transient_window: tuple = ()


# ---------------------------------------------------------------- propagators

def _rk4_steps(mult, hw, y, step, count):
    def rhs(u):
        return mult * u + np.dot(u, hw)

    for _ in range(count):
        k1 = rhs(y)
        k2 = rhs(y + 0.5 * step * k1)
        k3 = rhs(y + 0.5 * step * k2)
        k4 = rhs(y + step * k3)
        y = y + (step / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return y


def integrate_direct(xi, f0: GridFunction, t, *, dt=DEFAULT_DT, check=True) -> DirectResult:
    """RK4 from 0 to ``t`` with at most ``dt`` per step, plus a Richardson
    estimate from a second run at half the step."""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    if t == 0:
        return DirectResult(f0, 0.0, 0)
    grid = f0.grid
    steps = max(1, math.ceil(t / dt - 1e-9))
    step = t / steps
    mult = -(1.0 + 1j * grid.nodes * xi)
    hw = grid.spacing * grid.weights
    coarse = _rk4_steps(mult, hw, f0.values, step, steps)
    fine = _rk4_steps(mult, hw, f0.values, 0.5 * step, 2 * steps)
    scale = norm_w(f0) or 1.0
    diff = norm_w(GridFunction(grid, coarse - fine))
    estimate = diff * 16.0 / 15.0 / scale / t
    if check and estimate > RICHARDSON_TOL:
        raise StepSizeError(f"Richardson estimate {estimate:.2e} per unit time at xi={xi}, dt={step}")
    return DirectResult(GridFunction(grid, coarse), estimate, steps)


def propagate_direct(xi, f0: GridFunction, t, *, dt=DEFAULT_DT) -> GridFunction:
    return integrate_direct(xi, f0, t, dt=dt).solution


def direct_trajectory(xi, f0: GridFunction, times, *, dt=DEFAULT_DT):
    """Direct solution at each of the increasing ``times``; also returns the
    largest Richardson estimate over the segments."""
    out, worst = [], 0.0
    current, t_prev = f0, 0.0
    for t in times:
        res = integrate_direct(xi, current, t - t_prev, dt=dt)
        current, t_prev = res.solution, t
        worst = max(worst, res.error_estimate)
        out.append(current)
    return out, worst


def spectral_trajectory(xi, f0: GridFunction, times):
    """Spectral solution at each time; the transforms are computed once."""
    xi = float(xi)
    check_resonance(xi)
    grid = f0.grid
    amps = forward_B(xi, f0)
    mode = discrete_mode(xi, grid)
    coeff = 0j if mode is None else mode.coefficient(f0)
    lam = grid.nodes
    out = []
    for t in times:
        if t < 0:
            raise ValueError(f"t must be >= 0, got {t}")
        phase = np.exp((-1.0 - 1j * xi * lam) * t)
        f = adjoint_U(xi, amps * phase)
        if mode is not None:
            f = f + (math.exp(mode.lambda_star * t) * coeff) * mode.e1
        out.append(f)
    return out


def propagate_spectral(xi, f0: GridFunction, t) -> GridFunction:
    return spectral_trajectory(xi, f0, [t])[0]


def lambda_representation_deviation(xi, f0: GridFunction, times) -> float:
    """max over t of | ||B f(t)|| / (e^{-t} ||B f0||) - 1 | for the spectral
    solution; the continuous amplitudes must decay exactly as e^{-t}."""
    b0 = norm_w(forward_B(xi, f0))
    if b0 == 0:
        return 0.0
    worst = 0.0
    for t, f in zip(times, spectral_trajectory(xi, f0, times)):
        worst = max(worst, abs(norm_w(forward_B(xi, f)) / (math.exp(-t) * b0) - 1.0))
    return worst


# ------------------------------------------------------------ grossly determined

def gds_coefficient(xi, f0: GridFunction) -> GDSCoefficient:
    mode = discrete_mode(xi, f0.grid)
    return GDSCoefficient(float(xi), 0j if mode is None else mode.coefficient(f0))


def gds(xi, f0: GridFunction, t) -> GridFunction:
    """Discrete-mode part of the flow, ``e^{lambda_star t} mu0 e1``; zero for
    ``|xi| > sqrt(pi)``."""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    mode = discrete_mode(xi, f0.grid)
    if mode is None:
        return GridFunction(f0.grid, np.zeros(f0.grid.n))
    return (math.exp(mode.lambda_star * t) * mode.coefficient(f0)) * mode.e1


def gds_truncated(xi, xi0, f0: GridFunction, t) -> GridFunction:
    """``gds`` for ``|xi| <= xi0`` and zero otherwise."""
    if not 0 < xi0 < SQRT_PI:
        raise ValueError(f"xi0 must lie in (0, sqrt(pi)), got {xi0}")
    if abs(xi) <= xi0:
        return gds(xi, f0, t)
    check_resonance(xi)
    return GridFunction(f0.grid, np.zeros(f0.grid.n))


def projector_norm(xi, grid: Grid) -> float:
    """``||P(xi)|| = ||e1|| ||e1bar|| / |omega'|``; grows as ``|xi| -> sqrt(pi)``."""
    mode = discrete_mode(xi, grid)
    if mode is None:
        return 0.0
    return norm_w(mode.e1) * norm_w(mode.e1bar) / abs(mode.omega_prime)


# ------------------------------------------------------------------- fitting

def tail_window(times):
    t_max = max(times)
    return (0.5 * t_max, t_max)


def fit_decay_rate(times, values, window=None) -> FitResult:
    """Least-squares slope of ``log(values)`` against ``t`` over ``window``
    (default ``[T/2, T]``)."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    lo, hi = tail_window(times) if window is None else window
    sel = (times >= lo - 1e-12) & (times <= hi + 1e-12) & (values > 0)
    if sel.sum() < MIN_FIT_SAMPLES:
        raise FitError(f"{sel.sum()} samples in window [{lo}, {hi}], need {MIN_FIT_SAMPLES}")
    t, y = times[sel], np.log(values[sel])
    coef, res, *_ = np.polyfit(t, y, 1, full=True)
    rms = math.sqrt(res[0] / t.size) if res.size else 0.0
    return FitResult(float(coef[0]), float(coef[1]), rms, (float(lo), float(hi)))


def aggregate_norms(xi_list, per_xi_sq):
    """Trapezoid quadrature over ``xi`` of squared norms with ``(1+xi^2)^s``
    weights, ``s`` in {0, 1, -1}; a single mode is returned unweighted."""
    xi = np.asarray(xi_list, dtype=float)
    sq = np.asarray(per_xi_sq, dtype=float)  # shape (n_xi, n_t)
    order = np.argsort(xi)
    xi, sq = xi[order], sq[order]
    out = {}
    for key, s in (("l2", 0), ("h1", 1), ("hm1", -1)):
        wts = (1.0 + xi**2) ** s
        if xi.size == 1:
            out[key] = np.sqrt(sq[0] * wts[0])
        else:
            out[key] = np.sqrt(integrate.trapezoid(sq * wts[:, None], xi, axis=0))
    return out


# ------------------------------------------------------------------- reports

def _initial(f0_family, xi):
    return f0_family[xi] if isinstance(f0_family, Mapping) else f0_family(xi)


def _solve_mode(config: EvolutionConfig, xi, f0):
    """Trajectory used for diagnostics plus the spectral/direct disagreement."""
    spectral = direct = None
    if config.method in ("spectral", "both"):
        spectral = spectral_trajectory(xi, f0, config.times)
    if config.method in ("direct", "both"):
        direct, _ = direct_trajectory(xi, f0, config.times, dt=config.dt)
    gap = 0.0
    if spectral is not None and direct is not None:
        scale = norm_w(f0) or 1.0
        gap = max(norm_w(a - b) for a, b in zip(spectral, direct)) / scale
    return (direct if direct is not None else spectral), gap


def _mode_report(config, xi, f0, xi0):
    traj, gap = _solve_mode(config, xi, f0)
    full, trunc = [], []
    for t, f in zip(config.times, traj):
        full.append(norm_w(f - gds(xi, f0, t)))
        if xi0 is not None:
            trunc.append(norm_w(f - gds_truncated(xi, xi0, f0, t)))
    lam_dev = 0.0 if config.method == "direct" else lambda_representation_deviation(xi, f0, config.times)
    return np.array(full), np.array(trunc), gap, lam_dev


def decay_report(config: EvolutionConfig, f0_family, *, xi0=None, window=None,
                 eps=TRUNCATION_EPS, workers: int | None = None) -> DecayReport:
    """Distance to the grossly determined solution per mode and aggregated
    over ``xi``, with fitted exponential rates.

    ``window`` defaults to ``[T/2, T]``.  With ``xi0`` the distance to the
    truncated GDS is aggregated too and compared with ``lambda_star(xi0) + eps``.
    """
    xis = config.xi_list

    def task(xi):
        return _mode_report(config, xi, _initial(f0_family, xi), xi0)

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(task, xis))
    else:
        results = [task(xi) for xi in xis]

    per_xi = {xi: r[0] for xi, r in zip(xis, results)}
    per_xi_fit = {}
    for xi, series in per_xi.items():
        try:
            per_xi_fit[xi] = fit_decay_rate(config.times, series, window)
        except FitError:
            if window is not None:
                raise
    agg = aggregate_norms(xis, [r[0] ** 2 for r in results])
    try:
        agg_fit = fit_decay_rate(config.times, agg["l2"], window)
    except FitError:
        if window is not None:
            raise
        agg_fit = None

    truncated = {}
    if xi0 is not None:
        t_agg = aggregate_norms(xis, [r[1] ** 2 for r in results])
        reference = dispersion.lambda_star(xi0) + eps
        fit = fit_decay_rate(config.times, t_agg["l2"], window)
        truncated = {"xi0": xi0, "eps": eps, "aggregate": t_agg, "fit": fit,
                     "reference_rate": reference, "passed": fit.rate <= reference}

    return DecayReport(
        xi_list=xis,
        times=config.times,
        quadrature="trapezoid over sorted xi_list" if len(xis) > 1 else "single mode",
        per_xi=per_xi,
        per_xi_fit=per_xi_fit,
        aggregate=agg,
        aggregate_fit=agg_fit,
        reference_rate=-1.0,
        rate_tolerance=0.01,
        truncated=truncated,
        lambda_norm_deviation=max(r[3] for r in results),
        oracle_disagreement=max(r[2] for r in results),
        transient_window=(0.0, (window or tail_window(config.times))[0]),
    )


def contraction_check(config: EvolutionConfig, f0_family) -> dict:
    """Largest ``||f(t)|| / ||f0||`` per mode and for the aggregate, using the
    direct integrator."""
    per_xi, sq0, sqt = {}, [], []
    for xi in config.xi_list:
        f0 = _initial(f0_family, xi)
        traj, _ = direct_trajectory(xi, f0, config.times, dt=config.dt)
        n0 = norm_w(f0)
        nt = np.array([norm_w(f) for f in traj])
        per_xi[xi] = float(np.max(nt) / n0) if n0 > 0 else 0.0
        sq0.append(np.full(len(config.times), n0**2))
        sqt.append(nt**2)
    agg0 = aggregate_norms(config.xi_list, sq0)["l2"]
    aggt = aggregate_norms(config.xi_list, sqt)["l2"]
    aggregate = float(np.max(aggt / agg0)) if np.all(agg0 > 0) else 0.0
    return {"per_xi": per_xi, "aggregate": aggregate, "max": max(max(per_xi.values()), aggregate)}


def mass_rate_residual(xi, f0: GridFunction, t, *, dt=DEFAULT_DT, h=1e-3) -> float:
    """|d rho/dt + i xi (v f, 1)_w| at ``t`` by central differences of the
    direct solution, where ``rho = (f, 1)_w``."""
    fm = propagate_direct(xi, f0, t - h, dt=dt)
    f = propagate_direct(xi, fm, h, dt=dt)
    fp = propagate_direct(xi, f, h, dt=dt)
    drho = (moment(fp) - moment(fm)) / (2 * h)
    return abs(drho + 1j * xi * moment(f * f.grid.nodes))


# ------------------------------------------------------------ Chapman-Enskog

@dataclass(frozen=True)
class ChapmanEnskogGap:
    times: np.ndarray
    gap: np.ndarray
    t_gap: np.ndarray
    slope: float
    variation: float  # (max - min) / max of t*gap


def chapman_enskog_gap(t_list, *, points: int = 20001) -> ChapmanEnskogGap:
    """sup over a fine ``xi`` grid in ``(-sqrt(pi), sqrt(pi))`` of
    ``|exp(lambda_star t) - exp(-xi^2 t / 2)|``.  The integrand is even in
    ``xi``, so only ``[0, sqrt(pi))`` is sampled."""
    times = np.asarray(t_list, dtype=float)
    if np.any(times <= 0):
        raise ValueError("times must be positive")
    xi = np.linspace(0.0, SQRT_PI, points)[:-1]
    lam = dispersion.lambda_star_curve(xi)
    gap = np.array([np.max(np.abs(np.exp(lam * t) - np.exp(-0.5 * xi**2 * t))) for t in times])
    tg = times * gap
    slope = float(np.polyfit(np.log(times), np.log(gap), 1)[0]) if times.size > 1 else float("nan")
    variation = float((tg.max() - tg.min()) / tg.max())
    return ChapmanEnskogGap(times, gap, tg, slope, variation)


# ------------------------------------------------------------ spatial data

def spatial_to_modes(x, values, grid: Grid, *, experimental_resonance=False):
    """Fourier modes of ``f(x, v)`` sampled on a uniform periodic ``x`` grid.

    ``values`` has shape ``(len(x), grid.n)``.  Returns the frequencies and a
    mapping ``xi -> GridFunction`` with ``f_hat(xi) = dx sum_x f(x) e^{-i xi x}``.
    """
    x = np.asarray(x, dtype=float)
    values = np.asarray(values)
    if values.shape != (x.size, grid.n):
        raise ValueError(f"expected shape {(x.size, grid.n)}, got {values.shape}")
    dx = x[1] - x[0]
    xi = 2 * np.pi * np.fft.fftfreq(x.size, dx)
    phase = np.exp(-1j * xi * x[0])[:, None]
    hat = dx * np.fft.fft(values, axis=0) * phase
    if not experimental_resonance:
        for k in xi:
            check_resonance(k)
    return xi, {float(k): GridFunction(grid, hat[i]) for i, k in enumerate(xi)}


def modes_to_spatial(x, modes: Mapping, grid: Grid):
    """Inverse of :func:`spatial_to_modes`."""
    x = np.asarray(x, dtype=float)
    dx = x[1] - x[0]
    xi = 2 * np.pi * np.fft.fftfreq(x.size, dx)
    hat = np.array([modes[float(k)].values for k in xi])
    hat = hat / np.exp(-1j * xi * x[0])[:, None]
    return np.fft.ifft(hat, axis=0) / dx


def aggregate_spatial_l2(modes: Mapping, length: float) -> float:
    """``||f||_{L2(x; L2_w)}`` from the modes by the discrete Parseval identity
    for a periodic box of the given length."""
    return math.sqrt(sum(norm_w(f) ** 2 for f in modes.values()) / length)

