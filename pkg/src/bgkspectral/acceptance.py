"""Acceptance suite: each criterion measures a quantity against a tolerance.

Every criterion function returns a :class:`Criterion` holding one
:class:`Check` per measured quantity; the criterion passes when all of its
checks pass.  ``run_all`` is used by ``bgk selftest`` and by the test suite.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import dispersion, evolution, gft, spectral
from .numerics import Grid, GridFunction, dawson, inner_w, norm_w, plemelj, random_smooth

PARSEVAL_XI = (0.0, 0.25, -0.25, 0.8, -0.8, 1.5, -1.5, 2.5, -2.5)
PROPAGATOR_XI = (0.25, 0.8, 1.5, 2.5)
PROPAGATOR_TIMES = (0.5, 1.0, 2.0, 5.0)


@dataclass
class Check:
    name: str
    measured: float
    tolerance: float
    passed: bool
    relation: str = "<"

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return f"{verdict}  {self.name}: {self.measured:.3e} {self.relation} {self.tolerance:.3e}"


@dataclass
class Criterion:
    number: int
    title: str
    checks: list = field(default_factory=list)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self):
        return [c for c in self.checks if not c.passed]

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        worst = self.failures or self.checks
        detail = "; ".join(f"{c.name}={c.measured:.3e} (tol {c.relation} {c.tolerance:.1e})" for c in worst)
        return f"[{verdict}] criterion {self.number:2d} {self.title} ({self.seconds:.1f}s): {detail}"


def _below(name, measured, tol):
    return Check(name, float(measured), tol, bool(measured < tol), "<")


def _at_most(name, measured, tol):
    return Check(name, float(measured), tol, bool(measured <= tol), "<=")


def _timed(number, title, body):
    start = time.perf_counter()
    checks = body()
    return Criterion(number, title, checks, time.perf_counter() - start)


def _pairs(grid, seed, count):
    rng = np.random.default_rng(seed)
    return [(random_smooth(grid, rng), random_smooth(grid, rng)) for _ in range(count)]


# ------------------------------------------------------------------ criteria

def criterion_1(grid: Grid | None = None, dawson_fn=dawson) -> Criterion:
    grid = grid or Grid()

    def body():
        lam = grid.nodes
        w = GridFunction(grid, grid.weights)
        sel = np.abs(lam) <= 4.0
        err = 0.0
        for side in (1, -1):
            exact = -2.0 * dawson_fn(lam) + side * 1j * math.pi * grid.weights
            err = max(err, np.max(np.abs(plemelj(w, side).values - exact)[sel]))
        return [_below("max |S_pm w - (-2D pm i pi w)|, |lam|<=4", err, 1e-8)]

    return _timed(1, "Dawson-Plemelj identity", body)


def criterion_2(grid: Grid | None = None) -> Criterion:
    grid = grid or Grid()
    xis = (0.1, 0.3, 0.5, 0.8, 1.2, 1.6)

    def body():
        root = implicit = series = 0.0
        for xi in xis:
            lam = dispersion.lambda_star(xi, grid=grid)
            root = max(root, abs(dispersion.omega(lam, xi, grid=grid)))
            implicit = max(implicit, dispersion.implicit_residual(lam, xi))
            if xi <= 0.5:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", dispersion.SeriesRangeWarning)
                    terms = dispersion.series_optimal_terms(xi)
                    series = max(series, abs(dispersion.lambda_star_series(xi, terms) - lam))
        ode = dispersion.lambda_star_ode_check(0.5, 1.5, grid=grid)
        edge = dispersion.lambda_star(1.772, grid=grid)
        limit = 0.0
        for xi in (1.0, 2.0, 3.0):
            val = dispersion.omega(-1.0 + 1e-6, xi, grid=grid).real
            limit = max(limit, abs(val - (1.0 - math.sqrt(math.pi) / xi)))
        return [
            _below("|omega(lambda*)|", root, 1e-10),
            _below("implicit erf residual", implicit, 1e-10),
            _below("series deviation, xi<=0.5 (optimal truncation)", series, 1e-8),
            _below("ODE transport deviation on [0.5,1.5]", ode, 1e-6),
            _below("lambda*(1.772)", edge, -0.99),
            _below("|omega(-1+0, xi) - (1 - sqrt(pi)/xi)|", limit, 1e-4),
        ]

    return _timed(2, "discrete spectrum, four routes", body)


def criterion_3(grid: Grid | None = None) -> Criterion:
    grid = grid or Grid()

    def body():
        a = dispersion.series_coefficients(3)
        exact = [Fraction(-1, 2), Fraction(1, 4), Fraction(-1, 2)]
        coeff_err = float(sum(abs(x - y) for x, y in zip(a, exact)))
        xi = np.linspace(0.0025, 0.1, 40)
        lam = np.array([dispersion.lambda_star(x, grid=grid) for x in xi])
        u = xi**2
        design = np.vstack([u**k for k in range(1, 7)]).T
        fit = np.linalg.lstsq(design, lam, rcond=None)[0]
        return [
            _at_most("|a2+1/2|+|a4-1/4|+|a6+1/2| (exact)", coeff_err, 0.0),
            _below("|fitted a6 + 1/2|", abs(fit[2] + 0.5), 1e-4),
        ]

    return _timed(3, "series coefficients", body)


def criterion_4(grid: Grid | None = None, seed: int = 4) -> Criterion:
    grid = grid or Grid()
    rng = np.random.default_rng(seed)

    def body():
        eig = mom = norm = idem = 0.0
        for xi in (0.4, -0.4, 1.0, -1.0, 1.5, -1.5):
            mode = spectral.discrete_mode(xi, grid)
            lhs = spectral.apply_L(xi, mode.e1) - mode.lambda_star * mode.e1
            eig = max(eig, norm_w(lhs))
            mom = max(mom, abs(inner_w(mode.e1, grid.constant()) - 1.0))
            norm = max(norm, abs(inner_w(mode.e1, mode.e1bar) - mode.omega_prime))
            f = random_smooth(grid, rng)
            pf = spectral.project(xi, f)
            idem = max(idem, norm_w(spectral.project(xi, pf) - pf))
        return [
            _below("||L e1 - lambda* e1||", eig, 1e-8),
            _below("|<e1,1> - 1|", mom, 1e-8),
            _below("|(e1,e1bar) - omega'|", norm, 1e-8),
            _below("||P^2 f - P f||", idem, 1e-8),
        ]

    return _timed(4, "eigenrelation and projector", body)


def criterion_5(grid: Grid | None = None, seed: int = 5) -> Criterion:
    grid = grid or Grid()
    rng = np.random.default_rng(seed)
    samples = [(0.5, 0.7), (-0.5 + 1.0j, -1.3), (2.0 - 3.0j, 2.2), (-2.0 + 0.5j, 0.9),
               (0.3 + 0.2j, 0.0), (-3.0, 0.0)]

    def body():
        resid = ident = closed = 0.0
        for lam, xi in samples:
            g = random_smooth(grid, rng)
            r = spectral.resolvent_apply(lam, xi, g)
            resid = max(resid, norm_w(spectral.apply_L(xi, r) - lam * r - g))
            mu = lam + 0.25 - 0.5j
            lhs = r - spectral.resolvent_apply(mu, xi, g)
            rhs = (lam - mu) * spectral.resolvent_apply(lam, xi, spectral.resolvent_apply(mu, xi, g))
            ident = max(ident, norm_w(lhs - rhs))
            if xi == 0:
                vg = inner_w(g, grid.constant())
                exact = -(g - vg) / (1.0 + lam) - vg / lam
                closed = max(closed, norm_w(r - exact))
        return [
            _below("||(L - lam) R g - g||", resid, 1e-8),
            _below("first resolvent identity", ident, 1e-7),
            _below("xi=0 closed form", closed, 1e-8),
        ]

    return _timed(5, "resolvent", body)


def criterion_6(grid: Grid | None = None, seed: int = 6, pairs: int = 20) -> Criterion:
    grid = grid or Grid()
    data = _pairs(grid, seed, pairs)

    def body():
        pars = rec = 0.0
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", gft.NearResonanceWarning)
            for xi in PARSEVAL_XI:
                for f, g in data:
                    p = gft.parseval(xi, f, g)
                    pars = max(pars, abs(p - inner_w(f, g)) / (norm_w(f) * norm_w(g)))
                    r = gft.reconstruct(gft.decompose(xi, f))
                    rec = max(rec, norm_w(r - f) / norm_w(f))
        return [
            _below("Parseval relative error", pars, 1e-6),
            _below("reconstruction relative error", rec, 1e-6),
        ]

    return _timed(6, "Parseval and expansion", body)


def criterion_7(grid: Grid | None = None, seed: int = 7) -> Criterion:
    grid = grid or Grid()
    rng = np.random.default_rng(seed)

    def body():
        err = 0.0
        lam = grid.nodes
        for xi in PARSEVAL_XI:
            f = random_smooth(grid, rng)
            lhs = gft.forward_B(xi, spectral.apply_L(xi, f))
            rhs = (-1.0 - 1j * xi * lam) * gft.forward_B(xi, f)
            err = max(err, np.max(np.abs((lhs - rhs).values)))
        return [_below("max |B(L f) - (-1 - i xi lam) B f|", err, 1e-7)]

    return _timed(7, "diagonalization", body)


def criterion_8(grid: Grid | None = None, seed: int = 8) -> Criterion:
    grid = grid or Grid()
    rng = np.random.default_rng(seed)

    def body():
        err = 0.0
        for xi in PROPAGATOR_XI:
            f0 = random_smooth(grid, rng)
            spectral_sol = evolution.spectral_trajectory(xi, f0, PROPAGATOR_TIMES)
            direct, _ = evolution.direct_trajectory(xi, f0, PROPAGATOR_TIMES)
            err = max(err, max(norm_w(a - b) for a, b in zip(spectral_sol, direct)) / norm_w(f0))
        return [_below("spectral vs direct, relative L2_w", err, 1e-4)]

    return _timed(8, "propagator cross-oracle", body)


def criterion_9(grid: Grid | None = None, seed: int = 9) -> Criterion:
    grid = grid or Grid()
    times = tuple(np.round(np.arange(0.0, 6.0001, 0.25), 10))
    window = (2.0, 6.0)

    def family(xi):
        return random_smooth(grid, np.random.default_rng([seed, int(round(abs(xi) * 1000))]))

    def body():
        cfg = evolution.EvolutionConfig(PROPAGATOR_XI, times, method="spectral")
        rep = evolution.decay_report(cfg, family, window=window)
        rate = max(abs(fit.rate + 1.0) for fit in rep.per_xi_fit.values())
        sweep = tuple(np.round(np.arange(-1.5, 1.5001, 0.1), 10))
        cfg = evolution.EvolutionConfig(sweep, times, method="spectral")
        trunc = evolution.decay_report(cfg, family, xi0=1.0, window=window, workers=4).truncated
        return [
            _below("lambda-norm deviation from e^{-t}", rep.lambda_norm_deviation, 1e-8),
            _below("|fitted rate + 1| per xi, t in [2,6]", rate, 0.01),
            _at_most("truncated-GDS aggregate rate (xi0=1)", trunc["fit"].rate, trunc["reference_rate"]),
        ]

    return _timed(9, "decay to GDS", body)


def criterion_10(grid: Grid | None = None, seed: int = 10) -> Criterion:
    grid = grid or Grid()
    xis = (0.0, 0.25, 0.8, 1.2, 1.5, 2.5)

    def family(xi):
        return random_smooth(grid, np.random.default_rng([seed, int(round(abs(xi) * 1000))]))

    def body():
        cfg = evolution.EvolutionConfig(xis, (0.25, 0.5, 1.0, 2.0, 3.0, 5.0), method="direct")
        res = evolution.contraction_check(cfg, family)
        return [_at_most("max_t ||f(t)|| / ||f0||", res["max"], 1.0 + 1e-6)]

    return _timed(10, "contraction", body)


def criterion_11() -> Criterion:
    def body():
        ce = evolution.chapman_enskog_gap(np.geomspace(5.0, 50.0, 10))
        return [
            _below("|slope + 1| over t in [5,50]", abs(ce.slope + 1.0), 0.15),
            _below("t*gap variation (max-min)/max", ce.variation, 0.25),
        ]

    return _timed(11, "Chapman-Enskog gap", body)


def criterion_12(grid: Grid | None = None) -> Criterion:
    grid = grid or Grid()
    heat_pts = ((-0.5, 0.5), (0.0, 1.0), (0.5, 2.0))
    ode_pts = ((-0.5, 0.8), (0.0, 1.5), (0.5, 2.5))

    def body():
        heat = max(dispersion.heat_residual(l, t, grid=grid) for l, t in heat_pts)
        ode = max(dispersion.omega_xi_ode_residual(l, x, grid=grid) for l, x in ode_pts)
        # rounding dominates at tiny steps, so the order is measured at 0.02 -> 0.01
        ratios = []
        for l, t in heat_pts:
            ratios.append(dispersion.heat_residual(l, t, step=0.02, grid=grid)
                          / dispersion.heat_residual(l, t, step=0.01, grid=grid))
        for l, x in ode_pts:
            ratios.append(dispersion.omega_xi_ode_residual(l, x, step=0.02, grid=grid)
                          / dispersion.omega_xi_ode_residual(l, x, step=0.01, grid=grid))
        spread = max(abs(r - 4.0) for r in ratios)
        return [
            _below("heat-equation residual", heat, 1e-4),
            _below("xi-ODE residual", ode, 1e-4),
            _below("|residual ratio on halving - 4|", spread, 1.0),
        ]

    return _timed(12, "omega PDE/ODE structure", body)


def criterion_13() -> Criterion:
    coarse = Grid(n=256)

    def body():
        c1 = criterion_1(coarse)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            c6 = criterion_6(coarse)
        return [
            Check("criterion 1 at N=256 fails: " + c1.checks[0].name, c1.checks[0].measured,
                  c1.checks[0].tolerance, not c1.passed, ">="),
            Check("criterion 6 at N=256 fails: Parseval", c6.checks[0].measured,
                  c6.checks[0].tolerance, not c6.checks[0].passed, ">="),
            Check("criterion 6 at N=256 fails: reconstruction", c6.checks[1].measured,
                  c6.checks[1].tolerance, not c6.checks[1].passed, ">="),
        ]

    return _timed(13, "resolution study (negative control)", body)


CRITERIA = {
    1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5,
    6: criterion_6, 7: criterion_7, 8: criterion_8, 9: criterion_9, 10: criterion_10,
    11: criterion_11, 12: criterion_12, 13: criterion_13,
}


def tampered_dawson_control() -> Criterion:
    """Criterion 1 with a Dawson function off by one part in 10^6 must fail."""
    def body():
        c1 = criterion_1(dawson_fn=lambda x: dawson(x) * (1.0 + 1e-6))
        chk = c1.checks[0]
        return [Check("criterion 1 with tampered Dawson fails", chk.measured, chk.tolerance,
                      not c1.passed, ">=")]

    return _timed(0, "tampered Dawson (negative control)", body)


def run_all(numbers=None, *, grid: Grid | None = None, echo=None):
    """Run the selected criteria (all by default).  ``grid`` overrides the
    default grid for criteria that take one; ``echo`` receives each line."""
    results = []
    for number in numbers or sorted(CRITERIA):
        fn = CRITERIA[number]
        if grid is not None and "grid" in fn.__code__.co_varnames[: fn.__code__.co_argcount]:
            res = fn(grid)
        else:
            res = fn()
        results.append(res)
        if echo:
            echo(res.line())
    return results
