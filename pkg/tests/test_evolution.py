import math

import numpy as np
import pytest

from bgkspectral import evolution as ev
from bgkspectral.numerics import SQRT_PI, Grid, GridFunction, moment, norm_w, random_smooth
from bgkspectral.spectral import ResonanceError, apply_L, discrete_mode, project


def test_config_validation():
    ev.EvolutionConfig([0.5], [0, 1])
    with pytest.raises(ValueError):
        ev.EvolutionConfig([0.5], [1, 0])
    with pytest.raises(ValueError):
        ev.EvolutionConfig([0.5], [0, 1], dt=0)
    with pytest.raises(ValueError):
        ev.EvolutionConfig([0.5], [0, 1], method="euler")
    with pytest.raises(ResonanceError):
        ev.EvolutionConfig([SQRT_PI], [0, 1])
    ev.EvolutionConfig([SQRT_PI], [0, 1], experimental_resonance=True)


def test_direct_equilibrium_and_mean_zero_mode(grid):
    one = grid.constant()
    assert norm_w(ev.propagate_direct(0.0, one, 2.0) - one) < 1e-13
    v = grid.identity()
    out = ev.propagate_direct(0.0, v, 1.5)
    assert norm_w(out - math.exp(-1.5) * v) < 1e-9


def test_step_size_rejection(grid, rng):
    f = random_smooth(grid, rng)
    with pytest.raises(ev.StepSizeError):
        ev.integrate_direct(2.5, f, 1.0, dt=0.2)
    res = ev.integrate_direct(2.5, f, 1.0)
    assert res.error_estimate < ev.RICHARDSON_TOL and res.steps == 100


def test_spectral_time_zero(grid, rng):
    f = random_smooth(grid, rng)
    for xi in (0.0, 0.8, 2.5):
        assert norm_w(ev.propagate_spectral(xi, f, 0.0) - f) / norm_w(f) < 1e-6


def test_eigenvector_evolution(grid):
    m = discrete_mode(0.8, grid)
    exact = math.exp(2 * m.lambda_star) * m.e1
    assert norm_w(ev.propagate_spectral(0.8, m.e1, 2.0) - exact) < 1e-5
    assert norm_w(ev.propagate_direct(0.8, m.e1, 2.0) - exact) < 1e-5


@pytest.mark.parametrize("xi, t", [(2.5, 1.0), (1.0, 3.0), (-0.8, 2.0)])
def test_cross_oracle(grid, rng, xi, t):
    f = random_smooth(grid, rng)
    diff = ev.propagate_spectral(xi, f, t) - ev.propagate_direct(xi, f, t)
    assert norm_w(diff) / norm_w(f) < 1e-4


def test_semigroup(grid, rng):
    f = random_smooth(grid, rng)
    for prop in (ev.propagate_spectral, ev.propagate_direct):
        a = prop(1.2, prop(1.2, f, 0.7), 1.1)
        b = prop(1.2, f, 1.8)
        assert norm_w(a - b) / norm_w(f) < 1e-6


def test_trajectories_match_single_calls(grid, rng):
    f = random_smooth(grid, rng)
    times = [0.5, 1.0, 2.0]
    spectral_sol = ev.spectral_trajectory(0.6, f, times)
    direct, worst = ev.direct_trajectory(0.6, f, times)
    for t, s, d in zip(times, spectral_sol, direct):
        assert norm_w(s - ev.propagate_spectral(0.6, f, t)) < 1e-13
        assert norm_w(d - ev.propagate_direct(0.6, f, t)) < 1e-10
    assert 0 < worst < ev.RICHARDSON_TOL


def test_mass(grid, rng):
    f = random_smooth(grid, rng)
    assert abs(moment(ev.propagate_direct(0.0, f, 3.0)) - moment(f)) < 1e-12
    assert ev.mass_rate_residual(0.7, f, 1.0) < 1e-5


def test_gds_properties(grid, rng):
    f = random_smooth(grid, rng)
    assert norm_w(ev.gds(0.8, f, 0.0) - project(0.8, f)) == 0.0
    lam = discrete_mode(0.8, grid).lambda_star
    mu0 = ev.gds_coefficient(0.8, f).mu0
    assert abs(moment(ev.gds(0.8, f, 1.5)) - math.exp(lam * 1.5) * mu0) < 1e-8
    assert norm_w(ev.gds(2.0, f, 1.0)) == 0.0
    assert ev.gds_coefficient(2.0, f).mu0 == 0
    with pytest.raises(ValueError):
        ev.gds(0.8, f, -1.0)


def test_gds_solves_the_equation(grid, rng):
    f = random_smooth(grid, rng)
    t, h = 1.0, 1e-4
    dg = (ev.gds(1.1, f, t + h) - ev.gds(1.1, f, t - h)) / (2 * h)
    assert norm_w(dg - apply_L(1.1, ev.gds(1.1, f, t))) < 1e-6


def test_gds_truncated(grid, rng):
    f = random_smooth(grid, rng)
    assert norm_w(ev.gds_truncated(0.5, 1.0, f, 2.0) - ev.gds(0.5, f, 2.0)) == 0.0
    assert norm_w(ev.gds_truncated(1.4, 1.0, f, 2.0)) == 0.0
    assert norm_w(ev.gds_truncated(-0.9, 1.0, f, 0.0) - project(-0.9, f)) == 0.0
    with pytest.raises(ValueError):
        ev.gds_truncated(0.5, 2.0, f, 1.0)


def test_fit_decay_rate():
    t = np.linspace(0, 6, 25)
    fit = ev.fit_decay_rate(t, 3 * np.exp(-0.7 * t))
    assert fit.rate == pytest.approx(-0.7, abs=1e-12)
    assert fit.window == (3.0, 6.0) and fit.residual < 1e-12
    with pytest.raises(ev.FitError):
        ev.fit_decay_rate(t[:6], np.exp(-t[:6]))


def test_decay_report_single_mode(grid):
    times = np.arange(0, 6.001, 0.25)
    f0 = random_smooth(grid, np.random.default_rng(3))
    cfg = ev.EvolutionConfig([0.8], times, method="spectral")
    rep = ev.decay_report(cfg, {0.8: f0}, window=(2, 6))
    assert rep.lambda_norm_deviation < 1e-8
    assert abs(rep.per_xi_fit[0.8].rate + 1) < 0.01
    assert rep.quadrature == "single mode"


def test_decay_report_parallel_matches_sequential():
    grid = Grid(8.0, 1024)
    times = np.arange(0, 4.001, 0.5)
    cfg = ev.EvolutionConfig([-0.5, 0.2, 0.9, 1.9], times, method="both")

    def family(xi):
        return random_smooth(grid, np.random.default_rng(int(abs(xi) * 100)))

    a = ev.decay_report(cfg, family, xi0=1.0)
    b = ev.decay_report(cfg, family, xi0=1.0, workers=4)
    for key in a.aggregate:
        assert np.array_equal(a.aggregate[key], b.aggregate[key])
    assert a.oracle_disagreement < 1e-4
    assert a.aggregate["h1"][0] >= a.aggregate["l2"][0] >= a.aggregate["hm1"][0]


def test_rate_floor(grid):
    times = np.arange(0, 6.001, 0.25)
    xis = (0.25, 0.8, 1.5, 2.5)
    cfg = ev.EvolutionConfig(xis, times, method="spectral")
    rep = ev.decay_report(cfg, lambda x: random_smooth(grid, np.random.default_rng(11)), window=(2, 6))
    for fit in rep.per_xi_fit.values():
        assert fit.rate >= -1 - 5 * fit.residual - 1e-3


def test_contraction(grid, rng):
    times = (0.5, 1.0, 2.0)
    cfg = ev.EvolutionConfig([0.0], times, method="direct")
    assert ev.contraction_check(cfg, {0.0: grid.constant()})["max"] == pytest.approx(1.0, abs=1e-12)
    res = ev.contraction_check(cfg, {0.0: grid.identity()})
    assert res["max"] == pytest.approx(math.exp(-0.5), rel=1e-8)
    f = random_smooth(grid, rng)
    cfg = ev.EvolutionConfig([1.2], times, method="direct")
    assert ev.contraction_check(cfg, {1.2: f})["max"] <= 1 + 1e-6


def test_projector_norm_grows_near_resonance(grid):
    norms = [ev.projector_norm(x, grid) for x in (0.5, 1.0, 1.5, 1.7, 1.77)]
    assert all(b > a for a, b in zip(norms, norms[1:]))
    assert ev.projector_norm(2.0, grid) == 0.0


def test_chapman_enskog_gap():
    small = ev.chapman_enskog_gap([1e-3, 2e-3])
    assert small.gap[0] < 1e-3
    ce = ev.chapman_enskog_gap(np.geomspace(5, 50, 10))
    assert np.all(ce.gap > 0) and -1.2 < ce.slope < -0.5
    with pytest.raises(ValueError):
        ev.chapman_enskog_gap([0.0, 1.0])


def test_chapman_enskog_gap_approaches_inverse_t_late():
    ce = ev.chapman_enskog_gap(np.geomspace(50, 500, 10))
    assert abs(ce.slope + 1) < 0.05


def test_spatial_round_trip():
    grid = Grid(8.0, 64)
    x = np.linspace(0, 2 * np.pi, 16, endpoint=False)
    rng = np.random.default_rng(0)
    data = rng.normal(size=(16, 64)) * np.exp(-grid.nodes**2 / 4)
    xi, modes = ev.spatial_to_modes(x, data, grid, experimental_resonance=True)
    back = ev.modes_to_spatial(x, modes, grid)
    assert np.allclose(back, data, atol=1e-12)
    dx = x[1] - x[0]
    direct = math.sqrt(sum(norm_w(GridFunction(grid, row)) ** 2 for row in data) * dx)
    assert ev.aggregate_spatial_l2(modes, 2 * np.pi) == pytest.approx(direct, rel=1e-12)


def test_chapman_enskog_asymptotic_constant():
    # t * gap -> sup_x |a4| x^2 exp(-x/2) = 4 exp(-2) with a4 = 1/4
    ce = ev.chapman_enskog_gap([1e4])
    assert ce.t_gap[0] == pytest.approx(4 * math.exp(-2), rel=1e-2)
