"""Command-line interface.

    bgkspectral dispersion | evolve | parseval | decay | chapman-enskog | selftest

Settings come from an optional ``key = value`` file (``--config``) and are
overridden by flags.  Tables are written as CSV (with ``#`` header comments
documenting every column) or JSON (with the configuration echoed); nested
reports are always JSON.  Output depends only on the configuration and seed.

Exit codes: 0 success, 2 configuration error, 3 resonance guard,
4 numerical tolerance failure, 5 oracle disagreement.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import dataclasses
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import acceptance, dispersion, evolution, gft
from .numerics import Grid, GridFunction, inner_w, norm_w, random_smooth
from .spectral import ResonanceError, is_resonant

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RESONANCE = 3
EXIT_TOLERANCE = 4
EXIT_DISAGREEMENT = 5

COMMANDS = ("dispersion", "evolve", "parseval", "decay", "chapman-enskog", "selftest")

DEFAULT_XI = {
    "dispersion": ("range", (-1.7, 1.7, 69)),
    "evolve": ("list", (0.25, 0.8, 1.5, 2.5)),
    "parseval": ("list", acceptance.PARSEVAL_XI),
    "decay": ("range", (-1.5, 1.5, 31)),
}
DEFAULT_TIMES = {
    "evolve": ("list", (0.0, 0.5, 1.0, 2.0, 5.0)),
    "decay": ("range", (0.0, 6.0, 25)),
}


class ConfigError(ValueError):
    """Invalid or unknown configuration entry."""


class ToleranceFailure(RuntimeError):
    pass


class OracleDisagreement(RuntimeError):
    pass


def _floats(text):
    if isinstance(text, (tuple, list)):
        return tuple(float(x) for x in text)
    return tuple(float(x) for x in str(text).replace(",", " ").split())


def _range3(text):
    vals = _floats(text)
    if len(vals) != 3 or vals[2] != int(vals[2]) or vals[2] < 1:
        raise ConfigError(f"range needs 'start, stop, count', got {text!r}")
    return (vals[0], vals[1], int(vals[2]))


def _bool(text):
    if isinstance(text, bool):
        return text
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def _opt_float(text):
    return None if text in (None, "", "none") else float(text)


@dataclass
class RunConfig:
    grid_l: float = 8.0
    grid_n: int = 4096
    xi: tuple | None = None  # explicit frequency list
    xi_range: tuple | None = None  # (start, stop, count), endpoints included
    times: tuple | None = None
    t_range: tuple | None = None
    dt: float = evolution.DEFAULT_DT
    method: str = "both"
    agreement_tol: float = 1e-4
    parseval_tol: float = 1e-6
    pairs: int = 20
    xi0: float = 1.0
    eps: float = evolution.TRUNCATION_EPS
    fit_start: float | None = None
    fit_stop: float | None = None
    ce_t_min: float = 5.0
    ce_t_max: float = 50.0
    ce_points: int = 10
    out: str = "out"
    format: str = "csv"
    seed: int = 0
    experimental_resonance: bool = False
    figures: bool = False

    _PARSERS = {
        "grid_l": float, "grid_n": int, "xi": _floats, "xi_range": _range3,
        "times": _floats, "t_range": _range3, "dt": float, "method": str,
        "agreement_tol": float, "parseval_tol": float, "pairs": int, "xi0": float,
        "eps": float, "fit_start": _opt_float, "fit_stop": _opt_float,
        "ce_t_min": float, "ce_t_max": float, "ce_points": int, "out": str,
        "format": str, "seed": int, "experimental_resonance": _bool, "figures": _bool,
    }

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        parser = configparser.ConfigParser(interpolation=None, delimiters=("=",),
                                           comment_prefixes=("#", ";"))
        try:
            parser.read_string("[run]\n" + text)
        except configparser.Error as exc:
            raise ConfigError(str(exc)) from None
        cfg = cls()
        cfg.update(dict(parser["run"]))
        return cfg

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.from_text(text)

    def update(self, values: dict):
        for key, raw in values.items():
            key = key.strip().replace("-", "_")
            if key not in self._PARSERS:
                raise ConfigError(f"unknown config key {key!r}")
            try:
                setattr(self, key, self._PARSERS[key](raw))
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad value for {key}: {raw!r} ({exc})") from None
        self.validate()

    def validate(self):
        if self.grid_n < 4 or self.grid_n % 2:
            raise ConfigError("grid_n must be even and >= 4")
        if not self.grid_l > 0 or not self.dt > 0:
            raise ConfigError("grid_l and dt must be positive")
        if self.method not in evolution.METHODS:
            raise ConfigError(f"method must be one of {evolution.METHODS}")
        if self.format not in ("csv", "json"):
            raise ConfigError("format must be csv or json")
        if self.xi is not None and self.xi_range is not None:
            raise ConfigError("give either xi or xi_range, not both")
        if self.times is not None and self.t_range is not None:
            raise ConfigError("give either times or t_range, not both")
        if self.pairs < 1 or self.ce_points < 2 or self.seed < 0:
            raise ConfigError("pairs >= 1, ce_points >= 2 and seed >= 0 required")
        if not 0 < self.ce_t_min < self.ce_t_max:
            raise ConfigError("need 0 < ce_t_min < ce_t_max")
        if not 0 < self.xi0 < math.sqrt(math.pi):
            raise ConfigError("xi0 must lie in (0, sqrt(pi))")
        if (self.fit_start is None) != (self.fit_stop is None):
            raise ConfigError("fit_start and fit_stop go together")

    @property
    def grid(self) -> Grid:
        return Grid(self.grid_l, self.grid_n)

    def xi_values(self, command):
        if self.xi is not None:
            return self.xi
        kind, values = ("range", self.xi_range) if self.xi_range else DEFAULT_XI[command]
        return _expand(kind, values)

    def time_values(self, command):
        if self.times is not None:
            vals = self.times
        elif self.t_range is not None:
            vals = _expand("range", self.t_range)
        else:
            vals = _expand(*DEFAULT_TIMES[command])
        if any(b <= a for a, b in zip(vals, vals[1:])) or min(vals) < 0:
            raise ConfigError("times must be increasing and >= 0")
        return vals

    @property
    def window(self):
        return None if self.fit_start is None else (self.fit_start, self.fit_stop)

    def echo(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v)
                for k, v in dataclasses.asdict(self).items()}


def _expand(kind, values):
    if kind == "list":
        return tuple(float(x) for x in values)
    start, stop, count = values
    return tuple(float(x) for x in np.round(np.linspace(start, stop, int(count)), 12))


# -------------------------------------------------------------------- output

def _cell(x):
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return "" if math.isnan(x) else repr(float(x))
    return str(x)


def _json_value(x):
    if isinstance(x, (np.floating, float)):
        return None if math.isnan(x) else float(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    return x


def write_table(cfg: RunConfig, name: str, command: str, columns, rows, *, notes=(), subdir=None):
    """Write ``rows`` (sequences aligned with ``columns``, a list of
    ``(name, description)``) as ``name.csv`` or ``name.json``."""
    out = Path(cfg.out) / subdir if subdir else Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    if cfg.format == "csv":
        path = out / f"{name}.csv"
        with path.open("w", newline="") as fh:
            fh.write(f"# command: {command}\n")
            for col, doc in columns:
                fh.write(f"# {col}: {doc}\n")
            for note in notes:
                fh.write(f"# {note}\n")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow([c for c, _ in columns])
            for row in rows:
                writer.writerow([_cell(x) for x in row])
    else:
        path = out / f"{name}.json"
        doc = {
            "command": command,
            "config": cfg.echo(),
            "columns": {c: d for c, d in columns},
            "notes": list(notes),
            "rows": [{c: _json_value(x) for (c, _), x in zip(columns, row)} for row in rows],
        }
        path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path


def write_report(cfg: RunConfig, name: str, command: str, report: dict):
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{name}.json"
    doc = {"command": command, "config": cfg.echo(), "report": report}
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, default=_json_value) + "\n")
    return path


def _initial_data(cfg: RunConfig, grid: Grid, xi) -> GridFunction:
    key = [cfg.seed, int(round(abs(xi) * 1e6)), int(xi < 0)]
    return random_smooth(grid, np.random.default_rng(key))


def _fit_dict(fit):
    if fit is None:
        return None
    return {"rate": fit.rate, "intercept": fit.intercept, "residual": fit.residual,
            "window": list(fit.window)}


# ------------------------------------------------------------------ commands

def cmd_dispersion(cfg: RunConfig) -> int:
    grid = cfg.grid
    rows = []
    for xi in cfg.xi_values("dispersion"):
        pt = dispersion.dispersion_point(xi, grid=grid)
        if pt.boundary:
            flag = "boundary"
        elif pt.lambda_star is None:
            flag = "none"
        else:
            flag = "root"
        implicit = series = None
        if pt.lambda_star is not None and xi != 0:
            implicit = dispersion.implicit_residual(pt.lambda_star, xi)
        if pt.lambda_star is not None and abs(xi) <= dispersion.SERIES_XI_CAP:
            series = abs(dispersion.lambda_star_series(xi) - pt.lambda_star)
        lam = pt.limit_value if pt.boundary else pt.lambda_star
        rows.append((xi, lam, pt.omega_prime, implicit, series, flag))
    columns = [
        ("xi", "Fourier frequency (dimensionless)"),
        ("lambda_star", "discrete eigenvalue, root of omega in (-1, 0]; -1 is the limit value at |xi|=sqrt(pi); empty when none"),
        ("omega_prime", "d omega / d lambda at lambda_star, equal to -2 lambda_star / xi^2 (1 at xi=0)"),
        ("implicit_residual", "|1 - sqrt(pi)/|xi| erfcx((1+lambda_star)/|xi|)| from the erf form"),
        ("series_deviation", f"|12-term power series - lambda_star|, only for |xi| <= {dispersion.SERIES_XI_CAP}"),
        ("flag", "root: isolated eigenvalue; boundary: |xi| = sqrt(pi); none: no eigenvalue"),
    ]
    path = write_table(cfg, "dispersion", "dispersion", columns, rows)
    if cfg.figures:
        from . import plotting
        plotting.plot_dispersion([r[0] for r in rows], [r[1] for r in rows],
                                 Path(cfg.out) / "dispersion.png")
    print(f"wrote {path} ({len(rows)} rows)")
    return EXIT_OK


def cmd_evolve(cfg: RunConfig) -> int:
    grid = cfg.grid
    xis = cfg.xi_values("evolve")
    times = cfg.time_values("evolve")
    evolution.EvolutionConfig(xis, times, cfg.dt, cfg.method, cfg.experimental_resonance)
    rows, worst = [], 0.0
    for xi in xis:
        f0 = _initial_data(cfg, grid, xi)
        method = cfg.method
        if is_resonant(xi):
            # only the direct integrator is defined at resonance
            method = "direct"
        spectral_sol = evolution.spectral_trajectory(xi, f0, times) if method in ("spectral", "both") else None
        direct = rich = None
        if method in ("direct", "both"):
            direct, rich = evolution.direct_trajectory(xi, f0, times, dt=cfg.dt)
        arbiter = direct if direct is not None else spectral_sol
        scale = norm_w(f0)
        for k, t in enumerate(times):
            f = arbiter[k]
            agree = None
            if spectral_sol is not None and direct is not None:
                agree = norm_w(spectral_sol[k] - direct[k]) / scale
                worst = max(worst, agree)
            gap = None if is_resonant(xi) else norm_w(f - evolution.gds(xi, f0, t))
            rows.append((xi, t, method, norm_w(f), gap, agree, rich))
            snap = [(v, z.real, z.imag) for v, z in zip(grid.nodes, f.values)]
            write_table(cfg, f"xi_{xi:+.4f}_t_{t:.4f}", "evolve", [
                ("v", "velocity node"), ("re", "Re f(t, xi, v)"), ("im", "Im f(t, xi, v)")],
                snap, subdir="snapshots")
    columns = [
        ("xi", "Fourier frequency"),
        ("t", "time"),
        ("method", "propagator(s) run; the direct integrator is reported when both run"),
        ("l2_norm", "||f(t)||_{L2_w}"),
        ("gds_distance", "||f(t) - g(t)||_{L2_w}, g the grossly determined solution"),
        ("agreement", "||f_spectral - f_direct||_{L2_w} / ||f0||_{L2_w}"),
        ("richardson", "direct-integrator Richardson estimate per unit time, relative to ||f0||"),
    ]
    path = write_table(cfg, "evolve", "evolve", columns, rows,
                       notes=[f"initial data: random smooth, seed {cfg.seed}"])
    runnable = tuple(x for x in xis if not is_resonant(x))
    if runnable:
        ecfg = evolution.EvolutionConfig(runnable, times, cfg.dt, cfg.method)
        try:
            rep = evolution.decay_report(ecfg, lambda x: _initial_data(cfg, grid, x), window=cfg.window)
            write_report(cfg, "decay_report", "evolve", _decay_dict(rep))
        except evolution.FitError as exc:
            print(f"decay report skipped: {exc}")
    print(f"wrote {path}; max spectral/direct disagreement {worst:.3e}")
    if worst > cfg.agreement_tol:
        raise OracleDisagreement(f"spectral and direct propagators differ by {worst:.3e} > {cfg.agreement_tol}")
    return EXIT_OK


def cmd_parseval(cfg: RunConfig) -> int:
    grid = cfg.grid
    rng = np.random.default_rng(cfg.seed)
    data = [(random_smooth(grid, rng), random_smooth(grid, rng)) for _ in range(cfg.pairs)]
    rows, worst = [], 0.0
    for xi in cfg.xi_values("parseval"):
        for k, (f, g) in enumerate(data):
            pars = abs(gft.parseval(xi, f, g) - inner_w(f, g)) / (norm_w(f) * norm_w(g))
            rec = norm_w(gft.reconstruct(gft.decompose(xi, f)) - f) / norm_w(f)
            worst = max(worst, pars, rec)
            rows.append((xi, k, pars, rec, max(pars, rec) < cfg.parseval_tol))
    columns = [
        ("xi", "Fourier frequency"),
        ("pair", "index of the random pair (f, g)"),
        ("parseval_error", "|spectral pairing + projector term - (f,g)_w| / (||f|| ||g||)"),
        ("reconstruction_error", "||reconstruct(decompose(f)) - f|| / ||f||"),
        ("passed", f"both errors below {cfg.parseval_tol}"),
    ]
    path = write_table(cfg, "parseval", "parseval", columns, rows)
    print(f"wrote {path}; worst error {worst:.3e}")
    if worst >= cfg.parseval_tol:
        raise ToleranceFailure(f"expansion error {worst:.3e} >= {cfg.parseval_tol}")
    return EXIT_OK


def _decay_dict(rep: evolution.DecayReport) -> dict:
    out = {
        "xi_list": list(rep.xi_list),
        "times": list(rep.times),
        "quadrature": rep.quadrature,
        "norm_weights": {"l2": "1", "h1": "(1+xi^2)", "hm1": "(1+xi^2)^-1"},
        "per_xi": {repr(x): list(v) for x, v in rep.per_xi.items()},
        "per_xi_fit": {repr(x): _fit_dict(f) for x, f in rep.per_xi_fit.items()},
        "aggregate": {k: list(v) for k, v in rep.aggregate.items()},
        "aggregate_fit": _fit_dict(rep.aggregate_fit),
        "reference_rate": rep.reference_rate,
        "rate_tolerance": rep.rate_tolerance,
        "lambda_norm_deviation": rep.lambda_norm_deviation,
        "oracle_disagreement": rep.oracle_disagreement,
        "transient_window": list(rep.transient_window),
    }
    if rep.truncated:
        tr = rep.truncated
        out["truncated"] = {
            "xi0": tr["xi0"], "eps": tr["eps"], "reference_rate": tr["reference_rate"],
            "fit": _fit_dict(tr["fit"]), "passed": bool(tr["passed"]),
            "aggregate": {k: list(v) for k, v in tr["aggregate"].items()},
        }
    return out


def cmd_decay(cfg: RunConfig) -> int:
    grid = cfg.grid
    xis = cfg.xi_values("decay")
    times = cfg.time_values("decay")
    ecfg = evolution.EvolutionConfig(xis, times, cfg.dt, cfg.method, cfg.experimental_resonance)
    rep = evolution.decay_report(ecfg, lambda x: _initial_data(cfg, grid, x), xi0=cfg.xi0,
                                 window=cfg.window, eps=cfg.eps)
    rows = []
    for xi in xis:
        fit = rep.per_xi_fit.get(xi)
        rate = None if fit is None else fit.rate
        resid = None if fit is None else fit.residual
        ok = None if fit is None else abs(rate - rep.reference_rate) <= rep.rate_tolerance
        rows.append((xi, rate, resid, rep.reference_rate, ok))
    columns = [
        ("xi", "Fourier frequency"),
        ("rate", "least-squares slope of log ||f(t) - g(t)||_{L2_w} over the fit window (1/time)"),
        ("fit_residual", "rms residual of the log-norm fit"),
        ("reference_rate", "edge of the essential spectrum, -1"),
        ("within_tolerance", f"|rate - reference| <= {rep.rate_tolerance} (reported, not enforced)"),
    ]
    path = write_table(cfg, "decay_rates", "decay", columns, rows)
    tr = rep.truncated
    series = [(t, rep.aggregate["l2"][k], rep.aggregate["h1"][k], rep.aggregate["hm1"][k],
               tr["aggregate"]["l2"][k]) for k, t in enumerate(times)]
    write_table(cfg, "decay_series", "decay", [
        ("t", "time"),
        ("l2", "sqrt(trapz_xi ||f - g||^2), full GDS"),
        ("h1", "same with weight (1+xi^2)"),
        ("hm1", "same with weight (1+xi^2)^-1"),
        ("truncated_l2", f"sqrt(trapz_xi ||f - g_xi0||^2), truncated GDS with xi0={cfg.xi0}"),
    ], series)
    write_report(cfg, "decay_report", "decay", _decay_dict(rep))
    if cfg.figures:
        from . import plotting
        plotting.plot_decay(times, rep.aggregate["l2"], tr["aggregate"]["l2"],
                            Path(cfg.out) / "decay.png")
    print(f"wrote {path}; truncated rate {tr['fit'].rate:.4f} vs bound {tr['reference_rate']:.4f}")
    if not tr["passed"]:
        raise ToleranceFailure(f"truncated-GDS rate {tr['fit'].rate:.4f} > {tr['reference_rate']:.4f}")
    return EXIT_OK


def cmd_chapman_enskog(cfg: RunConfig) -> int:
    times = np.geomspace(cfg.ce_t_min, cfg.ce_t_max, cfg.ce_points)
    ce = evolution.chapman_enskog_gap(times)
    rows = list(zip(ce.times, ce.gap, ce.t_gap))
    columns = [
        ("t", "time"),
        ("gap", "max over xi in (-sqrt(pi), sqrt(pi)) of |exp(lambda_star t) - exp(-xi^2 t/2)|"),
        ("t_gap", "t * gap"),
    ]
    notes = [f"log-log slope: {ce.slope!r}", f"t*gap variation (max-min)/max: {ce.variation!r}"]
    path = write_table(cfg, "chapman_enskog", "chapman-enskog", columns, rows, notes=notes)
    if cfg.figures:
        from . import plotting
        plotting.plot_chapman_enskog(ce.times, ce.gap, Path(cfg.out) / "chapman_enskog.png")
    print(f"wrote {path}; slope {ce.slope:.4f}, t*gap variation {ce.variation:.3f}")
    return EXIT_OK


def cmd_selftest(cfg: RunConfig) -> int:
    grid = cfg.grid if cfg.grid != Grid() else None
    results = acceptance.run_all(grid=grid, echo=print)
    control = acceptance.tampered_dawson_control()
    print(control.line())
    results.append(control)
    rows = [(c.number, c.title, chk.name, chk.measured, chk.relation, chk.tolerance, chk.passed)
            for c in results for chk in c.checks]
    columns = [
        ("criterion", "criterion number (0: tampered-Dawson negative control)"),
        ("title", "criterion title"),
        ("check", "measured quantity"),
        ("measured", "measured value"),
        ("relation", "required relation of measured to tolerance"),
        ("tolerance", "tolerance"),
        ("passed", "verdict"),
    ]
    write_table(cfg, "selftest", "selftest", columns, rows)
    failed = [c for c in results if not c.passed]
    print(f"{len(results) - len(failed)}/{len(results)} passed")
    if failed:
        print("failed: " + ", ".join(f"criterion {c.number}" for c in failed))
        return EXIT_TOLERANCE
    return EXIT_OK


HANDLERS = {
    "dispersion": cmd_dispersion, "evolve": cmd_evolve, "parseval": cmd_parseval,
    "decay": cmd_decay, "chapman-enskog": cmd_chapman_enskog, "selftest": cmd_selftest,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bgkspectral",
                                description="Spectral solver for the linearized scalar BGK model.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--out", help="output directory")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--xi", type=float, nargs="+", help="explicit frequency list")
    p.add_argument("--grid-n", type=int, help="grid point count N")
    p.add_argument("--grid-l", type=float, help="grid half-width L")
    p.add_argument("--seed", type=int)
    p.add_argument("--times", type=float, nargs="+", help="output times")
    p.add_argument("--method", choices=evolution.METHODS)
    p.add_argument("--experimental-resonance", action="store_true", default=None,
                   help="allow |xi| = sqrt(pi) where supported")
    p.add_argument("--figures", action="store_true", default=None,
                   help="also render PNG figures (needs matplotlib)")
    return p


def load_config(args) -> RunConfig:
    cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
    overrides = {k: getattr(args, a) for k, a in (
        ("out", "out"), ("format", "format"), ("xi", "xi"), ("grid_n", "grid_n"),
        ("grid_l", "grid_l"), ("seed", "seed"), ("times", "times"), ("method", "method"),
        ("experimental_resonance", "experimental_resonance"), ("figures", "figures"),
    ) if getattr(args, a) is not None}
    if "xi" in overrides:
        cfg.xi_range = None
    if "times" in overrides:
        cfg.t_range = None
    cfg.update(overrides)
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
        return HANDLERS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ResonanceError as exc:
        print(f"resonance guard: {exc}", file=sys.stderr)
        return EXIT_RESONANCE
    except (ToleranceFailure, evolution.StepSizeError) as exc:
        print(f"tolerance failure: {exc}", file=sys.stderr)
        return EXIT_TOLERANCE
    except OracleDisagreement as exc:
        print(f"oracle disagreement: {exc}", file=sys.stderr)
        return EXIT_DISAGREEMENT
    except (evolution.FitError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
