"""PNG figures for the CLI's ``--figures`` option.

The CSV/JSON tables are the primary output; these renderings are a
convenience and use the non-interactive Agg backend.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)
    return path


def plot_dispersion(xi, lambda_star, path):
    """lambda_star against xi with the essential line and the parabola -xi^2/2."""
    xi = np.asarray(xi, dtype=float)
    lam = np.array([np.nan if v is None else v for v in lambda_star], dtype=float)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(xi, lam, "o-", ms=3, label=r"$\lambda_*(\xi)$")
    ax.plot(xi, -0.5 * xi**2, "--", lw=1, label=r"$-\xi^2/2$")
    ax.axhline(-1.0, color="k", lw=0.8, label="essential spectrum")
    for s in (-math.sqrt(math.pi), math.sqrt(math.pi)):
        ax.axvline(s, color="grey", lw=0.6, ls=":")
    ax.set_ylim(-1.2, 0.1)
    ax.set_xlabel(r"$\xi$")
    ax.set_ylabel(r"$\lambda$")
    ax.legend(loc="lower center", fontsize=8)
    return _save(fig, path)


def plot_decay(times, full, truncated, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogy(times, full, "o-", ms=3, label="distance to GDS")
    ax.semilogy(times, truncated, "s-", ms=3, label="distance to truncated GDS")
    t = np.asarray(times, dtype=float)
    ax.semilogy(t, full[0] * np.exp(-t), "k--", lw=0.8, label=r"$e^{-t}$")
    ax.set_xlabel("t")
    ax.set_ylabel(r"aggregate $L^2$ norm")
    ax.legend(fontsize=8)
    return _save(fig, path)


def plot_chapman_enskog(times, gap, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.loglog(times, gap, "o-", ms=3, label="gap")
    ax.loglog(times, gap[0] * times[0] / np.asarray(times), "k--", lw=0.8, label=r"$\propto 1/t$")
    ax.set_xlabel("t")
    ax.set_ylabel(r"$\sup_\xi |e^{\lambda_* t} - e^{-\xi^2 t/2}|$")
    ax.legend(fontsize=8)
    return _save(fig, path)
