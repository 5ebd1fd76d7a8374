"""Figure rendering for simulation outputs.

Everything here draws to files through the Agg backend; no window is ever
opened. Each renderer returns the path it wrote so callers can list the
artifacts in a run manifest.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .engine import LogisticFit, SimResult, SweepResult
from .wigner import PhaseSpaceGrid

DPI = 150
MAX_TRAJECTORY_LINES = 30


def fidelity_figure(result: SimResult, path) -> str:
    """Mean fidelity along the transfer with a standard-error band.

    A thinned set of individual trajectories is drawn underneath so the
    spread is visible next to the mean.
    """
    m, cols = result.fidelity.shape
    ell = np.arange(cols) / (cols - 1) if cols > 1 else np.zeros(1)
    mean = result.mean_fidelity
    err = result.fidelity.std(axis=0, ddof=1) / np.sqrt(m) if m > 1 else np.zeros(cols)

    fig, ax = plt.subplots(figsize=(6.5, 4.2))
    step = max(1, m // MAX_TRAJECTORY_LINES)
    for row in result.fidelity[::step]:
        ax.plot(ell, row, color="0.8", lw=0.6, zorder=1)
    ax.fill_between(ell, mean - err, mean + err,
                    color="tab:blue", alpha=0.25, zorder=2)
    ax.plot(ell, mean, color="tab:blue", lw=2.0, zorder=3,
            label=f"ensemble mean ({m} trajectories)")
    ax.axhline(1.0, color="0.5", lw=0.8, ls=":")
    ax.set_xlabel("transfer fraction")
    ax.set_ylabel("fidelity to input state")
    ax.set_ylim(min(0.0, float(result.fidelity.min())) - 0.02, 1.02)
    ax.legend(loc="lower left", frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return str(path)


def wigner_figure(field_vals: np.ndarray, grid: PhaseSpaceGrid, path, title: str = "") -> str:
    """Heat map of one quasi-probability field on its phase-space grid."""
    fig, ax = plt.subplots(figsize=(5.0, 4.4))
    _draw_field(ax, field_vals, grid)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return str(path)


def wigner_pair_figure(
    initial: np.ndarray, final: np.ndarray, grid: PhaseSpaceGrid, path
) -> str:
    """Input and ensemble-averaged output side by side on one color scale."""
    vmax = max(float(np.max(np.abs(initial))), float(np.max(np.abs(final))), 1e-12)
    fig, axes = plt.subplots(1, 2, figsize=(9.0, 4.2), sharey=True)
    for ax, vals, title in zip(axes, (initial, final), ("input", "averaged output")):
        _draw_field(ax, vals, grid, vmax=vmax)
        ax.set_title(title)
    axes[1].set_ylabel("")
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return str(path)


def _draw_field(ax, field_vals, grid, vmax=None):
    if vmax is None:
        vmax = max(float(np.max(np.abs(field_vals))), 1e-12)
    im = ax.pcolormesh(
        grid.x, grid.p, field_vals.T, cmap="RdBu_r", vmin=-vmax, vmax=vmax,
        shading="nearest", rasterized=True,
    )
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("p")
    ax.figure.colorbar(im, ax=ax, shrink=0.85)


def sweep_figure(sweep: SweepResult, path, fit: LogisticFit | None = None) -> str:
    """Final fidelity against intervention count, with the optional fit."""
    ns = np.asarray(sweep.n_values, dtype=float)
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    ax.errorbar(ns, sweep.mean_final, yerr=sweep.stderr_final, fmt="o",
                color="tab:blue", capsize=3, label="simulation")
    if fit is not None and fit.converged:
        dense = np.linspace(ns.min(), ns.max(), 200)
        curve = fit.floor + (fit.ceiling - fit.floor) / (
            1.0 + np.exp(-(dense - fit.midpoint) / fit.width)
        )
        ax.plot(dense, curve, color="tab:orange", lw=1.5,
                label=f"logistic fit (midpoint {fit.midpoint:.1f})")
    ax.axhline(1.0, color="0.5", lw=0.8, ls=":")
    ax.set_xscale("log")
    ax.set_xlabel("interventions")
    ax.set_ylabel("mean final fidelity")
    ax.legend(loc="lower right", frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return str(path)
