"""Matplotlib renderings of the statistics layer's outputs.

Every function writes one PNG next to the delimited data file and returns
the path.  Figures are optional conveniences; the CSV/JSON outputs remain
the primary artifacts.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

from photonloop.montecarlo import BootupFit, SweepResult, TrialResult  # noqa: E402
from photonloop.network import SimParams, ring_capacity  # noqa: E402


def _capacity_guides(ax, n_lines: int, axis: str = "y") -> None:
    """Reference lines at the ring capacity 9N/2 and the 5N saturation level."""
    cap = ring_capacity(n_lines)
    drawline = ax.axhline if axis == "y" else ax.axvline
    drawline(cap, color="tab:red", linestyle="--", linewidth=1.0,
             label=f"ring capacity 9N/2 = {cap}")
    drawline(5 * n_lines, color="tab:gray", linestyle=":", linewidth=1.0,
             label=f"saturated total 5N = {5 * n_lines}")


def plot_timeseries(path, results: list, params: SimParams) -> str:
    """Mean photon populations over time, with per-trial spread."""
    t = results[0].t
    comp = np.vstack([r.computational for r in results]).astype(float)
    total = np.vstack([r.total for r in results]).astype(float)
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    ax.plot(t, total.mean(axis=0), color="tab:blue", label="total (mean)")
    ax.plot(t, comp.mean(axis=0), color="tab:green",
            label="computational (mean)")
    if len(results) > 1:
        lo, hi = np.percentile(total, [10, 90], axis=0)
        ax.fill_between(t, lo, hi, color="tab:blue", alpha=0.15,
                        label="total 10–90%")
    _capacity_guides(ax, params.n_lines)
    ax.set_xlabel("step")
    ax.set_ylabel("photons")
    ax.set_title(f"N={params.n_lines}, B={params.bias:g}, "
                 f"{len(results)} trial(s)")
    ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)


def plot_bias_sweep(path, sweep: SweepResult, n_lines: int) -> str:
    """Final mean total photon count against the loss bias."""
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    ax.errorbar(sweep.axis, sweep.mean, yerr=sweep.ci95, fmt="o-",
                color="tab:blue", markersize=3.5, capsize=2,
                label=f"mean final total ({sweep.trials} trials)")
    _capacity_guides(ax, n_lines)
    ax.set_xlabel("bias B")
    ax.set_ylabel("photons at t_max")
    ax.set_title(f"N={n_lines}: saturation versus bias")
    ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)


def plot_saturation(path, sweep: SweepResult, params: SimParams) -> str:
    """Fraction of saturated trials against time."""
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    ax.plot(sweep.axis, sweep.mean, color="tab:blue",
            label=f"saturated fraction ({sweep.trials} trials)")
    ax.fill_between(sweep.axis, sweep.mean - sweep.ci95,
                    np.minimum(sweep.mean + sweep.ci95, 1.0),
                    color="tab:blue", alpha=0.2)
    ax.axhline(0.5, color="tab:gray", linestyle=":", linewidth=1.0,
               label="boot-up threshold 0.5")
    ax.set_xlabel("step")
    ax.set_ylabel("fraction of trials with total > 9N/2")
    ax.set_ylim(-0.02, 1.02)
    ax.set_title(f"N={params.n_lines}, B={params.bias:g}")
    ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)


def plot_bootup(path, entries: list, fit: BootupFit | None,
                bias: float) -> str:
    """Boot-up time against network size, with the least-squares line."""
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    n_ok = [n for n, tb in entries if tb is not None]
    t_ok = [tb for _, tb in entries if tb is not None]
    ax.plot(n_ok, t_ok, "o", color="tab:blue", label="measured boot-up")
    if fit is not None:
        grid = np.linspace(min(n_ok), max(n_ok), 50)
        ax.plot(grid, fit.slope * grid + fit.intercept, "-",
                color="tab:red", linewidth=1.0,
                label=(f"fit: {fit.slope:.1f}·N + {fit.intercept:.0f} "
                       f"(r² = {fit.r_squared:.3f})"))
    ax.set_xlabel("lines N")
    ax.set_ylabel("boot-up steps (fraction saturated ≥ 0.5)")
    ax.set_title(f"Boot-up scaling at B={bias:g}")
    ax.legend(loc="upper left", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)
