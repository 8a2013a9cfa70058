"""Figure rendering for the report-producing subcommands.

Each writer takes the already-computed result and saves one PNG next to
the delimited output.  Figures are a convenience view; the CSV stays the
machine-readable artifact.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def save_trajectory_figure(traj, path) -> None:
    """State channels over time."""
    fig, ax = plt.subplots(figsize=(7, 4))
    ks = np.arange(traj.K + 1)
    for i in range(traj.n):
        ax.plot(ks, traj.states[:, i], lw=1.0, label=f"x{i + 1}")
    ax.set_xlabel("k")
    ax.set_ylabel("state")
    ax.set_title(f"trajectory ({traj.meta.generator}, seed {traj.meta.seed})")
    if traj.n <= 8:
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_campaign_figure(result, path) -> None:
    """Empirical error quantiles against the certified bound, log-log in K."""
    Ks = [row.K for row in result.rows]
    med = [row.median_err for row in result.rows]
    p90 = [row.p90_err for row in result.rows]
    bound = [row.bound for row in result.rows]
    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    ax.loglog(Ks, med, "o-", label="median error")
    ax.loglog(Ks, p90, "s--", label="90th percentile")
    ax.loglog(Ks, bound, "k-", lw=1.5, label="certified bound")
    ax.set_xlabel("trajectory length K")
    ax.set_ylabel("operator-norm error")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    for warning in result.warnings:
        if warning.startswith("hypothesis violation"):
            ax.set_title("WARNING: " + warning, fontsize=8, color="red")
            break
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_forecast_figure(series, fc, path) -> None:
    """Observed versus predicted, one panel per channel."""
    n = fc.channels
    fig, axes = plt.subplots(n, 1, figsize=(7.5, 1.8 * n + 1), sharex=True,
                             squeeze=False)
    for i in range(n):
        ax = axes[i, 0]
        ax.plot(np.arange(series.shape[0]), series[:, i], lw=0.9,
                color="0.4", label="observed")
        ax.plot(fc.indices, fc.predictions[:, i], lw=0.9, color="C1",
                label="one-step forecast")
        ax.set_ylabel(f"ch {i + 1}", fontsize=8)
        if i == 0:
            ax.legend(fontsize=7, loc="upper right")
    axes[-1, 0].set_xlabel("sample index")
    fig.suptitle(f"windowed forecast (window {fc.window_size}, p={fc.p}, "
                 f"rmse {fc.metrics['rmse_total']:.4g})", fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_sweep_figure(rows, path) -> None:
    """Forecast error as a function of the fitting window size."""
    ws = [r[0] for r in rows]
    rmse = [r[1] for r in rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(ws, rmse, "o-")
    ax.set_xlabel("window size")
    ax.set_ylabel("rmse")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
