"""Figure rendering for sweep and simulation artifacts.

Every renderer writes a file next to the delimited output; nothing is ever
shown interactively (Agg backend).
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import numpy as np
import matplotlib.pyplot as plt


def _fig_size(width_in=7.2, aspect=0.45):
    return (width_in, width_in * aspect)


def render_sweep_figure(axes_spec, rows, path) -> None:
    """Tradeoff surfaces of a sweep.

    One axis: quantum and classical tradeoff traces against the swept
    parameter. Two axes: a pair of heatmaps over the grid (row-major rows).
    """
    quantum = np.array([r["tradeoff_quantum"] for r in rows])
    classical = np.array([r["tradeoff_classical"] for r in rows])
    if len(axes_spec) == 1:
        ax_name = axes_spec[0]["name"]
        x = np.array([r[ax_name] for r in rows])
        fig, ax = plt.subplots(figsize=_fig_size(5.0, 0.7))
        ax.plot(x, quantum, label="quantum tradeoff", lw=1.5)
        ax.plot(x, classical, label="classical tradeoff", lw=1.5, ls="--")
        ax.set_xlabel(ax_name)
        ax.set_ylabel("tradeoff trace")
        ax.legend(frameon=False, fontsize=8)
        ax.set_ylim(bottom=0.0)
    elif len(axes_spec) == 2:
        n0, n1 = axes_spec[0]["steps"], axes_spec[1]["steps"]
        extent = [
            axes_spec[1]["min"], axes_spec[1]["max"],
            axes_spec[0]["min"], axes_spec[0]["max"],
        ]
        fig, axs = plt.subplots(1, 2, figsize=_fig_size(7.2, 0.42), constrained_layout=True)
        for ax, surface, title in (
            (axs[0], quantum.reshape(n0, n1), "quantum tradeoff"),
            (axs[1], classical.reshape(n0, n1), "classical tradeoff"),
        ):
            im = ax.imshow(surface, origin="lower", aspect="auto", extent=extent, cmap="viridis")
            ax.set_xlabel(axes_spec[1]["name"])
            ax.set_ylabel(axes_spec[0]["name"])
            ax.set_title(title, fontsize=9)
            fig.colorbar(im, ax=ax, shrink=0.9)
    else:
        raise ValueError("figure rendering supports 1 or 2 sweep axes")
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_simulate_figure(estimates, truth, path) -> None:
    """Scatter of per-replication estimates with the true point marked."""
    est = np.asarray(estimates)
    fig, ax = plt.subplots(figsize=_fig_size(4.2, 0.9))
    ax.scatter(est[:, 0], est[:, 1], s=6, alpha=0.5, label="replications")
    ax.scatter([truth[0]], [truth[1]], marker="x", c="crimson", s=60, label="truth")
    ax.set_xlabel("phi estimate")
    ax.set_ylabel("fluctuation estimate")
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
