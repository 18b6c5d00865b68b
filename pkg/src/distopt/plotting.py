"""
Figures written next to the CSV output of a run.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

RC = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "lines.linewidth": 0.8,
    "savefig.dpi": 150,
}


def plot_trajectories(traj, path, title=None, reference=None):
    """One panel per state coordinate, every agent overlaid against time."""
    m = traj.x.shape[2]
    with plt.rc_context(RC):
        fig, axes = plt.subplots(m, 1, sharex=True, figsize=(6, 2.2 * m))
        axes = np.atleast_1d(axes)
        for l, ax in enumerate(axes):
            ax.plot(traj.times, traj.x[:, :, l], color="0.3", alpha=0.6)
            if reference is not None:
                ax.axhline(reference[l], color="C3", ls="--", lw=1, label="reference")
                ax.legend(loc="upper right")
            ax.set_ylabel(f"$x_{{i{l + 1}}}$")
        axes[-1].set_xlabel("t (s)")
        if title:
            axes[0].set_title(title)
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)


def plot_metrics(metrics, path, title=None):
    """Consensus, feasibility and optimality errors on a log scale."""
    t = np.array([ms.t for ms in metrics])
    series = {
        "consensus error": [ms.consensus_err for ms in metrics],
        "feasibility error": [ms.feas_err for ms in metrics],
        "$V_1$": [ms.V1 for ms in metrics],
    }
    if metrics and metrics[0].opt_dist is not None:
        series["distance to reference"] = [ms.opt_dist for ms in metrics]
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(6, 3))
        for label, ys in series.items():
            ys = np.asarray(ys, dtype=float)
            # log axis: hide exact zeros rather than clipping them
            ax.semilogy(t, np.where(ys > 0, ys, np.nan), label=label)
        ax.set_xlabel("t (s)")
        ax.legend()
        if title:
            ax.set_title(title)
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
