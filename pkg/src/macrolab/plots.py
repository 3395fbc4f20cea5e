"""Matplotlib figure rendering for the CLI report path.

Every subcommand that writes delimited output also renders a figure next
to it: trajectory panels, phase-map heat maps, eigenvalue decay plots and
walk overlays.  The Agg backend is forced so rendering works headless.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.colors import ListedColormap  # noqa: E402
from matplotlib.patches import Patch  # noqa: E402

from .economy import Trajectory  # noqa: E402
from .phases import PhaseLabel  # noqa: E402
from .sloppy import SpectrumReport, WalkPath  # noqa: E402
from .sweep import PhaseMap  # noqa: E402

LABEL_COLORS = {
    PhaseLabel.FE: "#2a9d8f",
    PhaseLabel.FU: "#264653",
    PhaseLabel.EC: "#e9c46a",
    PhaseLabel.RU: "#f4a261",
    PhaseLabel.HYPER: "#e76f51",
    PhaseLabel.COLLAPSE: "#9b2226",
    PhaseLabel.UNCLASSIFIED: "#bbbbbb",
}


def save_trajectory_figure(path: Path, traj: Trajectory,
                           shock_windows=None) -> None:
    fig, axes = plt.subplots(3, 1, figsize=(9, 7), sharex=True)
    t = traj.t
    axes[0].plot(t, traj.u, lw=0.8, color="#264653")
    axes[0].set_ylabel("unemployment")
    axes[0].set_ylim(-0.02, 1.02)
    axes[1].plot(t, traj.pi, lw=0.8, color="#e76f51")
    axes[1].axhline(0.0, color="grey", lw=0.5)
    axes[1].set_ylabel("inflation / step")
    axes[2].plot(t, traj.rho, lw=0.8, color="#2a9d8f", label="policy rate")
    axes[2].plot(t, traj.tau, lw=0.8, color="#e9c46a", label="trust")
    axes[2].set_ylabel("rate / trust")
    axes[2].set_xlabel("step")
    axes[2].legend(loc="upper right", fontsize=8)
    if shock_windows:
        for ax in axes:
            for lo, hi in shock_windows:
                ax.axvspan(lo, hi, color="#cccccc", alpha=0.4, lw=0)
    if traj.blown_up:
        axes[0].set_title(f"terminated by numerical blow-up at step "
                          f"{traj.blowup_step}", fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_phase_map_figure(path: Path, pm: PhaseMap) -> None:
    order = list(PhaseLabel)
    idx = {lb: k for k, lb in enumerate(order)}
    n1 = len(pm.spec.axis1.values)
    n2 = len(pm.spec.axis2.values)
    grid = np.zeros((n2, n1))
    for i1 in range(n1):
        for i2 in range(n2):
            grid[i2, i1] = idx[pm.cells[i1][i2].label]
    cmap = ListedColormap([LABEL_COLORS[lb] for lb in order])
    fig, ax = plt.subplots(figsize=(7.5, 6))
    ax.imshow(grid, origin="lower", aspect="auto", cmap=cmap,
              vmin=-0.5, vmax=len(order) - 0.5, interpolation="nearest")
    ax.set_xticks(range(n1))
    ax.set_xticklabels([_tick(v) for v in pm.spec.axis1.values],
                       rotation=90, fontsize=7)
    ax.set_yticks(range(n2))
    ax.set_yticklabels([_tick(v) for v in pm.spec.axis2.values], fontsize=7)
    ax.set_xlabel(pm.spec.axis1.name)
    ax.set_ylabel(pm.spec.axis2.name)
    present = {c.label for row in pm.cells for c in row}
    handles = [Patch(color=LABEL_COLORS[lb], label=str(lb))
               for lb in order if lb in present]
    ax.legend(handles=handles, loc="upper left", bbox_to_anchor=(1.01, 1.0),
              fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def _tick(v: float) -> str:
    if np.isinf(v):
        return "inf"
    return f"{v:.3g}"


def save_spectrum_figure(path: Path, report: SpectrumReport) -> None:
    lam = np.maximum(report.eigenvalues, 0.0)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))
    ranks = np.arange(1, lam.shape[0] + 1)
    positive = lam > 0
    ax1.semilogy(ranks[positive], lam[positive], "o-", color="#264653")
    ax1.set_xlabel("rank")
    ax1.set_ylabel("eigenvalue")
    ax1.set_xticks(ranks)
    ax2.imshow(np.abs(report.eigenvectors), cmap="viridis", aspect="auto")
    ax2.set_xticks(range(len(report.param_names)))
    ax2.set_xticklabels(report.param_names, rotation=90, fontsize=7)
    ax2.set_ylabel("eigenvector rank")
    ax2.set_title("|components|", fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_walk_figure(path: Path, walk: WalkPath) -> None:
    pts = np.array([pt.x_log for pt in walk.points])
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))
    if pts.shape[1] >= 2:
        x, y = pts[:, 0], pts[:, 1]
        ax1.set_xlabel(f"log {walk.param_names[0]}")
        ax1.set_ylabel(f"log {walk.param_names[1]}")
    else:
        x, y = np.arange(pts.shape[0]), pts[:, 0]
        ax1.set_xlabel("step")
        ax1.set_ylabel(f"log {walk.param_names[0]}")
    ax1.plot(x, y, "-", color="#888888", lw=0.8, zorder=1)
    colors = [LABEL_COLORS[pt.label] for pt in walk.points]
    ax1.scatter(x, y, c=colors, s=36, zorder=2, edgecolors="black",
                linewidths=0.4)
    ax1.set_title(f"stop: {walk.stop_reason}", fontsize=9)
    lam1 = [pt.spectrum.eigenvalues[0] for pt in walk.points]
    ax2.semilogy(lam1, "o-", color="#264653", label="lambda_1")
    if pts.shape[1] > 1:
        lam2 = [max(pt.spectrum.eigenvalues[1], 1e-300)
                for pt in walk.points]
        ax2.semilogy(lam2, "o-", color="#e9c46a", label="lambda_2")
    ax2.set_xlabel("walk step")
    ax2.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
