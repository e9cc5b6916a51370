"""DET and CMC figures written next to the CSV exports."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "lines.linewidth": 1.4,
    "savefig.dpi": 150,
}
FIGSIZE = (3.6, 3.0)


def plot_det(report, path, label=None) -> Path:
    far = np.array([p[0] for p in report.det_points])
    frr = np.array([p[1] for p in report.det_points])
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=FIGSIZE)
        ax.plot(far * 100, frr * 100, drawstyle="steps-post", label=label or "DET")
        ax.plot([0, 100], [0, 100], ls=":", lw=0.8, color="0.5")
        ax.plot([report.eer * 100], [report.eer * 100], "o", ms=4, color="C3", label=f"EER {report.eer:.2%}")
        ax.set_xlabel("False acceptance rate (%)")
        ax.set_ylabel("False rejection rate (%)")
        ax.set_xlim(0, 100)
        ax.set_ylim(0, 100)
        ax.legend(frameon=False)
        fig.tight_layout()
        fig.savefig(path, metadata={"Software": None})
        plt.close(fig)
    return Path(path)


def plot_cmc(report, path, label=None) -> Path:
    acc = np.asarray(report.rank_accuracies)
    ranks = np.arange(1, len(acc) + 1)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=FIGSIZE)
        ax.plot(ranks, acc * 100, marker=".", ms=3, label=label or "CMC")
        if report.r1_one_to_one is not None:
            ax.axhline(report.r1_one_to_one * 100, ls="--", lw=0.8, color="C2", label="R1, one-to-one")
        ax.set_xlabel("Rank")
        ax.set_ylabel("Identification rate (%)")
        ax.set_xlim(1, max(len(acc), 2))
        ax.set_ylim(0, 101)
        ax.legend(frameon=False, loc="lower right")
        fig.tight_layout()
        fig.savefig(path, metadata={"Software": None})
        plt.close(fig)
    return Path(path)
