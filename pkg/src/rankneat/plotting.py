"""Report figures: accuracy-over-iterations curves with confidence bands."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

RC_PARAMS = {
    "figure.figsize": (6.4, 4.0),
    "axes.labelsize": 11,
    "axes.titlesize": 11,
    "legend.fontsize": 9,
    "xtick.labelsize": 9,
    "ytick.labelsize": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "savefig.dpi": 150,
    "savefig.bbox": "tight",
}

CHANCE_LEVEL = 0.5


def _curves(report: dict):
    rows = report["per_iteration"]
    iterations = np.array([r["iteration"] for r in rows])
    mean = np.array([r["mean_test_acc"] for r in rows])
    ci = np.array([r["ci_test_acc"] for r in rows])
    return iterations, mean, ci


def save_accuracy_figure(reports: list[dict], path) -> None:
    """One panel: mean test accuracy per trainer with its 95% CI band,
    plus the dotted 50% chance baseline."""
    with plt.rc_context(RC_PARAMS):
        fig, ax = plt.subplots()
        for report in reports:
            iterations, mean, ci = _curves(report)
            label = f"{report['trainer']} (P_t={report['P_t']})"
            line, = ax.plot(iterations, mean, label=label)
            ax.fill_between(iterations, mean - ci, mean + ci,
                            color=line.get_color(), alpha=0.2, linewidth=0)
        ax.axhline(CHANCE_LEVEL, color="black", linestyle=":", linewidth=1,
                   label="chance (50%)")
        ax.set_xlabel("iterations")
        ax.set_ylabel("test accuracy")
        ax.legend()
        fig.savefig(path)
        plt.close(fig)


def save_train_test_figure(report: dict, path) -> None:
    """Train vs test mean accuracy for one report; gaps flag overfitting."""
    rows = report["per_iteration"]
    iterations = np.array([r["iteration"] for r in rows])
    with plt.rc_context(RC_PARAMS):
        fig, ax = plt.subplots()
        ax.plot(iterations, [r["mean_train_acc"] for r in rows],
                label="train", linestyle="--")
        ax.plot(iterations, [r["mean_test_acc"] for r in rows], label="test")
        ax.axhline(CHANCE_LEVEL, color="black", linestyle=":", linewidth=1)
        ax.set_xlabel("iterations")
        ax.set_ylabel("accuracy")
        ax.set_title(f"{report['trainer']} (P_t={report['P_t']})")
        ax.legend()
        fig.savefig(path)
        plt.close(fig)
