"""Matplotlib figure rendering for the report files.

Each function renders one PNG next to the TSV it visualizes. The TSVs
remain the source of truth; figures are a convenience for reading runs
at a glance. The Agg backend is forced so rendering works headless.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

DPI = 150


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return path


def render_roc(path, curve, calibration=None) -> Path:
    fig, ax = plt.subplots(figsize=(5, 5))
    ax.plot(curve.fpr, curve.tpr, color="tab:blue", lw=1.8, label=f"AUC = {curve.auc:.3f}")
    ax.plot([0, 1], [0, 1], color="grey", lw=0.8, ls="--")
    if calibration is not None:
        ax.scatter(
            [calibration.fpr],
            [calibration.tpr],
            color="tab:red",
            zorder=3,
            label=f"theta = {calibration.theta:.3f}",
        )
    ax.set_xlabel("False positive rate")
    ax.set_ylabel("True positive rate")
    ax.set_title("ROC (NC positive)")
    ax.legend(loc="lower right")
    return _save(fig, path)


def render_sweep(path, sweep_rows, theta: float | None = None) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    thetas = [r.theta for r in sweep_rows]
    for attr, color in (
        ("precision", "tab:blue"),
        ("recall", "tab:orange"),
        ("nc_accuracy", "tab:green"),
        ("c_accuracy", "tab:red"),
    ):
        ys = [getattr(r, attr) if getattr(r, attr) is not None else np.nan for r in sweep_rows]
        ax.plot(thetas, ys, lw=1.5, label=attr, color=color)
    if theta is not None:
        ax.axvline(theta, color="black", lw=0.8, ls=":", label="calibrated theta")
    ax.set_xlabel("theta")
    ax.set_ylabel("metric")
    ax.set_title("Threshold sweep")
    ax.legend(fontsize=8)
    return _save(fig, path)


def render_confusion(path, cm) -> Path:
    norm = cm.row_normalized()
    counts = np.array([[cm.tp, cm.fn], [cm.fp, cm.tn]])
    fig, ax = plt.subplots(figsize=(4.2, 4))
    ax.imshow(norm, cmap="Blues", vmin=0.0, vmax=1.0)
    for i in range(2):
        for j in range(2):
            share = norm[i, j]
            text = f"{counts[i, j]}\n{share:.2%}" if share == share else str(counts[i, j])
            ax.text(j, i, text, ha="center", va="center", fontsize=10)
    ax.set_xticks([0, 1], ["NC", "C"])
    ax.set_yticks([0, 1], ["NC", "C"])
    ax.set_xlabel("Predicted")
    ax.set_ylabel("Actual")
    ax.set_title("Confusion matrix")
    return _save(fig, path)


def render_importance(path, imp) -> Path:
    ranked = imp.ranking()
    names = [n for n, _ in ranked][::-1]
    values = [v for _, v in ranked][::-1]
    fig, ax = plt.subplots(figsize=(6, 0.35 * len(names) + 1.2))
    ax.barh(range(len(names)), values, color="tab:blue")
    ax.set_yticks(range(len(names)), names, fontsize=8)
    ax.set_xlabel("Mean OOB accuracy decrease")
    ax.set_title("Permutation importance")
    return _save(fig, path)


def render_correlation(path, names, matrix, title: str) -> Path:
    matrix = np.asarray(matrix, dtype=np.float64)
    fig, ax = plt.subplots(figsize=(0.45 * len(names) + 2, 0.45 * len(names) + 1.6))
    ax.imshow(matrix, cmap="RdBu_r", vmin=-1.0, vmax=1.0)
    ax.set_xticks(range(len(names)), names, rotation=90, fontsize=7)
    ax.set_yticks(range(len(names)), names, fontsize=7)
    ax.set_title(title)
    return _save(fig, path)


def render_rfe(path, trace) -> Path:
    from .rfe import presentation_order

    stages = presentation_order(trace)
    ks = [s.n_features for s in stages]
    fig, ax = plt.subplots(figsize=(6, 4))
    for attr, color in (
        ("balanced_accuracy", "tab:blue"),
        ("nc_accuracy", "tab:green"),
        ("c_accuracy", "tab:red"),
    ):
        ys = [getattr(s, attr) if getattr(s, attr) is not None else np.nan for s in stages]
        ax.plot(ks, ys, marker="o", ms=3, lw=1.4, label=attr, color=color)
    ax.axhline(trace.baseline_balanced_accuracy, color="grey", lw=0.8, ls="--", label="random baseline")
    ax.set_xlabel("Features kept")
    ax.set_ylabel("metric")
    ax.set_title("Recursive feature elimination")
    ax.legend(fontsize=8)
    return _save(fig, path)
