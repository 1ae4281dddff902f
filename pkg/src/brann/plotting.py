"""PNG figures written next to the CSV reports.

The CSVs stay the source of truth; every figure is drawn from data that is
also written to disk. Matplotlib runs on the non-interactive Agg backend.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "figure.figsize": (5.0, 3.4),
    "figure.dpi": 100,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 9,
    "legend.fontsize": 8,
    "lines.linewidth": 1.2,
    "savefig.bbox": "tight",
}


def _save(fig, path) -> Path:
    path = Path(path)
    # no version stamp in the metadata, so reruns are byte-identical
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return path


def plot_trace(trace, path, title: str = "") -> Path:
    """Objective per epoch (log scale) and, for trainbr, the effective parameter count."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        epochs = trace.column("epoch")
        obj = np.maximum(np.asarray(trace.column("objective")), 1e-300)
        ax.semilogy(epochs, obj, color="C0", label="objective")
        ax.set_xlabel("epoch")
        ax.set_ylabel("objective")
        alphas = np.asarray(trace.column("alpha"))
        if np.any(alphas > 0):
            ax2 = ax.twinx()
            ax2.plot(epochs, trace.column("gamma"), color="C1", label="gamma")
            ax2.set_ylabel("effective parameters")
            ax2.grid(False)
        if title:
            ax.set_title(title)
        return _save(fig, path)


def plot_regression(y_true, y_pred, path, units: str = "mm", title: str = "") -> Path:
    """Predicted vs measured with the identity line."""
    t = np.asarray(y_true, dtype=float).reshape(-1)
    p = np.asarray(y_pred, dtype=float).reshape(-1)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(3.6, 3.4))
        lo, hi = min(t.min(), p.min()), max(t.max(), p.max())
        ax.plot([lo, hi], [lo, hi], color="0.5", linestyle="--", linewidth=0.8)
        ax.scatter(t, p, s=10, color="C0")
        ax.set_xlabel(f"measured ({units})")
        ax.set_ylabel(f"predicted ({units})")
        if title:
            ax.set_title(title)
        return _save(fig, path)


def plot_sweep(labels: Sequence[str], train_vals: Sequence[float], test_vals: Sequence[float],
               path, metric: str = "rmse", axis_name: str = "") -> Path:
    """Train and test metric per grid point as grouped bars."""
    x = np.arange(len(labels))
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(max(5.0, 0.5 * len(labels) + 2), 3.4))
        ax.bar(x - 0.2, train_vals, width=0.4, label="train", color="C0")
        ax.bar(x + 0.2, test_vals, width=0.4, label="test", color="C1")
        ax.set_xticks(x, labels, rotation=45 if len(labels) > 5 else 0, ha="right" if len(labels) > 5 else "center")
        ax.set_ylabel(metric)
        if axis_name:
            ax.set_xlabel(axis_name)
        ax.legend()
        return _save(fig, path)


def plot_ranking(features: Sequence[str], weights: Sequence[float], path) -> Path:
    """Horizontal bars of the reporting weight, most important input on top."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5.0, max(2.0, 0.22 * len(features) + 1)))
        y = np.arange(len(features))[::-1]
        ax.barh(y, weights, color="C0")
        ax.set_yticks(y, features)
        ax.set_xlabel("weight")
        return _save(fig, path)


def plot_classification(vb_pred, labels_true, threshold: float, path) -> Path:
    """Predicted wear per sample against the breakage threshold; true breakage marked in red."""
    p = np.asarray(vb_pred, dtype=float).reshape(-1)
    broken = np.array([str(getattr(lbl, "value", lbl)) == "broken" for lbl in labels_true])
    idx = np.arange(1, p.size + 1)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.axhline(threshold, color="0.3", linestyle="--", linewidth=0.8, label=f"threshold {threshold:g} mm")
        ax.scatter(idx[~broken], p[~broken], s=14, color="C0", label="unbroken (true)")
        ax.scatter(idx[broken], p[broken], s=14, color="C3", label="broken (true)")
        ax.set_xlabel("sample")
        ax.set_ylabel("predicted VB (mm)")
        ax.legend()
        return _save(fig, path)
