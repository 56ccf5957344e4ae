"""
Report figures: per-image comparison panels, the confusion map, FCM
convergence, and a batch summary chart.

Figures are built on bare :class:`matplotlib.figure.Figure` objects, so no
pyplot state is touched and rendering is safe in worker processes.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from matplotlib.figure import Figure

from . import imageio
from .metrics import METRIC_NAMES, TABLE_HEADERS, fmt

# TN black, TP white, FP red, FN blue
CONFUSION_COLORS = np.array([[0, 0, 0], [255, 255, 255], [230, 40, 40], [40, 90, 230]], dtype=np.uint8)

DPI = 100


def confusion_map(pred, truth, fov=None) -> np.ndarray:
    """RGB image coding each pixel as TN / TP / FP / FN."""
    pred = np.asarray(pred, dtype=bool)
    truth = np.asarray(truth, dtype=bool)
    code = np.zeros(pred.shape, dtype=np.int64)
    code[pred & truth] = 1
    code[pred & ~truth] = 2
    code[~pred & truth] = 3
    rgb = CONFUSION_COLORS[code]
    if fov is not None:
        rgb[~np.asarray(fov, dtype=bool)] = (64, 64, 64)
    return rgb


def _show(ax, img, title, cmap=None):
    ax.imshow(img, cmap=cmap, interpolation="nearest")
    ax.set_title(title, fontsize=9)
    ax.set_axis_off()


def _save(fig: Figure, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=DPI, metadata={"Software": None})
    return path


def plot_objective_history(ax, history):
    it = np.arange(1, len(history) + 1)
    ax.semilogy(it, np.maximum(np.asarray(history, dtype=float), 1e-300), "o-", ms=3, lw=1)
    ax.set_xlabel("iteration")
    ax.set_ylabel("objective")
    ax.grid(True, alpha=0.3)


def save_segmentation_figure(img, normalized, mask, result, path) -> Path:
    """Input, shade-corrected image, mask, overlay and FCM objective trace."""
    fig = Figure(figsize=(12, 6))
    axes = fig.subplots(2, 3)
    _show(axes[0, 0], img, "input")
    _show(axes[0, 1], imageio.extract_green(img), "green channel", cmap="gray")
    _show(axes[0, 2], normalized, "shade corrected", cmap="gray")
    _show(axes[1, 0], mask, "vessel mask", cmap="gray")
    _show(axes[1, 1], imageio.overlay(img, mask), "overlay")
    plot_objective_history(axes[1, 2], result.objective_history)
    status = "converged" if result.converged else "not converged"
    axes[1, 2].set_title(f"FCM: {result.iterations} iterations, {status}", fontsize=9)
    fig.tight_layout()
    return _save(fig, path)


def save_evaluation_figure(img, truth, pred, fov, row, path) -> Path:
    """Side-by-side input / ground truth / detection / confusion map."""
    fig = Figure(figsize=(12, 7))
    axes = fig.subplots(2, 3)
    _show(axes[0, 0], img, "input")
    _show(axes[0, 1], imageio.extract_green(img), "green channel", cmap="gray")
    _show(axes[0, 2], truth, "ground truth", cmap="gray")
    _show(axes[1, 0], pred, "detected vessels", cmap="gray")
    _show(axes[1, 1], imageio.overlay(img, pred), "overlay")
    _show(axes[1, 2], confusion_map(pred, truth, fov),
          "TP white, FP red, FN blue, TN black")
    m = row.metrics
    fig.suptitle(
        f"{Path(row.image).name}: Ss {fmt(m.sensitivity)}  Sp {fmt(m.specificity)}  "
        f"PPV {fmt(m.ppv)}  PLR {fmt(m.plr)}  Acc {fmt(m.accuracy)}  Dice {fmt(row.dice, 4)}",
        fontsize=10)
    fig.tight_layout()
    return _save(fig, path)


def save_summary_figure(report, path) -> Path:
    """Grouped bars of the percentage metrics per image, plus the average."""
    rows = [r for r in report.rows if r.ok]
    names = [Path(r.image).stem for r in rows]
    series = [[getattr(r.metrics, n) for n in METRIC_NAMES] for r in rows]
    if report.average is not None:
        names.append("average")
        series.append([report.average.metrics[n] for n in METRIC_NAMES])

    pct = [i for i, n in enumerate(METRIC_NAMES) if n != "plr"]
    fig = Figure(figsize=(max(6, 1.2 * len(names) + 2), 4))
    ax = fig.subplots()
    x = np.arange(len(names))
    width = 0.8 / len(pct)
    for k, i in enumerate(pct):
        vals = [np.nan if s[i] is None else float(s[i]) for s in series]
        ax.bar(x + (k - (len(pct) - 1) / 2) * width, vals, width, label=TABLE_HEADERS[i])
    ax.set_xticks(x)
    ax.set_xticklabels(names, rotation=30, ha="right", fontsize=8)
    ax.set_ylim(0, 100)
    ax.set_ylabel("%")
    ax.legend(fontsize=7, ncol=len(pct), loc="lower center", bbox_to_anchor=(0.5, 1.0))
    fig.tight_layout()
    return _save(fig, path)
