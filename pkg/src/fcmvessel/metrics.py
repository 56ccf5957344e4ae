"""
Confusion counts against ground truth, the five summary metrics, and
batch reports.

Metrics are exact :class:`fractions.Fraction` values expressed in percent.
PLR is kept on the scale of the published results table (the likelihood
ratio times 100); :attr:`MetricsReport.plr_ratio` gives the plain ratio.
A metric whose denominator is zero is ``None``.
"""

from __future__ import annotations

import csv
import dataclasses
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import imageio
from .segmentation import segment_vessels

log = logging.getLogger(__name__)

METRIC_NAMES = ("sensitivity", "specificity", "ppv", "plr", "accuracy")
TABLE_HEADERS = ("Sensitivity (Ss)", "Specificity (Sp)", "PPV (Pv)", "PLR (PR)", "Accuracy (%)")
CSV_COLUMNS = ("image", "tp", "fp", "fn", "tn", "sensitivity", "specificity", "ppv",
               "plr_paper_scale", "plr_ratio", "accuracy", "dice", "status")
NULL = "null"


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def swapped(self) -> "ConfusionCounts":
        """Counts with prediction and truth exchanged."""
        return ConfusionCounts(self.tp, self.fn, self.fp, self.tn)

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(self.tp + other.tp, self.fp + other.fp,
                               self.fn + other.fn, self.tn + other.tn)


@dataclass(frozen=True)
class MetricsReport:
    sensitivity: Optional[Fraction]
    specificity: Optional[Fraction]
    ppv: Optional[Fraction]
    plr: Optional[Fraction]
    accuracy: Optional[Fraction]

    @property
    def plr_ratio(self) -> Optional[Fraction]:
        return None if self.plr is None else self.plr / 100

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in METRIC_NAMES}


def _ratio(num: int, den: int) -> Optional[Fraction]:
    return None if den == 0 else Fraction(num, den)


def _same_shape(*arrays):
    shapes = {a.shape for a in arrays}
    if len(shapes) != 1:
        raise ValueError(f"mask dimensions differ: {sorted(shapes)}")


def confusion(pred, truth, fov=None) -> ConfusionCounts:
    """Pixel counts of pred/truth agreement, restricted to ``fov`` if given."""
    pred = np.asarray(pred, dtype=bool)
    truth = np.asarray(truth, dtype=bool)
    if fov is None:
        _same_shape(pred, truth)
    else:
        fov = np.asarray(fov, dtype=bool)
        _same_shape(pred, truth, fov)
        pred, truth = pred[fov], truth[fov]
    tp = int(np.count_nonzero(pred & truth))
    fp = int(np.count_nonzero(pred & ~truth))
    fn = int(np.count_nonzero(~pred & truth))
    tn = int(pred.size) - tp - fp - fn
    return ConfusionCounts(tp, fp, fn, tn)


def compute_metrics(c: ConfusionCounts) -> MetricsReport:
    if c.total == 0:
        raise ValueError("cannot compute metrics from all-zero counts")
    ss = _ratio(c.tp, c.tp + c.fn)
    sp = _ratio(c.tn, c.tn + c.fp)
    fpr = _ratio(c.fp, c.fp + c.tn)
    plr = None
    if ss is not None and fpr:
        plr = 100 * ss / fpr
    pct = lambda f: None if f is None else 100 * f  # noqa: E731
    return MetricsReport(
        sensitivity=pct(ss),
        specificity=pct(sp),
        ppv=pct(_ratio(c.tp, c.tp + c.fp)),
        plr=plr,
        accuracy=pct(Fraction(c.tp + c.tn, c.total)),
    )


def dice_from_counts(c: ConfusionCounts) -> Fraction:
    den = 2 * c.tp + c.fp + c.fn
    return Fraction(1) if den == 0 else Fraction(2 * c.tp, den)


def dice(pred, truth) -> float:
    """Dice overlap ``2 tp / (2 tp + fp + fn)``; 1.0 when both masks are empty."""
    return float(dice_from_counts(confusion(pred, truth)))


# --- batch evaluation -------------------------------------------------------

@dataclass
class ImageRow:
    image: str
    counts: Optional[ConfusionCounts] = None
    metrics: Optional[MetricsReport] = None
    dice: Optional[Fraction] = None
    iterations: Optional[int] = None
    converged: Optional[bool] = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass
class AverageRow:
    """Per-image mean of each metric, with the number of rows left out."""
    metrics: dict
    dice: Optional[Fraction]
    n_images: int
    excluded: dict = field(default_factory=dict)


@dataclass
class BatchReport:
    rows: list
    average: Optional[AverageRow] = None
    pooled: Optional[MetricsReport] = None
    pooled_counts: Optional[ConfusionCounts] = None


def _mean(values) -> Optional[Fraction]:
    values = list(values)
    return sum(values, Fraction(0)) / len(values) if values else None


def average_rows(rows: Sequence[ImageRow]) -> Optional[AverageRow]:
    good = [r for r in rows if r.ok]
    if not good:
        return None
    means, excluded = {}, {}
    for name in METRIC_NAMES:
        vals = [getattr(r.metrics, name) for r in good]
        defined = [v for v in vals if v is not None]
        means[name] = _mean(defined)
        excluded[name] = len(vals) - len(defined)
    return AverageRow(metrics=means, dice=_mean(r.dice for r in good),
                      n_images=len(good), excluded=excluded)


def summarize(rows: Sequence[ImageRow]) -> BatchReport:
    rows = list(rows)
    good = [r for r in rows if r.ok]
    report = BatchReport(rows=rows, average=average_rows(rows))
    if good:
        pooled = good[0].counts
        for r in good[1:]:
            pooled = pooled + r.counts
        report.pooled_counts = pooled
        report.pooled = compute_metrics(pooled)
    return report


def evaluate_masks(name: str, pred, truth, fov=None) -> ImageRow:
    counts = confusion(pred, truth, fov)
    return ImageRow(image=name, counts=counts, metrics=compute_metrics(counts),
                    dice=dice_from_counts(counts))


def evaluate_pair(pair, cfg, figure_dir=None) -> ImageRow:
    """Segment one image and score it; failures are captured in the row."""
    image_path, truth_path = pair[0], pair[1]
    fov_path = pair[2] if len(pair) > 2 and pair[2] else None
    try:
        img = imageio.load_rgb(image_path)
        truth = imageio.load_mask(truth_path)
        fov = imageio.load_mask(fov_path) if fov_path else cfg.fov_mask
        if truth.shape != img.shape[:2]:
            raise ValueError(f"truth {truth.shape} does not match image {img.shape[:2]}")
        run_cfg = dataclasses.replace(cfg, fov_mask=fov)
        pred, result = segment_vessels(img, run_cfg)
        row = evaluate_masks(str(image_path), pred, truth, fov)
        row.iterations, row.converged = result.iterations, result.converged
        if figure_dir is not None:
            from .plotting import save_evaluation_figure
            save_evaluation_figure(img, truth, pred, fov, row,
                                   Path(figure_dir) / f"{Path(image_path).stem}_eval.png")
        return row
    except Exception as exc:  # isolate per-image failures from the batch
        log.warning("evaluation of %s failed: %s", image_path, exc)
        return ImageRow(image=str(image_path), error=f"{type(exc).__name__}: {exc}")


def batch_evaluate(pairs, cfg, workers: int = 1, figure_dir=None) -> BatchReport:
    """Evaluate every (image, truth[, fov]) path tuple; rows keep input order.

    With ``figure_dir`` set, a per-image comparison figure is written there.
    """
    pairs = list(pairs)
    n = len(pairs)
    if workers > 1 and n > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(evaluate_pair, pairs, [cfg] * n, [figure_dir] * n))
    else:
        rows = [evaluate_pair(p, cfg, figure_dir) for p in pairs]
    return summarize(rows)


# --- report output ----------------------------------------------------------

def fmt(value, digits: int = 2, null: str = NULL) -> str:
    return null if value is None else f"{float(value):.{digits}f}"


def format_table(report: BatchReport) -> str:
    """Plain-text table with the five metric columns, one row per image."""
    names = [Path(r.image).name for r in report.rows] + ["Average", "Pooled"]
    width = max([len("Image")] + [len(n) for n in names])
    head = " | ".join([f"{'Image':<{width}}"] + list(TABLE_HEADERS))
    lines = [head, "-" * len(head)]

    def line(label, values):
        cells = [f"{fmt(v, null='n/a'):>{len(h)}}" for v, h in zip(values, TABLE_HEADERS)]
        return " | ".join([f"{label:<{width}}"] + cells)

    for r in report.rows:
        label = Path(r.image).name
        if r.ok:
            lines.append(line(label, [getattr(r.metrics, n) for n in METRIC_NAMES]))
        else:
            lines.append(f"{label:<{width}} | FAILED: {r.error}")
    if report.average is not None:
        lines.append("-" * len(head))
        lines.append(average_line(report, width))
        lines.append(line("Pooled", [getattr(report.pooled, n) for n in METRIC_NAMES]))
    return "\n".join(lines) + "\n"


def average_line(report: BatchReport, width: int = 0) -> str:
    avg = report.average
    cells = [f"{fmt(avg.metrics[n], null='n/a'):>{len(h)}}" for n, h in zip(METRIC_NAMES, TABLE_HEADERS)]
    return " | ".join([f"{'Average':<{width}}"] + cells)


def _csv_metrics(m: dict, counts, dice_value, status):
    plr = m["plr"]
    return [
        *(("", "", "", "") if counts is None else (counts.tp, counts.fp, counts.fn, counts.tn)),
        fmt(m["sensitivity"]), fmt(m["specificity"]), fmt(m["ppv"]),
        fmt(plr), fmt(None if plr is None else plr / 100, 4),
        fmt(m["accuracy"]), fmt(dice_value, 4), status,
    ]


def write_csv(report: BatchReport, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in report.rows:
            if r.ok:
                w.writerow([r.image, *_csv_metrics(r.metrics.as_dict(), r.counts, r.dice, "ok")])
            else:
                w.writerow([r.image] + [""] * (len(CSV_COLUMNS) - 2) + [f"failed: {r.error}"])
        if report.average is not None:
            avg = report.average
            skipped = ";".join(f"{k}={v}" for k, v in avg.excluded.items() if v)
            status = f"mean of {avg.n_images}" + (f"; excluded {skipped}" if skipped else "")
            w.writerow(["average", *_csv_metrics(avg.metrics, None, avg.dice, status)])
            pooled_dice = dice_from_counts(report.pooled_counts)
            w.writerow(["pooled", *_csv_metrics(report.pooled.as_dict(), report.pooled_counts,
                                                pooled_dice, "pooled counts")])
