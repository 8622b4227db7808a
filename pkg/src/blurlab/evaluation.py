"""Benchmark metrics for blur maps: PR curves, ODS, OIS, and AP.

A pixel is predicted blurry at threshold t when its map value is >= t.
Thresholds live on the uniform grid {j / (n - 1) : j = 0..n-1} (n = 256 by
default). Counts are accumulated over the whole dataset before computing
precision and recall (the fixed-contour-threshold convention), so images
with many pixels weigh proportionally.

Conventions: precision is 1 when nothing is predicted positive, recall is 1
when there are no positives to find, and F = 2PR / (P + R) with F = 0 when
both P and R vanish. ODS picks the best-F grid threshold (ties resolve to
the lowest threshold); OIS picks the best threshold per image and averages
the per-image F, scoring an image without positive pixels 1 at thresholds
that predict nothing and 0 elsewhere. AP is the 101-point interpolated
area: the mean over recall levels {0, 0.01, .., 1} of the maximum precision
among curve points whose recall reaches that level, 0 if none does.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import DataError, ShapeError

DEFAULT_N_THRESHOLDS = 256


def threshold_grid(n_thresholds=DEFAULT_N_THRESHOLDS):
    if n_thresholds < 2:
        raise DataError(f"need at least 2 thresholds, got {n_thresholds}")
    return np.arange(n_thresholds) / (n_thresholds - 1)


def _validate_pairs(maps, gts):
    if len(maps) != len(gts):
        raise ShapeError(f"{len(maps)} maps vs {len(gts)} ground truths")
    if len(maps) == 0:
        raise DataError("metric evaluation requires at least one image")
    for i, (m, g) in enumerate(zip(maps, gts)):
        m = np.asarray(m)
        g = np.asarray(g)
        if m.shape != g.shape or m.ndim != 2:
            raise ShapeError(f"pair {i}: map {m.shape} vs gt {g.shape}")
        if m.size == 0:
            raise DataError(f"pair {i}: empty image")
        if np.min(m) < 0 or np.max(m) > 1:
            raise DataError(f"pair {i}: map values outside [0, 1]")
        if not np.all((g == 0) | (g == 1)):
            raise DataError(f"pair {i}: ground truth must be binary (0/1)")


def _counts_one(map_, gt, grid):
    """(tp, pred_pos, n_pos) per threshold for one image, via sorted search."""
    m = np.asarray(map_, dtype=np.float64).ravel()
    g = np.asarray(gt).ravel().astype(bool)
    pos_sorted = np.sort(m[g])
    all_sorted = np.sort(m)
    tp = pos_sorted.size - np.searchsorted(pos_sorted, grid, side="left")
    pred = all_sorted.size - np.searchsorted(all_sorted, grid, side="left")
    return tp.astype(np.int64), pred.astype(np.int64), int(pos_sorted.size)


def _prf(tp, fp, fn):
    pred = tp + fp
    withpos = tp + fn
    precision = np.where(pred > 0, tp / np.maximum(pred, 1), 1.0)
    recall = np.where(withpos > 0, tp / np.maximum(withpos, 1), 1.0)
    denom = precision + recall
    f_score = np.where(denom > 0, 2.0 * precision * recall / np.maximum(denom, 1e-300), 0.0)
    return precision, recall, f_score


@dataclass
class PRCurve:
    """Aggregated dataset counts and ratios per grid threshold."""

    thresholds: np.ndarray
    tp: np.ndarray
    fp: np.ndarray
    fn: np.ndarray
    precision: np.ndarray
    recall: np.ndarray
    f_score: np.ndarray

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["threshold", "tp", "fp", "fn", "precision", "recall", "f"])
            for row in zip(self.thresholds, self.tp, self.fp, self.fn,
                           self.precision, self.recall, self.f_score):
                writer.writerow([
                    repr(float(row[0])),
                    *(int(v) for v in row[1:4]),
                    *(repr(float(v)) for v in row[4:]),
                ])


def pr_curve(maps, gts, n_thresholds=DEFAULT_N_THRESHOLDS):
    """Dataset-aggregated precision/recall/F over the threshold grid."""
    _validate_pairs(maps, gts)
    grid = threshold_grid(n_thresholds)
    tp = np.zeros(n_thresholds, dtype=np.int64)
    pred = np.zeros(n_thresholds, dtype=np.int64)
    n_pos = 0
    for m, g in zip(maps, gts):
        t, p, np_ = _counts_one(m, g, grid)
        tp += t
        pred += p
        n_pos += np_
    fp = pred - tp
    fn = n_pos - tp
    precision, recall, f_score = _prf(tp, fp, fn)
    return PRCurve(grid, tp, fp, fn, precision, recall, f_score)


def ods(curve):
    """Best fixed threshold over the dataset: returns (threshold, f)."""
    j = int(np.argmax(curve.f_score))  # first max -> lowest threshold
    return float(curve.thresholds[j]), float(curve.f_score[j])


def ois(maps, gts, n_thresholds=DEFAULT_N_THRESHOLDS):
    """Per-image best-threshold F, averaged. Returns (f, per_image rows).

    Rows are (index, best_threshold, best_f). An image with no positive
    ground-truth pixels scores F = 1 at thresholds predicting nothing and
    F = 0 elsewhere.
    """
    _validate_pairs(maps, gts)
    grid = threshold_grid(n_thresholds)
    rows = []
    for i, (m, g) in enumerate(zip(maps, gts)):
        tp, pred, n_pos = _counts_one(m, g, grid)
        if n_pos == 0:
            f = np.where(pred == 0, 1.0, 0.0)
        else:
            _, _, f = _prf(tp, pred - tp, n_pos - tp)
        j = int(np.argmax(f))
        rows.append((i, float(grid[j]), float(f[j])))
    mean_f = float(np.mean([r[2] for r in rows]))
    return mean_f, rows


def average_precision(curve):
    """101-point interpolated average precision of an aggregated curve."""
    levels = np.arange(101) / 100.0
    total = 0.0
    for r in levels:
        reachable = curve.precision[curve.recall >= r]
        total += float(reachable.max()) if reachable.size else 0.0
    return total / levels.size


@dataclass
class EvalReport:
    ods_threshold: float
    ods_f: float
    ois_f: float
    ap: float
    n_images: int
    per_image: list

    def to_dict(self):
        return {
            "ods_threshold": self.ods_threshold,
            "ods_f": self.ods_f,
            "ois_f": self.ois_f,
            "ap": self.ap,
            "n_images": self.n_images,
            "per_image": [
                {"index": i, "best_threshold": t, "best_f": f} for i, t, f in self.per_image
            ],
        }


def evaluate(maps, gts, n_thresholds=DEFAULT_N_THRESHOLDS):
    """Full benchmark summary. Returns (EvalReport, PRCurve)."""
    curve = pr_curve(maps, gts, n_thresholds)
    ods_t, ods_f = ods(curve)
    ois_f, rows = ois(maps, gts, n_thresholds)
    ap = average_precision(curve)
    return EvalReport(ods_t, ods_f, ois_f, ap, len(maps), rows), curve
