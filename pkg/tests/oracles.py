"""Independent brute-force reference implementations for the test suite.

Everything here is written the slow, obvious way (explicit loops, direct
formulas) on purpose: these functions are the ground truth the vectorized
library code is checked against, so they must not share any machinery
with it.
"""

import numpy as np


def conv2d_naive(x, weight, bias, pad):
    """Direct six-loop stride-1 cross-correlation of an NCHW batch."""
    n, c, h, w = x.shape
    out_c, in_c, k, _ = weight.shape
    assert c == in_c
    xp = np.zeros((n, c, h + 2 * pad, w + 2 * pad), dtype=x.dtype)
    xp[:, :, pad:pad + h, pad:pad + w] = x
    oh = h + 2 * pad - k + 1
    ow = w + 2 * pad - k + 1
    y = np.zeros((n, out_c, oh, ow), dtype=np.float64)
    for b in range(n):
        for o in range(out_c):
            for i in range(oh):
                for j in range(ow):
                    acc = 0.0
                    for ci in range(c):
                        for ki in range(k):
                            for kj in range(k):
                                acc += weight[o, ci, ki, kj] * xp[b, ci, i + ki, j + kj]
                    y[b, o, i, j] = acc + bias[o]
    return y


def maxpool2x2_naive(x):
    """Direct 2x2 stride-2 max pooling."""
    n, c, h, w = x.shape
    y = np.zeros((n, c, h // 2, w // 2), dtype=x.dtype)
    for b in range(n):
        for ci in range(c):
            for i in range(h // 2):
                for j in range(w // 2):
                    y[b, ci, i, j] = x[b, ci, 2 * i:2 * i + 2, 2 * j:2 * j + 2].max()
    return y


def bilinear_upsample_naive(x, s):
    """Half-pixel-aligned bilinear interpolation with edge clamping.

    For each output pixel p the source coordinate is (p + 0.5)/s - 0.5;
    weights of the two bracketing source pixels are the linear hat
    max(0, 1 - |src - i|) with out-of-range indices clamped.
    """
    n, c, h, w = x.shape
    out = np.zeros((n, c, s * h, s * w), dtype=np.float64)
    for i in range(s * h):
        sy = (i + 0.5) / s - 0.5
        y0 = int(np.floor(sy))
        fy = sy - y0
        y0c = min(max(y0, 0), h - 1)
        y1c = min(max(y0 + 1, 0), h - 1)
        for j in range(s * w):
            sx = (j + 0.5) / s - 0.5
            x0 = int(np.floor(sx))
            fx = sx - x0
            x0c = min(max(x0, 0), w - 1)
            x1c = min(max(x0 + 1, 0), w - 1)
            out[:, :, i, j] = (
                (1 - fy) * (1 - fx) * x[:, :, y0c, x0c]
                + (1 - fy) * fx * x[:, :, y0c, x1c]
                + fy * (1 - fx) * x[:, :, y1c, x0c]
                + fy * fx * x[:, :, y1c, x1c]
            )
    return out


def numeric_grad(f, arr, eps=1e-5):
    """Central-difference gradient of scalar f() with respect to arr entries."""
    g = np.zeros_like(arr, dtype=np.float64)
    it = np.nditer(arr, flags=["multi_index"])
    while not it.finished:
        i = it.multi_index
        orig = arr[i]
        arr[i] = orig + eps
        fp = f()
        arr[i] = orig - eps
        fm = f()
        arr[i] = orig
        g[i] = (fp - fm) / (2 * eps)
        it.iternext()
    return g


def prf_naive(tp, fp, fn):
    """Precision/recall/F with the documented degenerate conventions."""
    p = 1.0 if tp + fp == 0 else tp / (tp + fp)
    r = 1.0 if tp + fn == 0 else tp / (tp + fn)
    f = 0.0 if p + r == 0 else 2.0 * p * r / (p + r)
    return p, r, f


def counts_naive(map_, gt, t):
    """TP/FP/FN of one map at one threshold by direct comparison."""
    pred = np.asarray(map_) >= t
    g = np.asarray(gt).astype(bool)
    tp = int(np.sum(pred & g))
    fp = int(np.sum(pred & ~g))
    fn = int(np.sum(~pred & g))
    return tp, fp, fn


def metrics_naive(maps, gts, n_thresholds):
    """Threshold-scan ODS/OIS/AP re-implementation.

    Returns a dict with per-threshold aggregated counts and the three
    summary scores, computed with explicit loops over the grid.
    """
    grid = [j / (n_thresholds - 1) for j in range(n_thresholds)]
    agg = []
    for t in grid:
        tp = fp = fn = 0
        for m, g in zip(maps, gts):
            a, b, c = counts_naive(m, g, t)
            tp += a
            fp += b
            fn += c
        agg.append((tp, fp, fn))
    fs = [prf_naive(*row)[2] for row in agg]
    best = max(range(len(grid)), key=lambda j: (fs[j], -j))  # ties -> lowest t
    ods_t, ods_f = grid[best], fs[best]

    per_image_best = []
    for m, g in zip(maps, gts):
        best_f = -1.0
        for t in grid:
            tp, fp, fn = counts_naive(m, g, t)
            if tp + fn == 0:
                f = 1.0 if tp + fp == 0 else 0.0
            else:
                f = prf_naive(tp, fp, fn)[2]
            best_f = max(best_f, f)
        per_image_best.append(best_f)
    ois = sum(per_image_best) / len(per_image_best)

    ps = [prf_naive(*row)[0] for row in agg]
    rs = [prf_naive(*row)[1] for row in agg]
    total = 0.0
    for level in range(101):
        r = level / 100.0
        cands = [p for p, rr in zip(ps, rs) if rr >= r]
        total += max(cands) if cands else 0.0
    ap = total / 101.0

    return {
        "counts": agg,
        "precision": ps,
        "recall": rs,
        "f": fs,
        "ods_threshold": ods_t,
        "ods_f": ods_f,
        "ois_f": ois,
        "ap": ap,
    }


def masked_gaussian_naive(image, mask, sigma):
    """Dense renormalized masked Gaussian blur (separable kernel, loops)."""
    radius = int(np.ceil(3.0 * sigma))
    d = np.arange(-radius, radius + 1)
    g1 = np.exp(-d.astype(np.float64) ** 2 / (2.0 * sigma * sigma))
    ker = np.outer(g1, g1)
    c, h, w = image.shape
    out = image.astype(np.float64).copy()
    for i in range(h):
        for j in range(w):
            if not mask[i, j]:
                continue
            num = np.zeros(c)
            den = 0.0
            for di in range(-radius, radius + 1):
                for dj in range(-radius, radius + 1):
                    ii, jj = i + di, j + dj
                    if 0 <= ii < h and 0 <= jj < w and mask[ii, jj]:
                        wgt = ker[di + radius, dj + radius]
                        num += wgt * image[:, ii, jj]
                        den += wgt
            out[:, i, j] = num / den
    return out


def ols_slope(xs, ys):
    """Closed-form simple-regression slope."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    xm = xs.mean()
    ym = ys.mean()
    return float(((xs - xm) * (ys - ym)).sum() / ((xs - xm) ** 2).sum())


def rank_auc(pos, neg):
    """Mann-Whitney AUC: P(random positive scores above random negative)."""
    pos = np.asarray(pos, dtype=np.float64)
    neg = np.asarray(neg, dtype=np.float64)
    wins = 0.0
    for p in pos:
        wins += np.sum(p > neg) + 0.5 * np.sum(p == neg)
    return float(wins / (len(pos) * len(neg)))
