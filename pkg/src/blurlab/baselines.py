"""Classical local blur features: gradient statistics and spectral slopes.

Both baselines score every pixel from a patch around it and map the feature
through a fixed squashing function onto a [0, 1] blur confidence, so their
outputs are directly comparable with the learned mapper. Both are fooled by
flat, textureless regions: no gradients and no spectral energy look exactly
like strong blur, which is the failure mode the learned model avoids.

Gradient feature: mean gradient magnitude (central differences) over a
p x p patch, squashed by exp(-feature / tau). Spectral feature: slope of an
ordinary-least-squares line through (log f, log power) of the radially
averaged power spectrum of the mean-subtracted, Hann-windowed patch, using
rings f in [2, p/2); blur removes high frequencies, making the slope more
negative. Patches are taken at every stride-th pixel with replicate padding
at the borders; between grid points the confidence is filled from the
nearest evaluated center.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy import ndimage

from .errors import DataError, ShapeError

DEFAULT_PATCH_SIZE = 17

# exp(-mean|grad| / tau): calibrated on the synthetic corpus (demos/04) so the
# sharp half scores mean confidence ~0.08 and the blurred half ~0.72.
GRAD_TAU = 0.04

# logistic squash of the spectral slope: confidence = 1 / (1 + exp((slope - center) / scale)).
# Calibrated on the synthetic corpus (demos/04): sharp-texture slopes sit near
# -1, heavily blurred patches fall below -8; this squash yields mean
# confidence ~0.12 sharp vs ~0.81 blurred.
SLOPE_CENTER = -2.0
SLOPE_SCALE = 0.6


def to_gray(image):
    """Luma conversion: accepts (h, w) or (3, h, w), returns (h, w) float64."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim == 2:
        return image
    if image.ndim == 3 and image.shape[0] == 3:
        r, g, b = image
        return 0.299 * r + 0.587 * g + 0.114 * b
    raise ShapeError(f"expected (h, w) or (3, h, w) image, got {image.shape}")


def _validate_grid(img, patch_size, stride, min_patch=3):
    h, w = img.shape
    if patch_size < min_patch:
        raise DataError(f"patch size must be >= {min_patch}, got {patch_size}")
    if patch_size > min(h, w):
        raise DataError(f"patch size {patch_size} exceeds image {h}x{w}")
    if stride < 1:
        raise DataError(f"stride must be >= 1, got {stride}")


def _upfill_nearest(sub, stride, h, w):
    """Expand a strided grid of values back to full resolution."""
    ri = np.clip(np.rint(np.arange(h) / stride).astype(int), 0, sub.shape[0] - 1)
    ci = np.clip(np.rint(np.arange(w) / stride).astype(int), 0, sub.shape[1] - 1)
    return sub[ri[:, None], ci[None, :]]


def gradient_stat_map(image, patch_size=DEFAULT_PATCH_SIZE, stride=1, tau=GRAD_TAU):
    """Blur confidence from local mean gradient magnitude.

    Returns an (h, w) map in (0, 1]; flat regions saturate at 1.
    """
    img = to_gray(image)
    _validate_grid(img, patch_size, stride)
    gy, gx = np.gradient(img)
    mag = np.hypot(gx, gy)
    feature = ndimage.uniform_filter(mag, size=patch_size, mode="nearest")
    conf = np.exp(-feature / tau)
    if stride > 1:
        h, w = img.shape
        conf = _upfill_nearest(conf[::stride, ::stride], stride, h, w)
    return conf


@lru_cache(maxsize=16)
def _ring_map(p):
    """Integer ring index (nearest radius) per FFT bin of a p x p transform."""
    f = np.fft.fftfreq(p) * p
    r = np.rint(np.hypot(f[:, None], f[None, :])).astype(np.int64)
    r.setflags(write=False)
    return r


@lru_cache(maxsize=16)
def _ring_mean_matrix(p):
    """(p*p, n_rings) matrix averaging FFT power into radial rings."""
    rings = _ring_map(p)
    n_rings = int(rings.max()) + 1
    mat = np.zeros((p * p, n_rings))
    flat = rings.ravel()
    counts = np.bincount(flat, minlength=n_rings).astype(np.float64)
    mat[np.arange(p * p), flat] = 1.0 / counts[flat]
    mat.setflags(write=False)
    return mat


def radial_power_spectrum(patch):
    """Mean |FFT|^2 per integer-radius ring; index 0 is the DC bin."""
    patch = np.asarray(patch, dtype=np.float64)
    if patch.ndim != 2 or patch.shape[0] != patch.shape[1]:
        raise ShapeError(f"patch must be square 2-D, got {patch.shape}")
    power = np.abs(np.fft.fft2(patch)) ** 2
    rings = _ring_map(patch.shape[0])
    n_rings = int(rings.max()) + 1
    sums = np.bincount(rings.ravel(), weights=power.ravel(), minlength=n_rings)
    counts = np.bincount(rings.ravel(), minlength=n_rings)
    return sums / counts


def fit_log_slope(profile, r_min=1, r_max=None):
    """OLS slope of log(profile[r]) against log(r), excluding the DC bin.

    Uses rings r_min <= r < r_max (r_max defaults to the profile length).
    Rings with non-positive power are dropped; fewer than two usable rings
    is a data error.
    """
    profile = np.asarray(profile, dtype=np.float64)
    if profile.ndim != 1:
        raise ShapeError(f"profile must be 1-D, got shape {profile.shape}")
    r = np.arange(len(profile))
    if r_max is None:
        r_max = len(profile)
    keep = (r >= max(r_min, 1)) & (r < r_max) & (profile > 0)
    if keep.sum() < 2:
        raise DataError("need at least 2 usable rings to fit a slope")
    lx = np.log(r[keep].astype(np.float64))
    ly = np.log(profile[keep])
    lx = lx - lx.mean()
    return float((lx * (ly - ly.mean())).sum() / (lx * lx).sum())


def _hann2d(p):
    w = np.hanning(p)
    return np.outer(w, w)


def slope_to_confidence(slope, center=SLOPE_CENTER, scale=SLOPE_SCALE):
    """Monotone map from spectral slope to blur confidence in (0, 1)."""
    return 1.0 / (1.0 + np.exp((np.asarray(slope, dtype=np.float64) - center) / scale))


def spectral_slope_map(image, patch_size=DEFAULT_PATCH_SIZE, stride=1,
                       center=SLOPE_CENTER, scale=SLOPE_SCALE,
                       _chunk=1024):
    """Blur confidence from local power-spectrum slopes.

    Each patch is mean-subtracted and Hann-windowed before the FFT; the
    slope is fitted over rings [2, p/2). A patch with no energy (e.g.
    perfectly flat) gets confidence 1 by convention. patch_size must be at
    least 16 so enough rings exist for a stable fit.
    """
    img = to_gray(image)
    _validate_grid(img, patch_size, stride, min_patch=16)
    h, w = img.shape
    p = patch_size
    pad = p // 2
    padded = np.pad(img, pad, mode="edge")
    windows = np.lib.stride_tricks.sliding_window_view(padded, (p, p))[:h, :w]
    sel = windows[::stride, ::stride]
    nr, nc = sel.shape[:2]
    flat = sel.reshape(-1, p, p)

    r_hi = (p - 1) // 2  # rings 2..r_hi inclusive, i.e. [2, p/2)
    ring_cols = np.arange(2, r_hi + 1)
    lx = np.log(ring_cols.astype(np.float64))
    lx = lx - lx.mean()
    lxx = (lx * lx).sum()
    win = _hann2d(p)
    mean_mat = _ring_mean_matrix(p)[:, ring_cols]

    conf = np.empty(flat.shape[0])
    for start in range(0, flat.shape[0], _chunk):
        block = flat[start:start + _chunk].astype(np.float64)
        block = block - block.mean(axis=(1, 2), keepdims=True)
        spec = np.fft.fft2(block * win)
        power = (spec.real ** 2 + spec.imag ** 2).reshape(block.shape[0], -1)
        prof = power @ mean_mat
        degenerate = np.any(prof <= 0, axis=1)
        safe = np.where(degenerate[:, None], 1.0, prof)
        ly = np.log(safe)
        slopes = (ly - ly.mean(axis=1, keepdims=True)) @ lx / lxx
        c = slope_to_confidence(slopes, center, scale)
        conf[start:start + _chunk] = np.where(degenerate, 1.0, c)
    grid = conf.reshape(nr, nc)
    if stride > 1:
        return _upfill_nearest(grid, stride, h, w)
    return grid
