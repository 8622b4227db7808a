"""Downstream uses of a blur map: scoring, segmentation seeding, magnification.

The scalar blur degree of an image is simply the mean of its map. For
segmentation seeding, confidences partition into four trimap classes on
half-open intervals: [0, 0.1) foreground, [0.1, 0.5) probable foreground,
[0.5, 0.9) probable background, [0.9, 1] background. Blur magnification
re-blurs exactly the pixels whose confidence exceeds a threshold with a
masked Gaussian: values are averaged with weights g(d) restricted to the
selected region (and to the image support), so untouched pixels survive
bit-for-bit and no energy bleeds in from outside.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from .errors import ConfigError, DataError, ShapeError

TRIMAP_FG = 0
TRIMAP_PROB_FG = 1
TRIMAP_PROB_BG = 2
TRIMAP_BG = 3

TRIMAP_BOUNDS = (0.1, 0.5, 0.9)

# 8-bit pixel codes used when a trimap is written as an image.
TRIMAP_PIXEL_VALUES = {
    TRIMAP_FG: 0,
    TRIMAP_PROB_FG: 85,
    TRIMAP_PROB_BG: 170,
    TRIMAP_BG: 255,
}

DEFAULT_MAGNIFY_THRESHOLD = 0.1


def _check_map(map_):
    m = np.asarray(map_, dtype=np.float64)
    if m.ndim != 2:
        raise ShapeError(f"blur map must be 2-D, got shape {m.shape}")
    if m.size == 0:
        raise DataError("blur map is empty")
    if m.min() < 0 or m.max() > 1:
        raise DataError("blur map values must lie in [0, 1]")
    return m


def blur_degree(map_):
    """Mean confidence: 0 for an all-sharp map, 1 for an all-blurred one."""
    return float(_check_map(map_).mean())


def trimap(map_):
    """Classify each pixel into the four seeding classes (uint8 codes 0..3)."""
    m = _check_map(map_)
    return np.digitize(m, TRIMAP_BOUNDS).astype(np.uint8)


def trimap_image(tri):
    """Render trimap codes as the conventional 8-bit gray levels."""
    tri = np.asarray(tri)
    if not np.all((tri >= 0) & (tri <= 3)):
        raise DataError("trimap codes must lie in 0..3")
    lut = np.array([TRIMAP_PIXEL_VALUES[c] for c in range(4)], dtype=np.uint8)
    return lut[tri]


def gaussian_kernel1d(sigma):
    """Truncated Gaussian taps at integer offsets within 3 sigma."""
    if not sigma > 0:
        raise ConfigError(f"sigma must be positive, got {sigma}")
    radius = int(np.ceil(3.0 * sigma))
    d = np.arange(-radius, radius + 1)
    return np.exp(-(d.astype(np.float64) ** 2) / (2.0 * sigma * sigma))


def magnify_blur(image, map_, sigma, threshold=DEFAULT_MAGNIFY_THRESHOLD):
    """Re-blur the pixels with confidence above ``threshold``.

    image: (c, h, w) floats; map_: (h, w) aligned with it. Selected pixels
    become Gaussian-weighted averages over selected in-image neighbors
    (weights renormalized over the region); all other pixels are returned
    unchanged. Returns a new array.
    """
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 3:
        raise ShapeError(f"image must be (c, h, w), got shape {image.shape}")
    m = _check_map(map_)
    if image.shape[1:] != m.shape:
        raise ShapeError(f"image {image.shape[1:]} and map {m.shape} are not aligned")
    if not sigma > 0:
        raise ConfigError(f"sigma must be positive, got {sigma}")

    out = image.copy()
    mask = m > threshold
    if not mask.any():
        return out
    g = gaussian_kernel1d(sigma)

    def blur2d(plane):
        tmp = ndimage.correlate1d(plane, g, axis=0, mode="constant", cval=0.0)
        return ndimage.correlate1d(tmp, g, axis=1, mode="constant", cval=0.0)

    maskf = mask.astype(np.float64)
    weight = blur2d(maskf)
    for c in range(image.shape[0]):
        num = blur2d(image[c] * maskf)
        out[c][mask] = num[mask] / weight[mask]
    return out
