"""Network layers with hand-written forward and backward passes.

Convolutions are same-padded 3x3 or unpadded 1x1, stride 1, computed as an
im2col unfold followed by one matrix product. Max pooling is the fixed 2x2
stride-2 variant with deterministic tie-breaking (first maximum in row-major
window order). Upsampling is a fixed bilinear-kernel transposed convolution,
symmetrically cropped and renormalized by its border coverage so a constant
input maps to the same constant everywhere.

Each forward that training needs to revisit returns a :class:`LayerCache`;
a cache feeds exactly one backward call and raises on reuse.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConfigError, ContractError, ShapeError
from .tensor import check_nchw, col2im, im2col, matmul

SUPPORTED_UPSAMPLE_FACTORS = (1, 2, 4, 8, 16)


class LayerCache:
    """Holds forward-pass intermediates for a single backward call."""

    __slots__ = ("_data", "_consumed")

    def __init__(self, data):
        self._data = data
        self._consumed = False

    def take(self):
        if self._consumed:
            raise ContractError("layer cache already consumed by a backward call")
        self._consumed = True
        data = self._data
        self._data = None
        return data


@dataclass
class ConvParams:
    """Weights of one convolutional layer.

    weight: (out_c, in_c, k, k); bias: (out_c,). Kernel size 1 or 3; 3x3
    layers are same-padded (pad 1), 1x1 layers unpadded. Stride is always 1.
    """

    weight: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weight)
        b = np.asarray(self.bias)
        if w.ndim != 4 or w.shape[2] != w.shape[3]:
            raise ShapeError(f"conv weight must be (out_c, in_c, k, k), got {w.shape}")
        if w.shape[2] not in (1, 3):
            raise ConfigError(f"kernel size must be 1 or 3, got {w.shape[2]}")
        if b.shape != (w.shape[0],):
            raise ShapeError(f"conv bias must be ({w.shape[0]},), got {b.shape}")
        self.weight = w
        self.bias = b

    @property
    def out_c(self):
        return self.weight.shape[0]

    @property
    def in_c(self):
        return self.weight.shape[1]

    @property
    def k(self):
        return self.weight.shape[2]

    @property
    def pad(self):
        return (self.k - 1) // 2


def conv_forward(x, params):
    """Same-size convolution. Returns (y, cache)."""
    check_nchw(x, "conv input")
    n, c, h, w = x.shape
    if c != params.in_c:
        raise ShapeError(f"conv expects {params.in_c} input channels, got {c}")
    cols = im2col(x, params.k, params.pad)
    w2d = params.weight.reshape(params.out_c, -1)
    y = matmul(w2d, cols)
    y += params.bias[:, None]
    y = np.ascontiguousarray(
        y.reshape(params.out_c, n, h, w).transpose(1, 0, 2, 3)
    )
    return y, LayerCache(x)


def conv_backward(dy, cache, params):
    """Gradients of a conv layer. Returns (dx, dweight, dbias)."""
    x = cache.take()
    check_nchw(dy, "conv grad")
    n, c, h, w = x.shape
    if dy.shape != (n, params.out_c, h, w):
        raise ShapeError(f"conv grad shape {dy.shape} does not match output")
    dy2 = dy.transpose(1, 0, 2, 3).reshape(params.out_c, -1)
    cols = im2col(x, params.k, params.pad)
    dweight = matmul(dy2, cols.T).reshape(params.weight.shape)
    dbias = dy.sum(axis=(0, 2, 3))
    w2d = params.weight.reshape(params.out_c, -1)
    dcols = matmul(w2d.T, dy2)
    dx = col2im(dcols, x.shape, params.k, params.pad)
    return dx, dweight, dbias


def relu_forward(x):
    """Elementwise max(x, 0). Returns (y, cache)."""
    y = np.maximum(x, 0)
    return y, LayerCache(x > 0)


def relu_backward(dy, cache):
    mask = cache.take()
    if dy.shape != mask.shape:
        raise ShapeError(f"relu grad shape {dy.shape} does not match input {mask.shape}")
    return dy * mask


def maxpool2x2_forward(x):
    """2x2 stride-2 max pooling. Returns (y, cache).

    Ties go to the first maximum in row-major window order, so pooling a
    constant region routes all gradient to the window's top-left element.
    """
    check_nchw(x, "pool input")
    n, c, h, w = x.shape
    if h % 2 or w % 2:
        raise ShapeError(f"pool input dims must be even, got {h}x{w}")
    oh, ow = h // 2, w // 2
    win = x.reshape(n, c, oh, 2, ow, 2).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, oh, ow, 4)
    idx = win.argmax(axis=-1)
    y = np.take_along_axis(win, idx[..., None], axis=-1)[..., 0]
    return np.ascontiguousarray(y), LayerCache((idx, x.shape))


def maxpool2x2_backward(dy, cache):
    idx, x_shape = cache.take()
    n, c, h, w = x_shape
    oh, ow = h // 2, w // 2
    if dy.shape != (n, c, oh, ow):
        raise ShapeError(f"pool grad shape {dy.shape} does not match output {(n, c, oh, ow)}")
    dwin = np.zeros((n, c, oh, ow, 4), dtype=dy.dtype)
    np.put_along_axis(dwin, idx[..., None], dy[..., None], axis=-1)
    dx = dwin.reshape(n, c, oh, ow, 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, h, w)
    return np.ascontiguousarray(dx)


def bilinear_kernel(s):
    """Fixed 2-D bilinear kernel for a stride-s transposed convolution.

    Kernel side k = 2s - (s mod 2); entries are the outer product of the
    1-D hat w[i] = 1 - |i - c| / s with center c = (k-1)/2 for odd k and
    s - 0.5 for even k. For s = 2 the 1-D weights are [0.25, 0.75, 0.75, 0.25].
    """
    if s not in SUPPORTED_UPSAMPLE_FACTORS:
        raise ConfigError(f"upsample factor must be one of {SUPPORTED_UPSAMPLE_FACTORS}, got {s}")
    k = 2 * s - (s % 2)
    center = (k - 1) / 2 if k % 2 else s - 0.5
    w1d = 1.0 - np.abs(np.arange(k) - center) / s
    return np.outer(w1d, w1d)


def _tconv_bilinear_full(x, s):
    """Stride-s transposed convolution of x with the bilinear kernel, uncropped."""
    n, c, h, w = x.shape
    ker = bilinear_kernel(s)
    k = ker.shape[0]
    out = np.zeros((n, c, s * (h - 1) + k, s * (w - 1) + k), dtype=x.dtype)
    for a in range(k):
        for b in range(k):
            out[:, :, a:a + s * h:s, b:b + s * w:s] += ker[a, b] * x
    return out


@lru_cache(maxsize=32)
def _coverage_1d(n_in, s):
    """Per-output-pixel kernel mass along one axis after symmetric cropping.

    Equals 1 in the interior; below 1 near borders where part of the kernel
    support falls outside the cropped window. Dividing by it makes the
    upsampler exactly interpolating (constant in -> constant out).
    """
    k = 2 * s - (s % 2)
    center = (k - 1) / 2 if k % 2 else s - 0.5
    ker = 1.0 - np.abs(np.arange(k) - center) / s
    off = (k - s) // 2
    cov = np.zeros(s * n_in)
    for i in range(n_in):
        for a in range(k):
            p = s * i + a - off
            if 0 <= p < s * n_in:
                cov[p] += ker[a]
    cov.setflags(write=False)
    return cov


def upsample_forward(x, s):
    """Upsample by integer factor s with the fixed bilinear kernel.

    Transposed convolution at stride s, cropped symmetrically to (s*h, s*w)
    and divided by the border coverage map. Equivalent to half-pixel-aligned
    bilinear interpolation with edge clamping; exact identity for s = 1.
    """
    check_nchw(x, "upsample input")
    if s not in SUPPORTED_UPSAMPLE_FACTORS:
        raise ConfigError(f"upsample factor must be one of {SUPPORTED_UPSAMPLE_FACTORS}, got {s}")
    if s == 1:
        return x.copy()
    n, c, h, w = x.shape
    k = 2 * s - (s % 2)
    off = (k - s) // 2
    full = _tconv_bilinear_full(x, s)
    y = full[:, :, off:off + s * h, off:off + s * w]
    cov = np.outer(_coverage_1d(h, s), _coverage_1d(w, s)).astype(x.dtype, copy=False)
    return y / cov


def upsample_backward(dy, s):
    """Adjoint of :func:`upsample_forward` (the op is linear and fixed)."""
    check_nchw(dy, "upsample grad")
    if s not in SUPPORTED_UPSAMPLE_FACTORS:
        raise ConfigError(f"upsample factor must be one of {SUPPORTED_UPSAMPLE_FACTORS}, got {s}")
    if s == 1:
        return dy.copy()
    n, c, sh, sw = dy.shape
    if sh % s or sw % s:
        raise ShapeError(f"upsample grad dims {sh}x{sw} not divisible by factor {s}")
    h, w = sh // s, sw // s
    ker = bilinear_kernel(s)
    k = ker.shape[0]
    off = (k - s) // 2
    cov = np.outer(_coverage_1d(h, s), _coverage_1d(w, s)).astype(dy.dtype, copy=False)
    g = dy / cov
    full = np.zeros((n, c, s * (h - 1) + k, s * (w - 1) + k), dtype=dy.dtype)
    full[:, :, off:off + sh, off:off + sw] = g
    dx = np.zeros((n, c, h, w), dtype=dy.dtype)
    for a in range(k):
        for b in range(k):
            dx += ker[a, b] * full[:, :, a:a + s * h:s, b:b + s * w:s]
    return dx


def sigmoid(x):
    """Numerically stable logistic function.

    Computed via the sign-split form so exp never overflows. Results are
    nudged into the open interval (0, 1) at the representable boundary so
    downstream logarithms stay finite.
    """
    x = np.asarray(x)
    dtype = np.float32 if x.dtype == np.float32 else np.float64
    flat = x.reshape(-1).astype(dtype, copy=False)
    out = np.empty(flat.shape, dtype=dtype)
    pos = flat >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-flat[pos]))
    ex = np.exp(flat[~pos])
    out[~pos] = ex / (1.0 + ex)
    tiny = np.nextafter(dtype(0), dtype(1))
    top = np.nextafter(dtype(1), dtype(0))
    return np.clip(out, tiny, top).reshape(x.shape)
