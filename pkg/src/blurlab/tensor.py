"""Dense NCHW tensor helpers used by the network layers.

Tensors are plain ``numpy.ndarray`` objects with layout (batch, channel,
height, width) and float64 entries by default; a float32 storage mode is
supported for inference. The helpers here are deliberately small: shape
validation plus the handful of reshaping tricks (im2col / col2im) that turn
convolution into one big matrix product.
"""

from __future__ import annotations

import numpy as np

from .errors import ShapeError

DEFAULT_DTYPE = np.float64


def tensor_new(shape, fill=0.0, dtype=DEFAULT_DTYPE):
    """Allocate an NCHW tensor filled with a constant."""
    shape = tuple(int(s) for s in shape)
    if len(shape) != 4:
        raise ShapeError(f"tensor shape must have 4 dims (n, c, h, w), got {shape}")
    if any(s < 0 for s in shape):
        raise ShapeError(f"tensor dims must be non-negative, got {shape}")
    return np.full(shape, fill, dtype=dtype)


def check_nchw(x, name="tensor"):
    """Raise ShapeError unless ``x`` is a 4-D array."""
    if not isinstance(x, np.ndarray) or x.ndim != 4:
        got = getattr(x, "shape", type(x).__name__)
        raise ShapeError(f"{name} must be a 4-D NCHW array, got {got}")
    return x


def axpy(alpha, x, y):
    """Return ``alpha * x + y`` for same-shape arrays."""
    x = np.asarray(x)
    y = np.asarray(y)
    if x.shape != y.shape:
        raise ShapeError(f"axpy operands differ in shape: {x.shape} vs {y.shape}")
    return alpha * x + y


def matmul(a, b):
    """2-D matrix product with explicit inner-dimension validation."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul expects 2-D operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul inner dims disagree: {a.shape} @ {b.shape}")
    return a @ b


def conv_out_hw(h, w, k, pad, stride=1):
    """Spatial output size of a k x k correlation."""
    out_h = (h + 2 * pad - k) // stride + 1
    out_w = (w + 2 * pad - k) // stride + 1
    if out_h <= 0 or out_w <= 0:
        raise ShapeError(
            f"kernel {k} with pad {pad} does not fit input {h}x{w}"
        )
    return out_h, out_w


def im2col(x, k, pad, stride=1):
    """Unfold k x k patches of an NCHW tensor into a matrix.

    Returns an array of shape (c*k*k, n*out_h*out_w). Row order is
    (channel, kernel row, kernel col), matching ``weight.reshape(out_c, -1)``;
    column order is (batch, out row, out col). For a single-image batch this
    is the textbook (c*k*k, out_h*out_w) patch matrix.
    """
    check_nchw(x, "im2col input")
    n, c, h, w = x.shape
    out_h, out_w = conv_out_hw(h, w, k, pad, stride)
    if pad:
        x = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    windows = np.lib.stride_tricks.sliding_window_view(x, (k, k), axis=(2, 3))
    windows = windows[:, :, ::stride, ::stride]
    cols = windows.transpose(1, 4, 5, 0, 2, 3).reshape(c * k * k, n * out_h * out_w)
    return np.ascontiguousarray(cols)


def col2im(cols, x_shape, k, pad, stride=1):
    """Adjoint of :func:`im2col`: scatter-add columns back onto the input grid."""
    n, c, h, w = x_shape
    out_h, out_w = conv_out_hw(h, w, k, pad, stride)
    if cols.shape != (c * k * k, n * out_h * out_w):
        raise ShapeError(
            f"col2im expected {(c * k * k, n * out_h * out_w)}, got {cols.shape}"
        )
    xp = np.zeros((n, c, h + 2 * pad, w + 2 * pad), dtype=cols.dtype)
    cols6 = cols.reshape(c, k, k, n, out_h, out_w).transpose(3, 0, 1, 2, 4, 5)
    for ki in range(k):
        for kj in range(k):
            xp[:, :, ki:ki + stride * out_h:stride, kj:kj + stride * out_w:stride] += (
                cols6[:, :, ki, kj]
            )
    if pad:
        return np.ascontiguousarray(xp[:, :, pad:pad + h, pad:pad + w])
    return xp
