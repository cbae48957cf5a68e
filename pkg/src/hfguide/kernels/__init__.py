"""Hot convolution kernels with backend selection at import time.

The compiled Cython backend is used when present; `HFGUIDE_FORCE_PY=1` (or
a missing extension build) selects the pure-numpy fallback. Both backends
implement identical semantics: cross-correlation (no kernel flip), output
spatially the same size as the input, zero or edge-replicate padding.
"""
import os

import numpy as np

from ..errors import InvalidArgumentError
from . import _conv_py

if os.environ.get("HFGUIDE_FORCE_PY"):
    _impl = _conv_py
    BACKEND = "python"
else:
    try:
        from . import _conv_cy as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _conv_py
        BACKEND = "python"

_PAD_FLAGS = {"zero": 0, "replicate": 1}


def _pad_flag(padding):
    try:
        return _PAD_FLAGS[padding]
    except KeyError:
        raise InvalidArgumentError(f"unknown padding mode: {padding!r}") from None


def _c3(x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 3:
        raise InvalidArgumentError(f"expected a 3-d (H,W,C) array, got shape {x.shape}")
    return np.ascontiguousarray(x)


def _c4(w):
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 4:
        raise InvalidArgumentError(f"expected a 4-d (kh,kw,Cin,Cout) kernel, got shape {w.shape}")
    if w.shape[0] % 2 == 0 or w.shape[1] % 2 == 0:
        raise InvalidArgumentError(f"kernel side lengths must be odd, got {w.shape[:2]}")
    return np.ascontiguousarray(w)


def conv2d_mc(x, w, padding="zero"):
    """Multi-channel correlation: (H,W,Cin) x (kh,kw,Cin,Cout) -> (H,W,Cout)."""
    x, w = _c3(x), _c4(w)
    if x.shape[2] != w.shape[2]:
        raise InvalidArgumentError(
            f"channel mismatch: input has {x.shape[2]}, kernel expects {w.shape[2]}")
    return _impl.conv2d_mc(x, w, _pad_flag(padding))


def conv2d_mc_grad_input(gy, w, padding="zero"):
    """Exact adjoint of conv2d_mc in its input (includes padding boundary)."""
    gy, w = _c3(gy), _c4(w)
    if gy.shape[2] != w.shape[3]:
        raise InvalidArgumentError(
            f"channel mismatch: cotangent has {gy.shape[2]}, kernel outputs {w.shape[3]}")
    return _impl.conv2d_mc_grad_input(gy, w, _pad_flag(padding))


def conv2d_mc_grad_weights(gy, x, kh, kw, padding="zero"):
    """Gradient of conv2d_mc in its weights."""
    if kh % 2 == 0 or kw % 2 == 0:
        raise InvalidArgumentError(f"kernel side lengths must be odd, got {(kh, kw)}")
    return _impl.conv2d_mc_grad_weights(_c3(gy), _c3(x), kh, kw, _pad_flag(padding))


def conv2d(image, kernel, padding="zero"):
    """Per-channel 2-D stencil correlation on an (H,W,C) image.

    The same 2-D kernel is applied independently to every channel; output
    spatial size equals input spatial size.
    """
    image = _c3(image)
    if image.size == 0:
        raise InvalidArgumentError("input image is empty")
    kernel = np.asarray(kernel, dtype=np.float64)
    if kernel.ndim != 2:
        raise InvalidArgumentError(f"expected a 2-d stencil, got shape {kernel.shape}")
    if kernel.shape[0] % 2 == 0 or kernel.shape[1] % 2 == 0:
        raise InvalidArgumentError(f"kernel side lengths must be odd, got {kernel.shape}")
    c = image.shape[2]
    w = np.zeros(kernel.shape + (c, c))
    for ch in range(c):
        w[:, :, ch, ch] = kernel
    return conv2d_mc(image, w, padding)


def conv2d_adjoint(resp, kernel, padding="zero"):
    """Exact adjoint of conv2d on an (H,W,C) response."""
    resp = _c3(resp)
    kernel = np.asarray(kernel, dtype=np.float64)
    c = resp.shape[2]
    w = np.zeros(kernel.shape + (c, c))
    for ch in range(c):
        w[:, :, ch, ch] = kernel
    return conv2d_mc_grad_input(resp, w, padding)
