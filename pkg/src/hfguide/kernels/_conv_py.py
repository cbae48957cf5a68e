"""Pure-numpy convolution kernels (fallback backend).

Semantics match the compiled backend exactly: cross-correlation (no kernel
flip), same-size output, zero or edge-replicate padding. `replicate` is an
int flag (0 = zero padding, 1 = replicate) shared with the Cython signatures.
"""
import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def _pad(x, ph, pw, replicate):
    if ph == 0 and pw == 0:
        return x
    mode = "edge" if replicate else "constant"
    return np.pad(x, ((ph, ph), (pw, pw), (0, 0)), mode=mode)


def conv2d_mc(x, w, replicate):
    """Correlate x (H,W,Cin) with w (kh,kw,Cin,Cout) -> (H,W,Cout)."""
    kh, kw = w.shape[0], w.shape[1]
    xp = _pad(x, kh // 2, kw // 2, replicate)
    win = sliding_window_view(xp, (kh, kw), axis=(0, 1))
    return np.einsum("ijcab,abcd->ijd", win, w, optimize=True)


def conv2d_mc_grad_input(gy, w, replicate):
    """Adjoint of conv2d_mc in its input: gy (H,W,Cout) -> (H,W,Cin)."""
    H, W = gy.shape[0], gy.shape[1]
    kh, kw, cin, _ = w.shape
    ph, pw = kh // 2, kw // 2
    gx = np.zeros((H, W, cin))
    rows = np.arange(H)
    cols = np.arange(W)
    for a in range(kh):
        for b in range(kw):
            contrib = gy @ w[a, b].T
            if replicate:
                pi = np.clip(rows + a - ph, 0, H - 1)
                qj = np.clip(cols + b - pw, 0, W - 1)
                np.add.at(gx, (pi[:, None], qj[None, :]), contrib)
            else:
                i0 = max(0, ph - a)
                i1 = min(H, H + ph - a)
                j0 = max(0, pw - b)
                j1 = min(W, W + pw - b)
                if i0 < i1 and j0 < j1:
                    gx[i0 + a - ph:i1 + a - ph, j0 + b - pw:j1 + b - pw] += \
                        contrib[i0:i1, j0:j1]
    return gx


def conv2d_mc_grad_weights(gy, x, kh, kw, replicate):
    """Gradient of conv2d_mc in its weights: -> (kh,kw,Cin,Cout)."""
    H, W = gy.shape[0], gy.shape[1]
    xp = _pad(x, kh // 2, kw // 2, replicate)
    gw = np.empty((kh, kw, x.shape[2], gy.shape[2]))
    for a in range(kh):
        for b in range(kw):
            gw[a, b] = np.einsum("ijc,ijd->cd", xp[a:a + H, b:b + W], gy)
    return gw
