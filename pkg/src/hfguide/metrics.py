"""Reference metrics: PSNR, SSIM (uniform window), high-frequency residual."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import InvalidArgumentError
from .highfreq import HighPassSpec, fourier_highpass

PSNR_INF = float("inf")


def _pair(x, y):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise InvalidArgumentError(f"shape mismatch: {x.shape} vs {y.shape}")
    return x, y


def psnr(x, y, max_val=1.0):
    """10*log10(max_val^2 / MSE); +inf sentinel for identical inputs."""
    x, y = _pair(x, y)
    mse = float(np.mean((x - y) ** 2))
    if mse == 0.0:
        return PSNR_INF
    return 10.0 * math.log10(max_val ** 2 / mse)


SSIM_C1 = 0.01 ** 2
SSIM_C2 = 0.03 ** 2


def ssim(x, y, window=8):
    """Mean local SSIM over sliding uniform windows, averaged across channels.

    The uniform window (instead of the common gaussian one) keeps the
    constant-image closed forms exact for golden tests.
    """
    x, y = _pair(x, y)
    if x.ndim == 2:
        x, y = x[:, :, None], y[:, :, None]
    h, w = x.shape[:2]
    win = min(window, h, w)
    vals = []
    for c in range(x.shape[2]):
        xw = sliding_window_view(x[:, :, c], (win, win))
        yw = sliding_window_view(y[:, :, c], (win, win))
        mx = xw.mean(axis=(-1, -2))
        my = yw.mean(axis=(-1, -2))
        vx = (xw ** 2).mean(axis=(-1, -2)) - mx ** 2
        vy = (yw ** 2).mean(axis=(-1, -2)) - my ** 2
        cov = (xw * yw).mean(axis=(-1, -2)) - mx * my
        s = ((2 * mx * my + SSIM_C1) * (2 * cov + SSIM_C2)
             / ((mx ** 2 + my ** 2 + SSIM_C1) * (vx + vy + SSIM_C2)))
        vals.append(float(s.mean()))
    return float(np.mean(vals))


def hf_residual(x, y, spec=HighPassSpec()):
    """L2 norm of the difference of Fourier-high-passed images."""
    x, y = _pair(x, y)
    d = fourier_highpass(x, spec) - fourier_highpass(y, spec)
    return float(np.sqrt(np.sum(d * d)))


@dataclass
class MetricReport:
    psnr: float
    ssim: float
    hf_residual: float


def report(x, y, spec=HighPassSpec()):
    return MetricReport(psnr=psnr(x, y), ssim=ssim(x, y), hf_residual=hf_residual(x, y, spec))


def write_reports_csv(path, rows):
    """rows: iterable of (identifier, MetricReport)."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["id", "psnr_db", "ssim", "hf_residual"])
        for name, rep in rows:
            w.writerow([name, rep.psnr, rep.ssim, rep.hf_residual])
