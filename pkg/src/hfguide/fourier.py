"""2-D discrete Fourier transform with a pinned normalization.

Convention: unnormalized forward, 1/(H*W) inverse, so a constant image of
value c has a single DC bin of value c*H*W and Parseval reads
sum|x|^2 == sum|X|^2 / (H*W). numpy's fft2/ifft2 already use exactly this
convention; tests check it against a direct O(N^2)-per-bin summation oracle.
"""
import numpy as np

from .errors import InvalidArgumentError


def dft2(x):
    x = np.asarray(x)
    if x.ndim != 2:
        raise InvalidArgumentError(f"dft2 expects a 2-d array, got shape {x.shape}")
    if x.shape[0] < 1 or x.shape[1] < 1:
        raise InvalidArgumentError("dft2 needs H, W >= 1")
    return np.fft.fft2(x)


def idft2(spectrum):
    spectrum = np.asarray(spectrum)
    if spectrum.ndim != 2:
        raise InvalidArgumentError(f"idft2 expects a 2-d array, got shape {spectrum.shape}")
    return np.fft.ifft2(spectrum)
