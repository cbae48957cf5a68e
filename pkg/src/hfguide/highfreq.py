"""High-pass operator pair and the fidelity constraint.

Two linear operators extract high-frequency content from an image:

* an ideal (hard) annular Fourier mask that zeroes every frequency bin
  whose radius is below a fraction of Nyquist (the DC bin always goes),
* the Sobel stencil pair, applied per channel with replicate padding,
  returning the stacked (Gx, Gy) responses.

The fidelity constraint is the sum-reduced squared difference of both
operator outputs between a reference image and a candidate, and its exact
gradient w.r.t. the candidate comes from the operators' adjoints: the
Fourier mask operator is self-adjoint (real symmetric mask), the Sobel
adjoint is the exact transpose of correlation-with-replicate-padding.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import fourier, kernels
from .errors import InvalidArgumentError
from .imgio import ensure_image

SOBEL_GX = np.array([[-1.0, 0.0, 1.0],
                     [-2.0, 0.0, 2.0],
                     [-1.0, 0.0, 1.0]])
SOBEL_GY = SOBEL_GX.T.copy()

SOBEL_PADDING = "replicate"


@dataclass(frozen=True)
class HighPassSpec:
    """Ideal annular high-pass mask; cutoff is a fraction of the Nyquist radius."""
    cutoff_fraction: float = 0.25

    def __post_init__(self):
        if not 0.0 < self.cutoff_fraction < 1.0:
            raise InvalidArgumentError(
                f"cutoff_fraction must be in (0,1), got {self.cutoff_fraction}")


def highpass_mask(h, w, spec):
    """Boolean (h, w) mask in fft bin layout; True = bin passes."""
    fu = np.abs(np.fft.fftfreq(h)) * 2.0  # fraction of Nyquist, [0, 1]
    fv = np.abs(np.fft.fftfreq(w)) * 2.0
    r = np.sqrt(fu[:, None] ** 2 + fv[None, :] ** 2)
    return r > spec.cutoff_fraction


def fourier_highpass(image, spec=HighPassSpec()):
    """Mask out low-frequency bins per channel; output is real, DC removed."""
    image = ensure_image(image)
    mask = highpass_mask(image.shape[0], image.shape[1], spec)
    out = np.empty_like(image)
    for c in range(image.shape[2]):
        filtered = fourier.idft2(mask * fourier.dft2(image[:, :, c]))
        residue = np.abs(filtered.imag).max()
        if residue >= 1e-10:
            raise InvalidArgumentError(
                f"imaginary residue {residue:.3e} exceeds tolerance; non-real input?")
        out[:, :, c] = filtered.real
    return out


def fourier_highpass_adjoint(resp, spec=HighPassSpec()):
    # The mask is real and symmetric under (u,v) -> (-u,-v), so the real
    # operator is its own adjoint.
    return fourier_highpass(resp, spec)


def sobel(image):
    """Stacked Sobel responses: (H, W, 2C), channel 2c = Gx, 2c+1 = Gy."""
    image = ensure_image(image)
    gx = kernels.conv2d(image, SOBEL_GX, SOBEL_PADDING)
    gy = kernels.conv2d(image, SOBEL_GY, SOBEL_PADDING)
    h, w, c = image.shape
    out = np.empty((h, w, 2 * c))
    out[:, :, 0::2] = gx
    out[:, :, 1::2] = gy
    return out


def sobel_adjoint(resp):
    """Exact adjoint of `sobel`: (H, W, 2C) -> (H, W, C)."""
    resp = np.asarray(resp, dtype=np.float64)
    if resp.ndim != 3 or resp.shape[2] % 2:
        raise InvalidArgumentError(f"expected (H,W,2C) response, got shape {resp.shape}")
    gx = np.ascontiguousarray(resp[:, :, 0::2])
    gy = np.ascontiguousarray(resp[:, :, 1::2])
    return (kernels.conv2d_adjoint(gx, SOBEL_GX, SOBEL_PADDING)
            + kernels.conv2d_adjoint(gy, SOBEL_GY, SOBEL_PADDING))


def _check_pair(reference, candidate):
    reference = ensure_image(reference)
    candidate = ensure_image(candidate)
    if reference.shape != candidate.shape:
        raise InvalidArgumentError(
            f"shape mismatch: {reference.shape} vs {candidate.shape}")
    return reference, candidate


def fidelity_loss(reference, candidate, spec=HighPassSpec(),
                  use_fourier=True, use_sobel=True):
    """Sum-reduced squared high-frequency discrepancy (>= 0)."""
    reference, candidate = _check_pair(reference, candidate)
    loss = 0.0
    if use_fourier:
        d = fourier_highpass(reference, spec) - fourier_highpass(candidate, spec)
        loss += float(np.sum(d * d))
    if use_sobel:
        d = sobel(reference) - sobel(candidate)
        loss += float(np.sum(d * d))
    return loss


def fidelity_grad(reference, candidate, spec=HighPassSpec(),
                  use_fourier=True, use_sobel=True):
    """Exact gradient of fidelity_loss w.r.t. the candidate image."""
    reference, candidate = _check_pair(reference, candidate)
    grad = np.zeros_like(candidate)
    if use_fourier:
        d = fourier_highpass(candidate, spec) - fourier_highpass(reference, spec)
        grad += 2.0 * fourier_highpass_adjoint(d, spec)
    if use_sobel:
        d = sobel(candidate) - sobel(reference)
        grad += 2.0 * sobel_adjoint(d)
    return grad
