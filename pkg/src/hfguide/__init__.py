"""High-frequency-guided diffusion restoration, desk scale.

Components: churned stochastic Euler sampler with classifier-free
guidance, per-step low-rank decoder adaptation against a Fourier/Sobel
fidelity loss, dual cross-attention text conditioning, a synthetic
degradation forge, and reference metrics. Hot convolution kernels run on
a compiled extension when available; `hfguide.kernels.BACKEND` reports
which implementation is active.
"""
from .kernels import BACKEND

__all__ = ["BACKEND", "__version__"]
__version__ = "0.1.0"
