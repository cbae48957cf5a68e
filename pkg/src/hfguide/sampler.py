"""Churned stochastic Euler sampling with per-step fidelity-driven updates.

`hgs_sample` runs the guided sampler end to end: draw z_T at the top noise
level; per step, temporarily raise the noise level (churn), inject fresh
noise, evaluate the denoiser once at the churned state with classifier-free
guidance across the three conditioning variants, take the Euler step, form
the one-shot clean estimate, decode it through the adapter-augmented
decoder, and step the adapter parameters against the high-frequency
fidelity loss with the exponentially decaying step weight eta * e^(-lam*t).
`plain_sample` is the same walk with the update (and any decoder
involvement) removed.
"""
from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .denoisers import DenoiserEval, denoise
from .errors import InvalidArgumentError, NumericsError
from .highfreq import HighPassSpec
from .rng import Prng
from .schedule import ChurnParams, Schedule, gamma, predict_z0
from .weights_io import save_tensors

TRACE_COLUMNS = ("step", "sigma", "gamma", "fidelity_loss", "theta_update_norm")


@dataclass
class SamplerConfig:
    schedule: Schedule
    churn: ChurnParams = ChurnParams()
    lam: float = 0.001        # decay rate of the per-step update weight
    eta: float = 1.0          # base step size for the theta update
    s_img: float = 1.0        # image-conditioning guidance scale
    s_txt: float = 1.0        # text-conditioning guidance scale
    seed: int = 0
    hgs_enabled: bool = True
    use_fourier: bool = True
    use_sobel: bool = True
    highpass: HighPassSpec = field(default_factory=HighPassSpec)
    trace_path: str | None = None
    dump_every: int = 0       # dump theta snapshots every k steps (0 = off)
    dump_dir: str | None = None

    def __post_init__(self):
        if self.lam < 0 or self.eta < 0:
            raise InvalidArgumentError("lambda and eta must be >= 0")
        if self.s_img < 0 or self.s_txt < 0:
            raise InvalidArgumentError("guidance scales must be >= 0")


@dataclass
class StepTrace:
    rows: list = field(default_factory=list)

    def write_csv(self, path):
        with open(path, "w", newline="") as f:
            w = csv.DictWriter(f, fieldnames=TRACE_COLUMNS)
            w.writeheader()
            for row in self.rows:
                w.writerow({k: row.get(k, "") for k in TRACE_COLUMNS})


def euler_step(z_hat_t, z_denoised, sigma_hat, sigma_prev):
    """z_hat + (sigma_prev - sigma_hat) * (z_hat - z_denoised) / sigma_hat."""
    if sigma_hat == 0:
        raise InvalidArgumentError("sigma_hat must be nonzero")
    z_hat_t = np.asarray(z_hat_t, dtype=np.float64)
    z_denoised = np.asarray(z_denoised, dtype=np.float64)
    return z_hat_t + (sigma_prev - sigma_hat) * (z_hat_t - z_denoised) / sigma_hat


def cfg_combine(eps_full, eps_img_only, eps_uncond, s_img, s_txt):
    """eps_uncond + s_img*(eps_img_only - eps_uncond) + s_txt*(eps_full - eps_img_only)."""
    eps_full = np.asarray(eps_full, dtype=np.float64)
    eps_img_only = np.asarray(eps_img_only, dtype=np.float64)
    eps_uncond = np.asarray(eps_uncond, dtype=np.float64)
    if not (eps_full.shape == eps_img_only.shape == eps_uncond.shape):
        raise InvalidArgumentError("cfg_combine operands must share a shape")
    return (eps_uncond
            + s_img * (eps_img_only - eps_uncond)
            + s_txt * (eps_full - eps_img_only))


def guided_denoise(model, z_hat_t, sigma_hat, cond, s_img, s_txt, alpha=1.0):
    """Three denoiser evaluations (full / image-only / unconditional), combined.

    Without a conditioning bundle there is nothing to guide and a single
    evaluation is made.
    """
    if cond is None:
        return denoise(model, z_hat_t, sigma_hat, None, alpha)
    full = denoise(model, z_hat_t, sigma_hat,
                   cond.variant(drop_image=False, drop_text=False), alpha)
    img_only = denoise(model, z_hat_t, sigma_hat,
                       cond.variant(drop_image=False, drop_text=True), alpha)
    uncond = denoise(model, z_hat_t, sigma_hat,
                     cond.variant(drop_image=True, drop_text=True), alpha)
    eps = cfg_combine(full.eps_hat, img_only.eps_hat, uncond.eps_hat, s_img, s_txt)
    return DenoiserEval(eps_hat=eps, z_denoised=predict_z0(z_hat_t, eps, sigma_hat, alpha))


def _sampling_loop(model, cond, config, shape, step_hook=None):
    sched = config.schedule
    rng = Prng(config.seed)
    z = rng.gaussian(shape) * sched.sigmas[sched.T]
    trace = StepTrace()
    for t in range(sched.T, 0, -1):
        sigma_t = sched.sigmas[t]
        g = gamma(t, sched, config.churn, sched.T)
        # eps is drawn unconditionally so the stream layout does not depend
        # on churn settings; it only enters when gamma > 0.
        eps_t = rng.gaussian(shape) * config.churn.s_noise
        sigma_hat = sigma_t + g * sigma_t
        assert sigma_hat >= sigma_t  # gamma >= 0 by construction
        z_hat = z + math.sqrt(sigma_hat ** 2 - sigma_t ** 2) * eps_t
        ev = guided_denoise(model, z_hat, sigma_hat, cond, config.s_img, config.s_txt)
        z = euler_step(z_hat, ev.z_denoised, sigma_hat, sched.sigmas[t - 1])
        if not np.all(np.isfinite(z)):
            raise NumericsError(f"non-finite sampler state at step {t}")
        row = {"step": t, "sigma": sigma_t, "gamma": g,
               "fidelity_loss": "", "theta_update_norm": ""}
        if step_hook is not None:
            step_hook(t, z_hat, sigma_hat, ev, row)
        trace.rows.append(row)
    return z, trace


def plain_sample(model, cond, config, shape):
    """The baseline solution trajectory; returns (final state, StepTrace)."""
    z, trace = _sampling_loop(model, cond, config, shape)
    if config.trace_path:
        trace.write_csv(config.trace_path)
    return z, trace


def hgs_sample(model, autoencoder, theta, input_image, cond, config):
    """Guided sampling; returns (image, StepTrace, theta_final).

    theta is treated as the run's initial adapter state and is not mutated;
    it persists and accumulates across steps within the run only.
    """
    input_image = np.asarray(input_image, dtype=np.float64)
    latent0, skips = autoencoder.encode(input_image)
    theta_run = theta.copy()

    def hook(t, z_hat, sigma_hat, ev, row):
        if not config.hgs_enabled:
            return
        weight = config.eta * math.exp(-config.lam * t)
        if weight == 0.0:
            return
        z_t0 = predict_z0(z_hat, ev.eps_hat, sigma_hat)
        loss, grads, _ = autoencoder.grad_theta(
            input_image, z_t0, skips, theta_run,
            spec=config.highpass, use_fourier=config.use_fourier,
            use_sobel=config.use_sobel)
        theta_run.axpy(-weight, grads)
        row["fidelity_loss"] = loss
        row["theta_update_norm"] = weight * grads.norm()
        if config.dump_every and config.dump_dir and t % config.dump_every == 0:
            save_tensors(os.path.join(config.dump_dir, f"theta_step{t:04d}.hfgw"),
                         theta_run.to_tensors(), meta={"step": t})

    z_final, trace = _sampling_loop(model, cond, config, latent0.shape, hook)
    image = autoencoder.decode(z_final, skips, theta_run)
    if config.trace_path:
        trace.write_csv(config.trace_path)
    return image, trace, theta_run
