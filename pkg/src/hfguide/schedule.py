"""Discrete noise schedules, churn coefficient, forward diffusion, z0 estimate.

Schedules are indexed by step t in 0..T with sigmas[t] strictly increasing
in t and sigmas[0] == 0, so a sampler walks t = T..1. The default builder
uses the rho-spaced power interpolation between sigma_max and sigma_min
with the variance-exploding convention alpha_t == 1; alpha is kept as a
field because the z0 estimate divides by it and variance-preserving
schedules must remain expressible.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError

GAMMA_CAP = math.sqrt(2.0) - 1.0


@dataclass(frozen=True)
class Schedule:
    T: int
    sigmas: np.ndarray  # length T+1, sigmas[0] == 0, strictly increasing
    alphas: np.ndarray  # length T+1, strictly positive

    def __post_init__(self):
        sigmas = np.asarray(self.sigmas, dtype=np.float64)
        alphas = np.asarray(self.alphas, dtype=np.float64)
        if len(sigmas) != self.T + 1 or len(alphas) != self.T + 1:
            raise InvalidArgumentError("sigmas/alphas must have length T+1")
        if sigmas[0] != 0.0:
            raise InvalidArgumentError("sigma_0 must be exactly 0")
        if np.any(np.diff(sigmas) <= 0):
            raise InvalidArgumentError("sigmas must be strictly increasing in t")
        if np.any(alphas <= 0):
            raise InvalidArgumentError("alphas must be strictly positive")
        object.__setattr__(self, "sigmas", sigmas)
        object.__setattr__(self, "alphas", alphas)


@dataclass(frozen=True)
class ChurnParams:
    s_churn: float = 0.0
    s_noise: float = 1.0
    s_tmin: float = 0.0
    s_tmax: float = float("inf")

    def __post_init__(self):
        if self.s_churn < 0:
            raise InvalidArgumentError("s_churn must be >= 0")
        if self.s_noise <= 0:
            raise InvalidArgumentError("s_noise must be > 0")
        if not 0 <= self.s_tmin <= self.s_tmax:
            raise InvalidArgumentError("need 0 <= s_tmin <= s_tmax")


def build_edm_schedule(T, sigma_min=0.002, sigma_max=80.0, rho=7.0):
    """rho-spaced power interpolation from sigma_max down to sigma_min, plus sigma_0 = 0."""
    if T < 2:
        raise InvalidArgumentError("T must be >= 2")
    if not 0 < sigma_min < sigma_max:
        raise InvalidArgumentError("need 0 < sigma_min < sigma_max")
    if rho <= 0:
        raise InvalidArgumentError("rho must be > 0")
    i = np.arange(T)
    desc = (sigma_max ** (1 / rho)
            + i / (T - 1) * (sigma_min ** (1 / rho) - sigma_max ** (1 / rho))) ** rho
    sigmas = np.zeros(T + 1)
    sigmas[1:] = desc[::-1]  # sigmas[t] for t = 1..T; sigmas[T] == sigma_max
    return Schedule(T=T, sigmas=sigmas, alphas=np.ones(T + 1))


def gamma(t, schedule, churn, n):
    """Churn coefficient for step t with n total evaluations."""
    sigma_t = schedule.sigmas[t]
    if churn.s_tmin <= sigma_t <= churn.s_tmax:
        return min(churn.s_churn / n, GAMMA_CAP)
    return 0.0


def forward_diffuse(z0, eps, t, schedule):
    """alpha_t * z0 + sigma_t * eps."""
    z0 = np.asarray(z0, dtype=np.float64)
    eps = np.asarray(eps, dtype=np.float64)
    if z0.shape != eps.shape:
        raise InvalidArgumentError(f"shape mismatch: {z0.shape} vs {eps.shape}")
    return schedule.alphas[t] * z0 + schedule.sigmas[t] * eps


def predict_z0(z_t, eps_hat, sigma, alpha=1.0):
    """(z_t - sigma * eps_hat) / alpha at the effective (possibly churned) sigma."""
    if alpha == 0:
        raise InvalidArgumentError("alpha must be nonzero")
    z_t = np.asarray(z_t, dtype=np.float64)
    eps_hat = np.asarray(eps_hat, dtype=np.float64)
    if z_t.shape != eps_hat.shape:
        raise InvalidArgumentError(f"shape mismatch: {z_t.shape} vs {eps_hat.shape}")
    return (z_t - sigma * eps_hat) / alpha
