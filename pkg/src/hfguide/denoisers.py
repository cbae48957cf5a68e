"""Denoiser contract and closed-form denoisers used for verification.

Every denoiser returns a DenoiserEval whose two fields are algebraically
consistent: z_denoised == (z - sigma * eps_hat) / alpha. The analytic
denoisers are defined for the variance-exploding convention alpha == 1.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError
from .schedule import predict_z0


@dataclass
class DenoiserEval:
    eps_hat: np.ndarray
    z_denoised: np.ndarray


def denoise(model, z_hat_t, sigma_hat, cond=None, alpha=1.0):
    """Evaluate a denoiser; enforces sigma > 0 and output consistency."""
    if sigma_hat <= 0:
        raise InvalidArgumentError(f"sigma must be > 0, got {sigma_hat}")
    z_hat_t = np.asarray(z_hat_t, dtype=np.float64)
    eps_hat = np.asarray(model.predict_eps(z_hat_t, sigma_hat, cond), dtype=np.float64)
    return DenoiserEval(eps_hat=eps_hat,
                        z_denoised=predict_z0(z_hat_t, eps_hat, sigma_hat, alpha))


class OracleDenoiser:
    """Knows the clean sample; implies eps_hat = (z - z0) / sigma exactly."""

    def __init__(self, z0):
        self.z0 = np.asarray(z0, dtype=np.float64)

    def predict_eps(self, z, sigma, cond):
        return (z - self.z0) / sigma


class GaussianDenoiser:
    """Exact posterior mean under an independent gaussian prior N(mean, var).

    For z = z0 + sigma * eps the posterior mean per coordinate is
    (sigma^2 * mean + var * z) / (var + sigma^2).
    """

    def __init__(self, mean=0.0, var=1.0):
        self.mean = np.asarray(mean, dtype=np.float64)
        self.var = np.asarray(var, dtype=np.float64)
        if np.any(self.var <= 0):
            raise InvalidArgumentError("prior variance must be positive")

    def posterior_mean(self, z, sigma):
        return (sigma ** 2 * self.mean + self.var * z) / (self.var + sigma ** 2)

    def predict_eps(self, z, sigma, cond):
        return (z - self.posterior_mean(z, sigma)) / sigma


class TwoPointDenoiser:
    """Prior z0 in {-mu, +mu} with equal weights; posterior mean mu*tanh(mu*z/sigma^2)."""

    def __init__(self, mu=1.0):
        self.mu = float(mu)

    def posterior_mean(self, z, sigma):
        return self.mu * np.tanh(self.mu * z / sigma ** 2)

    def responsibility_positive(self, z, sigma):
        """P(z0 = +mu | z); softmax over the two quadratic scores."""
        s_pos = -((z - self.mu) ** 2) / (2 * sigma ** 2)
        s_neg = -((z + self.mu) ** 2) / (2 * sigma ** 2)
        m = np.maximum(s_pos, s_neg)
        e_pos = np.exp(s_pos - m)
        return e_pos / (e_pos + np.exp(s_neg - m))

    def predict_eps(self, z, sigma, cond):
        return (z - self.posterior_mean(z, sigma)) / sigma


class StubDenoiser:
    """Fixed eps prediction; used by decay-weight and plumbing tests."""

    def __init__(self, eps_value=0.0):
        self.eps_value = eps_value

    def predict_eps(self, z, sigma, cond):
        return np.broadcast_to(np.asarray(self.eps_value, dtype=np.float64), z.shape).copy()
