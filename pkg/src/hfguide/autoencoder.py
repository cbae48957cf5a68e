"""Toy autoencoder with encoder skip taps and LoRA skip fusion.

The base autoencoder is constructed, not trained. Encoder stage 1 is a
lossless 2x2/stride-2 convolution (space-to-depth followed by an
orthogonal Haar-style channel mixing), so the first skip tap carries the
full image content. Stage 2 (binomial blur, stride-2 subsample, 12->4
projection, mild tanh nonlinearity) is the lossy step: everything above
the 8x8 resampling band is gone from the latent, which is the
information-loss regime the guidance mechanism targets.

The decoder mirrors the encoder and is frozen. At each decoder stage a
low-rank adapter (down-projection A, up-projection B, B zero at init)
convolves the matching encoder skip features and adds them to the stage's
feature map. Those adapters are the only trainable parameters; their
exact gradients under the fidelity loss come from the Tape facility.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from . import highfreq, kernels, tape
from .errors import InvalidArgumentError
from .imgio import ensure_image
from .rng import Prng

BINOMIAL3 = np.array([[1.0, 2.0, 1.0],
                      [2.0, 4.0, 2.0],
                      [1.0, 2.0, 1.0]]) / 16.0

LUMA = np.array([0.299, 0.587, 0.114])


def _haar_mixing():
    """Orthogonal 12x12 map from (sub-position, color) channels to Haar coords.

    Input channel layout (space_to_depth2): ((p*2+q)*3 + c). Output layout:
    [avg_rgb, dh_rgb, dv_rgb, dd_rgb], each scaled 1/2 (orthonormal).
    """
    signs = {
        0: np.array([1.0, 1.0, 1.0, 1.0]),    # avg
        1: np.array([1.0, -1.0, 1.0, -1.0]),  # horizontal detail
        2: np.array([1.0, 1.0, -1.0, -1.0]),  # vertical detail
        3: np.array([1.0, -1.0, -1.0, 1.0]),  # diagonal detail
    }
    m = np.zeros((12, 12))
    for band in range(4):
        for c in range(3):
            out = band * 3 + c
            for pos in range(4):
                m[pos * 3 + c, out] = signs[band][pos] / 2.0
    return m


def _latent_projection():
    """Orthonormal 4x12 rows: avg_r, avg_g, avg_b, luma of (dh+dv) details."""
    p = np.zeros((4, 12))
    p[0, 0], p[1, 1], p[2, 2] = 1.0, 1.0, 1.0
    row = np.zeros(12)
    row[3:6] = LUMA
    row[6:9] = LUMA
    p[3] = row / np.linalg.norm(row)
    return p


def _depthwise(kernel, channels):
    w = np.zeros(kernel.shape + (channels, channels))
    for c in range(channels):
        w[:, :, c, c] = kernel
    return w


def _phi_nodes(x):
    """Mild pointwise nonlinearity x + 0.02*tanh(x)."""
    return tape.add(x, tape.scale(tape.tanh(x), 0.02))


def _phi(x):
    return x + 0.02 * np.tanh(x)


@dataclass
class LoraTap:
    a: np.ndarray  # (3, 3, c_skip, rank) down-projection
    b: np.ndarray  # (1, 1, rank, c_stage) up-projection


@dataclass
class LoraParams:
    """Adapter parameters theta; taps keyed by skip name ('s8', 's16')."""
    taps: dict

    def copy(self):
        return LoraParams({k: LoraTap(t.a.copy(), t.b.copy()) for k, t in self.taps.items()})

    def axpy(self, alpha, other):
        """In-place theta += alpha * other (used for the sampler's update)."""
        for k, t in self.taps.items():
            t.a += alpha * other.taps[k].a
            t.b += alpha * other.taps[k].b

    def norm(self):
        sq = 0.0
        for t in self.taps.values():
            sq += float(np.sum(t.a * t.a) + np.sum(t.b * t.b))
        return np.sqrt(sq)

    def to_tensors(self):
        out = {}
        for k, t in self.taps.items():
            out[f"{k}.a"] = t.a
            out[f"{k}.b"] = t.b
        return out


def init_lora(rank=4, seed=0, both_random=False, a_std=0.02):
    """A gaussian (std 0.02), B zero, so the adapter starts as the identity.

    both_random=True reproduces the literal random init of both factors.
    """
    prng = Prng(np.random.SeedSequence(seed, spawn_key=(0x10ad,)))
    taps = {}
    for name, c in (("s8", 4), ("s16", 12)):
        a = a_std * prng.gaussian((3, 3, c, rank))
        if both_random:
            b = a_std * prng.gaussian((1, 1, rank, c))
        else:
            b = np.zeros((1, 1, rank, c))
        taps[name] = LoraTap(a=a, b=b)
    return LoraParams(taps)


class ToyAutoencoder:
    """Frozen constructed autoencoder: 32x32x3 <-> 8x8x4 with two skip taps."""

    def __init__(self):
        self._mix = _haar_mixing()               # (12, 12), orthogonal
        self._proj = _latent_projection()        # (4, 12), orthonormal rows
        self._w_unmix = self._mix.T[None, None]  # 1x1 kernel, inverse mixing
        self._w_expand = self._proj[None, None]  # 1x1 kernel, 4 -> 12
        self._blur12 = _depthwise(BINOMIAL3, 12)

    # -- encoder (plain numpy; frozen, no gradients ever flow here) ------
    def encode(self, image):
        image = ensure_image(image)
        h, w, c = image.shape
        if h % 4 or w % 4:
            raise InvalidArgumentError(f"spatial dims must be divisible by 4, got {h}x{w}")
        if c != 3:
            raise InvalidArgumentError("autoencoder expects 3-channel images")
        s16 = tape.space_to_depth2(tape.constant(image)).value @ self._mix
        blurred = kernels.conv2d_mc(s16, self._blur12, "replicate")
        s8 = blurred[::2, ::2] @ self._proj.T
        latent = _phi(s8)
        return latent, {"s16": s16, "s8": latent}

    # -- decoder ----------------------------------------------------------
    def _decode_nodes(self, latent, skips, theta_nodes, linear):
        def lora(skip, tap):
            down = tape.conv2d(skip, tap.a, "replicate")
            return tape.conv2d(down, tap.b, "replicate")

        f0 = tape.add(tape.as_node(latent), lora(tape.constant(skips["s8"]),
                                                 theta_nodes.taps["s8"]))
        u = tape.upsample2(f0)
        e = tape.conv2d(u, tape.constant(self._w_expand), "replicate")
        sm = tape.conv2d(e, tape.constant(self._blur12), "replicate")
        f1 = tape.add(sm, lora(tape.constant(skips["s16"]), theta_nodes.taps["s16"]))
        if not linear:
            f1 = _phi_nodes(f1)
        out12 = tape.conv2d(f1, tape.constant(self._w_unmix), "replicate")
        img = tape.depth_to_space2(out12)
        if not linear:
            img = tape.clip01(img)
        return img

    def _theta_nodes(self, theta, requires_grad):
        mk = tape.param if requires_grad else tape.constant
        return LoraParams({k: LoraTap(mk(t.a), mk(t.b)) for k, t in theta.taps.items()})

    def decode(self, latent, skips, theta, linear=False):
        """Base decode plus the adapters' skip contributions; values in [0,1]."""
        self._check_decode_args(latent, skips, theta)
        node = self._decode_nodes(tape.constant(latent), skips,
                                  self._theta_nodes(theta, False), linear)
        return node.value

    def _check_decode_args(self, latent, skips, theta):
        latent = np.asarray(latent)
        if latent.ndim != 3 or latent.shape[2] != 4:
            raise InvalidArgumentError(f"latent must be (h,w,4), got {latent.shape}")
        s16, s8 = np.asarray(skips["s16"]), np.asarray(skips["s8"])
        if s8.shape != latent.shape:
            raise InvalidArgumentError("s8 skip shape inconsistent with latent")
        if s16.shape != (2 * latent.shape[0], 2 * latent.shape[1], 12):
            raise InvalidArgumentError("s16 skip shape inconsistent with latent")
        for k, c in (("s8", 4), ("s16", 12)):
            tap = theta.taps[k]
            if tap.a.shape[2] != c or tap.b.shape[3] != c:
                raise InvalidArgumentError(f"theta tap {k!r} has wrong channel counts")

    def grad_theta(self, reference, latent, skips, theta,
                   spec=highfreq.HighPassSpec(), use_fourier=True, use_sobel=True):
        """Fidelity loss at decode(latent, skips, theta) and its exact theta gradient.

        Returns (loss, LoraParams-of-gradients, decoded image).
        """
        self._check_decode_args(latent, skips, theta)
        theta_nodes = self._theta_nodes(theta, True)
        out = self._decode_nodes(tape.constant(latent), skips, theta_nodes, False)
        loss = highfreq.fidelity_loss(reference, out.value, spec, use_fourier, use_sobel)
        seed = highfreq.fidelity_grad(reference, out.value, spec, use_fourier, use_sobel)
        out.backward(seed)
        grads = LoraParams({k: LoraTap(t.a.grad.copy(), t.b.grad.copy())
                            for k, t in theta_nodes.taps.items()})
        return loss, grads, out.value

    def base_checksum(self):
        """Digest of the frozen weights; used to assert nothing mutates them."""
        h = hashlib.sha256()
        for arr in (self._mix, self._proj, self._blur12):
            h.update(np.ascontiguousarray(arr).tobytes())
        return h.hexdigest()
