"""Seeded random generation with a portable, documented contract.

The uniform stream comes from numpy's PCG64 bit generator. Gaussian draws
are produced by an explicit Box-Muller transform over that stream rather
than numpy's ziggurat sampler, so the transform is pinned and the stream
is bit-reproducible within a build. Child generators are derived through
SeedSequence spawn keys, so parallel consumers never share state and the
stream seen by any one consumer does not depend on how many others exist.
"""
from __future__ import annotations

import math

import numpy as np

ALGORITHM = "pcg64+box-muller"


class Prng:
    """Single-owner random stream. Never share an instance across workers."""

    def __init__(self, seed):
        if isinstance(seed, np.random.SeedSequence):
            self._seq = seed
        else:
            self._seq = np.random.SeedSequence(int(seed))
        self._gen = np.random.Generator(np.random.PCG64(self._seq))

    def uniform(self, shape=()):
        """Uniform draws on the half-open interval [0, 1)."""
        return self._gen.random(shape)

    def gaussian(self, shape=()):
        """Standard normal draws via Box-Muller on the uniform stream."""
        n = int(np.prod(shape)) if shape else 1
        m = (n + 1) // 2
        u = self._gen.random((2, m))
        # log(1-u) keeps the argument strictly positive for u in [0,1).
        r = np.sqrt(-2.0 * np.log1p(-u[0]))
        theta = 2.0 * math.pi * u[1]
        z = np.concatenate([r * np.cos(theta), r * np.sin(theta)])[:n]
        if shape == ():
            return float(z[0])
        return z.reshape(shape)

    def integers(self, low, high):
        """One integer uniform on [low, high)."""
        return int(self._gen.integers(low, high))

    def choice_index(self, n):
        return self.integers(0, n)

    def spawn(self, n):
        """Derive n independent child streams (documented split function)."""
        return [Prng(seq) for seq in self._seq.spawn(n)]


def child_seed_sequence(master_seed, index):
    """Deterministic per-item stream, independent of worker count/order."""
    return np.random.SeedSequence(int(master_seed), spawn_key=(int(index),))
