import numpy as np
import pytest

from hfguide.rng import Prng


@pytest.fixture
def prng():
    return Prng(12345)


def rand_image(prng, h, w, c=3):
    return prng.uniform((h, w, c))


def fd_gradient(fn, x, h=1e-6):
    """Dense central finite-difference gradient of a scalar function."""
    x = np.array(x, dtype=np.float64)
    g = np.zeros_like(x)
    flat = x.reshape(-1)
    gf = g.reshape(-1)
    for i in range(flat.size):
        old = flat[i]
        flat[i] = old + h
        fp = fn(x)
        flat[i] = old - h
        fm = fn(x)
        flat[i] = old
        gf[i] = (fp - fm) / (2 * h)
    return g


def rel_err(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    denom = max(np.max(np.abs(a)), np.max(np.abs(b)), 1e-12)
    return float(np.max(np.abs(a - b)) / denom)
