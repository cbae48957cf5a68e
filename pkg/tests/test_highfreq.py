import numpy as np
import pytest

from hfguide import highfreq
from hfguide.errors import InvalidArgumentError
from hfguide.highfreq import (HighPassSpec, fidelity_grad, fidelity_loss,
                              fourier_highpass, fourier_highpass_adjoint,
                              sobel, sobel_adjoint)
from hfguide.rng import Prng

from conftest import fd_gradient, rel_err


def direct_sobel(image):
    """Brute-force replicate-padded correlation with the two Sobel stencils."""
    h, w, c = image.shape
    out = np.zeros((h, w, 2 * c))
    for stencil_idx, k in enumerate((highfreq.SOBEL_GX, highfreq.SOBEL_GY)):
        for ch in range(c):
            for i in range(h):
                for j in range(w):
                    acc = 0.0
                    for a in range(3):
                        for b in range(3):
                            ii = min(max(i + a - 1, 0), h - 1)
                            jj = min(max(j + b - 1, 0), w - 1)
                            acc += image[ii, jj, ch] * k[a, b]
                    out[i, j, 2 * ch + stencil_idx] = acc
    return out


def test_constant_image_maps_to_zero():
    img = np.full((8, 8, 3), 0.42)
    assert np.max(np.abs(fourier_highpass(img))) < 1e-12
    assert np.max(np.abs(sobel(img))) < 1e-12


def test_cosine_eigenfunctions_of_highpass():
    h = w = 16
    yy, xx = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    spec = HighPassSpec(cutoff_fraction=0.25)
    # horizontal frequency k/w cycles per pixel -> fraction of Nyquist 2k/w
    lo = np.cos(2 * np.pi * 1 * xx / w)[:, :, None]   # fraction 0.125 < cutoff
    hi = np.cos(2 * np.pi * 4 * xx / w)[:, :, None]   # fraction 0.5 > cutoff
    assert np.max(np.abs(fourier_highpass(lo, spec))) < 1e-9
    assert np.max(np.abs(fourier_highpass(hi, spec) - hi)) < 1e-9


def test_ramp_interior_sobel_values():
    img = np.arange(8.0)[None, :].repeat(8, axis=0)[:, :, None]
    resp = sobel(img)
    assert np.max(np.abs(resp[1:-1, 1:-1, 0] - 8.0)) < 1e-12  # Gx
    assert np.max(np.abs(resp[1:-1, 1:-1, 1])) < 1e-12        # Gy


def test_sobel_matches_brute_force():
    img = Prng(3).uniform((6, 7, 3))
    assert np.max(np.abs(sobel(img) - direct_sobel(img))) < 1e-12


@pytest.mark.parametrize("c", [1, 3])
def test_sobel_adjoint_identity(c):
    prng = Prng(4 + c)
    x = prng.gaussian((6, 6, c)) * 0.1 + 0.5
    y = prng.gaussian((6, 6, 2 * c))
    lhs = np.sum(sobel(x) * y)
    rhs = np.sum(x * sobel_adjoint(y))
    assert abs(lhs - rhs) < 1e-9


def test_fourier_adjoint_identity():
    prng = Prng(8)
    x = prng.uniform((8, 8, 1))
    y = prng.uniform((8, 8, 1))
    lhs = np.sum(fourier_highpass(x) * y)
    rhs = np.sum(x * fourier_highpass_adjoint(y))
    assert abs(lhs - rhs) < 1e-9


def test_loss_zero_and_symmetric():
    prng = Prng(9)
    a, b = prng.uniform((8, 8, 3)), prng.uniform((8, 8, 3))
    assert fidelity_loss(a, a) == 0.0
    assert abs(fidelity_loss(a, b) - fidelity_loss(b, a)) < 1e-9
    assert fidelity_loss(a, b) > 0.0


def test_loss_compositional_oracle():
    prng = Prng(10)
    a, b = prng.uniform((8, 8, 1)), prng.uniform((8, 8, 1))
    spec = HighPassSpec()
    df = fourier_highpass(a, spec) - fourier_highpass(b, spec)
    ds = sobel(a) - sobel(b)
    want = float(np.sum(df * df) + np.sum(ds * ds))
    assert abs(fidelity_loss(a, b, spec) - want) < 1e-9
    assert abs(fidelity_loss(a, b, spec, use_sobel=False) - np.sum(df * df)) < 1e-9
    assert abs(fidelity_loss(a, b, spec, use_fourier=False) - np.sum(ds * ds)) < 1e-9


def test_grad_matches_finite_differences():
    prng = Prng(11)
    ref = prng.uniform((6, 6, 1))
    cand = prng.uniform((6, 6, 1))
    grad = fidelity_grad(ref, cand)
    fd = fd_gradient(lambda c: fidelity_loss(ref, c), cand, h=1e-5)
    assert rel_err(fd, grad) < 1e-5


def test_grad_linear_in_difference():
    prng = Prng(12)
    ref = prng.uniform((8, 8, 1))
    d = prng.gaussian((8, 8, 1)) * 0.01
    g1 = fidelity_grad(ref, ref + d)
    g3 = fidelity_grad(ref, ref + 3.0 * d)
    assert rel_err(g3, 3.0 * g1) < 1e-9


def test_constant_offset_invariance_interior():
    # A constant offset passes through neither operator, except that Sobel's
    # replicate padding makes the 1-pixel border sensitive; mask it out.
    prng = Prng(13)
    ref = prng.uniform((10, 10, 1))
    cand = prng.uniform((10, 10, 1))
    l0 = fidelity_loss(ref, cand, use_sobel=False)
    l1 = fidelity_loss(ref, cand + 0.25, use_sobel=False)
    assert abs(l0 - l1) < 1e-9
    s0 = sobel(cand)
    s1 = sobel(cand + 0.25)
    assert np.max(np.abs(s0[1:-1, 1:-1] - s1[1:-1, 1:-1])) < 1e-12


def test_shape_mismatch_and_bad_cutoff_rejected():
    with pytest.raises(InvalidArgumentError):
        fidelity_loss(np.zeros((4, 4, 1)), np.zeros((5, 5, 1)))
    with pytest.raises(InvalidArgumentError):
        HighPassSpec(cutoff_fraction=0.0)
    with pytest.raises(InvalidArgumentError):
        HighPassSpec(cutoff_fraction=1.0)
    with pytest.raises(InvalidArgumentError):
        sobel_adjoint(np.zeros((4, 4, 3)))
