import math

import numpy as np
import pytest

from hfguide.errors import InvalidArgumentError
from hfguide.metrics import (SSIM_C1, hf_residual, psnr, report, ssim,
                             write_reports_csv)
from hfguide.rng import Prng


def test_psnr_identical_is_infinite():
    x = Prng(1).uniform((8, 8, 3))
    assert psnr(x, x) == float("inf")


def test_psnr_known_value():
    x = np.zeros((4, 4))
    y = np.full((4, 4), 0.5)
    # MSE = 0.25 -> 10*log10(1/0.25) = 6.0206 dB
    assert psnr(x, y) == pytest.approx(10 * math.log10(4.0), abs=1e-9)
    assert psnr(x, y) == pytest.approx(6.0206, abs=1e-4)


def test_psnr_uniform_difference_one_is_zero_db():
    assert psnr(np.zeros((4, 4)), np.ones((4, 4))) == pytest.approx(0.0, abs=1e-12)


def test_psnr_monotone_in_mse():
    x = np.zeros((8, 8))
    vals = [psnr(x, np.full((8, 8), d)) for d in (0.1, 0.2, 0.4, 0.8)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_psnr_shape_mismatch():
    with pytest.raises(InvalidArgumentError):
        psnr(np.zeros((2, 2)), np.zeros((3, 3)))


def test_ssim_constant_pair_closed_form():
    a, b = 0.3, 0.7
    x = np.full((16, 16), a)
    y = np.full((16, 16), b)
    want = (2 * a * b + SSIM_C1) / (a ** 2 + b ** 2 + SSIM_C1)
    assert ssim(x, y) == pytest.approx(want, abs=1e-6)


def test_ssim_identity_and_range():
    x = Prng(2).uniform((16, 16, 3))
    assert ssim(x, x) == pytest.approx(1.0, abs=1e-9)
    y = Prng(3).uniform((16, 16, 3))
    assert -1.0 <= ssim(x, y) < 1.0


def test_ssim_symmetric():
    x = Prng(8).uniform((16, 16))
    y = Prng(9).uniform((16, 16))
    assert ssim(x, y) == pytest.approx(ssim(y, x), abs=1e-12)


def test_hf_residual_identity_and_symmetry():
    x = Prng(4).uniform((16, 16, 1))
    y = Prng(5).uniform((16, 16, 1))
    assert hf_residual(x, x) == 0.0
    assert hf_residual(x, y) == pytest.approx(hf_residual(y, x), abs=1e-12)
    assert hf_residual(x, y) > 0.0


def test_hf_residual_ignores_constant_offset():
    x = Prng(10).uniform((12, 12, 1)) * 0.5
    assert hf_residual(x, x + 0.25) == pytest.approx(0.0, abs=1e-9)


def test_hf_residual_is_sqrt_of_fourier_loss_term():
    from hfguide.highfreq import fidelity_loss
    x = Prng(11).uniform((16, 16, 3))
    y = Prng(12).uniform((16, 16, 3))
    want = math.sqrt(fidelity_loss(x, y, use_sobel=False))
    assert hf_residual(x, y) == pytest.approx(want, rel=1e-9)


def test_report_and_csv(tmp_path):
    x = Prng(6).uniform((16, 16, 3))
    y = Prng(7).uniform((16, 16, 3))
    rep = report(x, y)
    assert rep.psnr == pytest.approx(psnr(x, y))
    path = tmp_path / "metrics.csv"
    write_reports_csv(str(path), [("item0", rep)])
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "id,psnr_db,ssim,hf_residual"
    assert lines[1].startswith("item0,")
