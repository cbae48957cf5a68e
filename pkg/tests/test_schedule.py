import math

import numpy as np
import pytest

from hfguide.errors import InvalidArgumentError
from hfguide.rng import Prng
from hfguide.schedule import (GAMMA_CAP, ChurnParams, Schedule,
                              build_edm_schedule, forward_diffuse, gamma,
                              predict_z0)


def test_endpoints_T2():
    s = build_edm_schedule(2, sigma_min=0.002, sigma_max=80.0)
    assert s.sigmas[0] == 0.0
    assert abs(s.sigmas[1] - 0.002) < 1e-15
    assert abs(s.sigmas[2] - 80.0) < 1e-12
    assert np.all(s.alphas == 1.0)


def test_strictly_increasing_T50():
    s = build_edm_schedule(50)
    assert np.all(np.diff(s.sigmas) > 0)
    assert s.sigmas[-1] == pytest.approx(80.0)
    assert s.sigmas[1] == pytest.approx(0.002)


def test_midpoint_matches_power_formula():
    T, smin, smax, rho = 5, 0.01, 10.0, 7.0
    s = build_edm_schedule(T, smin, smax, rho)
    # descending index i = 0..T-1 maps to t = T-i
    for i in range(T):
        want = (smax ** (1 / rho)
                + i / (T - 1) * (smin ** (1 / rho) - smax ** (1 / rho))) ** rho
        assert s.sigmas[T - i] == pytest.approx(want, rel=1e-14)


def test_gamma_examples():
    s = build_edm_schedule(10, sigma_min=0.01, sigma_max=80.0)
    churn = ChurnParams(s_churn=80.0, s_tmin=0.0, s_tmax=float("inf"))
    # s_churn/n = 80/50 exceeds the cap
    assert gamma(10, s, churn, 50) == pytest.approx(math.sqrt(2.0) - 1.0)
    assert gamma(10, s, churn, 50) == pytest.approx(0.414214, abs=1e-6)
    # below the cap: exactly s_churn/n
    churn2 = ChurnParams(s_churn=2.0)
    assert gamma(10, s, churn2, 10) == pytest.approx(0.2)
    # outside the [s_tmin, s_tmax] window: zero
    churn3 = ChurnParams(s_churn=2.0, s_tmin=0.0, s_tmax=1.0)
    assert gamma(10, s, churn3, 10) == 0.0
    assert gamma(10, s, ChurnParams(s_churn=0.0), 10) == 0.0


def test_gamma_never_exceeds_cap():
    s = build_edm_schedule(20)
    churn = ChurnParams(s_churn=1e6)
    for t in range(1, 21):
        assert 0.0 <= gamma(t, s, churn, 20) <= GAMMA_CAP + 1e-15


def test_forward_predict_round_trip():
    s = build_edm_schedule(8)
    prng = Prng(5)
    z0 = prng.gaussian((4, 4, 2))
    eps = prng.gaussian((4, 4, 2))
    for t in (1, 4, 8):
        z_t = forward_diffuse(z0, eps, t, s)
        back = predict_z0(z_t, eps, s.sigmas[t], s.alphas[t])
        assert np.max(np.abs(back - z0)) < 1e-12


def test_validation_errors():
    with pytest.raises(InvalidArgumentError):
        build_edm_schedule(1)
    with pytest.raises(InvalidArgumentError):
        build_edm_schedule(10, sigma_min=2.0, sigma_max=1.0)
    with pytest.raises(InvalidArgumentError):
        build_edm_schedule(10, rho=0.0)
    with pytest.raises(InvalidArgumentError):
        Schedule(T=2, sigmas=np.array([0.1, 0.5, 1.0]), alphas=np.ones(3))
    with pytest.raises(InvalidArgumentError):
        Schedule(T=2, sigmas=np.array([0.0, 0.5, 0.5]), alphas=np.ones(3))
    with pytest.raises(InvalidArgumentError):
        Schedule(T=2, sigmas=np.array([0.0, 0.5, 1.0]), alphas=np.array([1.0, 0.0, 1.0]))
    with pytest.raises(InvalidArgumentError):
        ChurnParams(s_churn=-1.0)
    with pytest.raises(InvalidArgumentError):
        ChurnParams(s_tmin=2.0, s_tmax=1.0)
    with pytest.raises(InvalidArgumentError):
        predict_z0(np.zeros(3), np.zeros(3), 1.0, alpha=0.0)
    with pytest.raises(InvalidArgumentError):
        forward_diffuse(np.zeros(3), np.zeros(4), 1, build_edm_schedule(2))
