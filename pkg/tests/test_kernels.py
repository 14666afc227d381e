"""Lane agreement and oracle checks for the hot kernels."""

import math

import mpmath as mp
import numpy as np
import pytest

from qcsurgery import _kernels as K

BLOCKS = [0, 1, 2, 3, 4]


@pytest.fixture(scope="module")
def lanes():
    nb = K.numba_lane()
    assert nb is not None, "numba lane expected in the test environment"
    return K.numpy_lane(), nb


@pytest.fixture(scope="module")
def samples():
    rng = np.random.default_rng(42)
    zs = rng.uniform(-35, 25, 400) + 1j * rng.uniform(-30, 30, 400)
    xs = rng.uniform(-38, 60, 400)
    return zs, xs


def _rel(a, b):
    return np.max(np.abs(a - b) / np.maximum(1.0, np.abs(a)))


@pytest.mark.parametrize("m", BLOCKS)
def test_lanes_agree(lanes, samples, m):
    np_lane, nb_lane = lanes
    zs, xs = samples
    lm_a, ar_a = np_lane["log_g_values"](m, zs)
    lm_b, ar_b = nb_lane["log_g_values"](m, zs)
    assert _rel(lm_a, lm_b) < 5e-14
    assert _rel(ar_a, ar_b) < 5e-14
    assert _rel(np_lane["ll_g_real"](m, xs), nb_lane["ll_g_real"](m, xs)) < 5e-14
    assert _rel(np_lane["lgpg_real"](m, xs), nb_lane["lgpg_real"](m, xs)) < 5e-14
    assert _rel(np_lane["log_gpg_values"](m, zs),
                nb_lane["log_gpg_values"](m, zs)) < 5e-14
    assert _rel(np_lane["pm_values"](m, zs), nb_lane["pm_values"](m, zs)) < 5e-14


def _mp_log_g(m, z):
    z = mp.mpc(z)
    w = mp.e ** z
    p = sum((-1) ** k * w ** k / mp.factorial(k) for k in range(2 * m + 1))
    return w + mp.log(p)


@pytest.mark.parametrize("m", [0, 1, 2, 4])
def test_log_g_against_mpmath(m):
    mp.mp.dps = 60
    rng = np.random.default_rng(7)
    zs = rng.uniform(-30, 15, 25) + 1j * rng.uniform(-15, 15, 25)
    lm, ar = K.log_g_values(m, zs)
    for z, l, a in zip(zs, lm, ar):
        ref = _mp_log_g(m, z)
        assert abs(l - float(ref.real)) <= 1e-13 * max(1, abs(float(ref.real)))
        assert abs(a - float(ref.imag)) <= 1e-13 * max(1, abs(float(ref.imag)))


@pytest.mark.parametrize("m", [0, 1, 3])
def test_ll_real_deep_tail_against_mpmath(m):
    mp.mp.dps = 400
    for x in [-38.0, -30.0, -12.0, -3.0, 0.5, 2.0, 25.0, 31.0, 55.0]:
        got = float(K.ll_g_real(m, np.array([x]))[0])
        ref = float(mp.log(_mp_log_g(m, mp.mpf(x)).real))
        assert abs(got - ref) <= 1e-13 * max(1.0, abs(ref))


def test_ll_monotone_and_huge_arguments():
    for m in BLOCKS:
        xs = np.linspace(-40, 50, 5000)
        ll = K.ll_g_real(m, xs)
        assert np.all(np.diff(ll) > 0)
    assert float(K.ll_g_real(2, np.array([1e6]))[0]) == 1e6


@pytest.mark.parametrize("m,n", [(0, 1), (1, 0), (0, 2), (2, 1), (1, 2)])
def test_phi_residual_in_ll_units(m, n):
    k = (2 * m + 1) / (2 * n + 1)
    c = (math.lgamma(2 * n + 2) - math.lgamma(2 * m + 2)) / (2 * n + 1)
    xs = np.array([-32.0, -18.0, -4.0, 0.0, 3.0, 11.0, 27.0, 44.0, 2e5])
    ys = K.phi_values(m, n, k, c, xs, 1e-12)
    assert not np.any(np.isnan(ys))
    resid = np.abs(K.ll_g_real(n, ys) - K.ll_g_real(m, xs))
    assert np.max(resid) <= 1e-12
