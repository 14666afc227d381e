"""Block-function evaluation: examples, invariants, zero enumeration."""

import math

import mpmath as mp
import numpy as np
import pytest

from qcsurgery.special import (LogComplex, ZeroOfGError, eval_P, log_g,
                               log_g_array, log_g_prime_over_g, log_gpg,
                               pm_roots, zeros_g)


def test_eval_P_examples():
    assert eval_P(0, 3.7 + 2.1j) == 1.0
    assert eval_P(1, 2.0) == pytest.approx(1.0)  # 1 - 2 + 2
    roots = sorted(pm_roots(1), key=lambda w: w.imag)
    assert roots[0] == pytest.approx(1 - 1j, abs=1e-13)
    assert roots[1] == pytest.approx(1 + 1j, abs=1e-13)


def test_eval_P_rejects_bad_block():
    with pytest.raises(ValueError):
        eval_P(-1, 0.0)
    with pytest.raises(ValueError):
        eval_P(1.5, 0.0)


def test_log_g_block_zero_is_plain_exponential():
    z = 1.3 + 0.7j
    lc = log_g(0, z)
    ez = np.exp(z)
    assert lc.log_mod == pytest.approx(ez.real, rel=1e-14)
    assert lc.arg == pytest.approx(ez.imag, rel=1e-14)


def test_log_g_left_tail_tends_to_one():
    # property: g(m, x) -> 1 as x -> -infinity on the real axis
    for m in (0, 1, 3):
        prev = None
        for x in (-10.0, -20.0, -30.0):
            lc = log_g(m, x)
            assert abs(lc.arg) < 1e-15
            assert 0 < lc.log_mod < (1e-3 if x <= -10 else 1.0)
            if prev is not None:
                assert lc.log_mod < prev
            prev = lc.log_mod
    assert log_g(1, -30.0).log_mod < 1e-35


def test_log_g_against_quadruple_precision_oracle():
    mp.mp.dps = 50
    z = mp.mpf(3)
    w = mp.e ** z
    ref = w + mp.log(1 - w + w * w / 2)
    lc = log_g(1, 3.0)
    assert lc.log_mod == pytest.approx(float(ref), rel=1e-14)
    assert lc.arg == pytest.approx(0.0, abs=1e-14)


def test_log_g_matches_direct_evaluation_when_moderate():
    rng = np.random.default_rng(3)
    for m in (0, 1, 2):
        zs = rng.uniform(-2, 2, 60) + 1j * rng.uniform(-3, 3, 60)
        lm, ar = log_g_array(m, zs)
        direct = eval_P(m, np.exp(zs)) * np.exp(np.exp(zs))
        got = np.exp(lm + 1j * ar)
        assert np.max(np.abs(got - direct) / np.abs(direct)) < 1e-12


def test_log_g_raises_at_zero():
    zero = zeros_g(1, (0, 1, 0, 1))[0]
    with pytest.raises(ZeroOfGError):
        log_g(1, zero)


def test_log_g_prime_over_g_examples():
    z = 0.4 - 1.1j
    assert log_g_prime_over_g(0, z) == pytest.approx(np.exp(z), rel=1e-13)
    # closed form at z = i pi: e^{3 i pi} / (2! * P_1(-1)) = -1/5
    got = log_g_prime_over_g(1, 1j * math.pi)
    assert got == pytest.approx(-0.2, abs=1e-13)


def test_log_derivative_finite_and_nonzero():
    # g' never vanishes: the log-derivative is finite and nonzero away
    # from the zeros of g itself
    rng = np.random.default_rng(11)
    for m in (0, 1, 2):
        zs = rng.uniform(-20, 20, 100) + 1j * rng.uniform(-20, 20, 100)
        vals = log_gpg(m, zs)
        assert np.all(np.isfinite(vals))


def test_log_derivative_growth_ratio():
    # log+ |g'/g| / Re+ z -> 1 for large Re z
    for m in (0, 1, 2):
        val = log_gpg(m, 35.0 + 3.0j).real
        assert val / 35.0 == pytest.approx(1.0, abs=0.05)


def test_logcomplex_product_quotient_match_complex_arithmetic():
    rng = np.random.default_rng(5)
    for _ in range(50):
        a = complex(rng.uniform(-2, 2), rng.uniform(-2, 2))
        b = complex(rng.uniform(-2, 2), rng.uniform(-2, 2))
        if abs(a) < 1e-3 or abs(b) < 1e-3:
            continue
        la, lb = LogComplex.from_complex(a), LogComplex.from_complex(b)
        assert (la * lb).to_complex() == pytest.approx(a * b, rel=1e-12)
        assert (la / lb).to_complex() == pytest.approx(a / b, rel=1e-12)


def test_logcomplex_rejects_zero():
    with pytest.raises(ValueError):
        LogComplex.from_complex(0.0)


def test_monotone_on_real_axis():
    rng = np.random.default_rng(9)
    for m in (0, 1, 2):
        xs = np.sort(rng.uniform(-30, 30, 40))
        mods = np.array([log_g(m, complex(x)).log_mod for x in xs])
        assert np.all(np.diff(mods) > 0)


def test_zeros_g_examples():
    assert zeros_g(0, (-50, 50, -50, 50)) == []
    zs = zeros_g(1, (0, 1, -math.pi, math.pi))
    expect = [0.5 * math.log(2) - 1j * math.pi / 4,
              0.5 * math.log(2) + 1j * math.pi / 4]
    assert len(zs) == 2
    for got, want in zip(sorted(zs, key=lambda z: z.imag), expect):
        assert got == pytest.approx(want, abs=1e-12)


def test_zeros_g_lattice_shift_invariance():
    rect = (0, 1, -10 * math.pi, 10 * math.pi)
    zs = zeros_g(1, rect)
    shifted = set()
    for z in zs:
        up = z + 2j * math.pi
        if up.imag < 10 * math.pi:
            shifted.add((round(up.real, 9), round(up.imag, 9)))
    have = {(round(z.real, 9), round(z.imag, 9)) for z in zs}
    assert shifted <= have


def test_zeros_g_margin_violation():
    zero = zeros_g(1, (0, 1, 0, 1))[0]
    with pytest.raises(ValueError):
        zeros_g(1, (zero.real - 1e-12, 1, 0, 1))


def test_roots_polished_to_relative_tolerance():
    for m in (1, 2, 3, 5):
        roots = pm_roots(m)
        assert len(roots) == 2 * m
        vals = eval_P(m, roots)
        deriv = np.array([(eval_P(m, r + 1e-7) - eval_P(m, r - 1e-7)) / 2e-7
                          for r in roots])
        assert np.max(np.abs(vals / (deriv * roots))) < 1e-12
