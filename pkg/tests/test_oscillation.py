"""Operator layer: Schwarzian, product-function operator, recovery,
ODE integration, argument-principle counting."""

import math

import numpy as np
import pytest

from qcsurgery.oscillation import (CriticalPointError,
                                   HoloFun, ZeroRecord, bank_laine_B,
                                   check_bank_laine, count_zeros,
                                   integrate_ode, locate_trace_zeros,
                                   product_E_of, recover_solutions,
                                   schwarzian)
from qcsurgery.special import zeros_g


SEC2 = lambda z: 1 / np.cos(z) ** 2
F_EXP = HoloFun(np.exp, np.exp, np.exp, np.exp)
F_TAN = HoloFun(np.tan, SEC2, lambda z: 2 * np.tan(z) * SEC2(z),
                lambda z: (4 * np.tan(z) ** 2 + 2 * SEC2(z)) * SEC2(z))
F_CUBIC = HoloFun(lambda z: z + z ** 3, lambda z: 1 + 3 * z ** 2,
                  lambda z: 6 * z, lambda z: 6.0 + 0 * z)


def test_schwarzian_examples():
    assert schwarzian(F_EXP, 0.7 + 0.2j) == pytest.approx(-0.5, abs=1e-12)
    assert schwarzian(F_TAN, 0.3 + 0.1j) == pytest.approx(2.0, abs=1e-12)
    mob = HoloFun(lambda z: (2 * z + 1) / (z + 3))
    assert abs(schwarzian(mob, 0.4 - 0.2j)) < 1e-8


def test_schwarzian_critical_point_error():
    with pytest.raises(CriticalPointError):
        schwarzian(F_CUBIC, 1j / math.sqrt(3))


def test_bank_laine_operator_examples():
    e_one = HoloFun(lambda z: 1.0 + 0 * z, lambda z: 0 * z, lambda z: 0 * z)
    assert bank_laine_B(e_one, 0.3) == pytest.approx(-1.0, abs=1e-10)
    e_sin = HoloFun(np.sin, np.cos, lambda z: -np.sin(z))
    assert bank_laine_B(e_sin, 0.4 + 0.3j) == pytest.approx(1.0, abs=1e-10)


def test_factorization_through_exponential():
    # F = e^z: E = F/F' = 1 and B[E] = -1 = 2 S[F]
    e = product_E_of(F_EXP)
    assert 2 * schwarzian(F_EXP, 1.1) == pytest.approx(
        bank_laine_B(e, 1.1), abs=1e-12)


@pytest.mark.parametrize("F,box", [(F_EXP, 3.0), (F_TAN, 1.0),
                                   (F_CUBIC, 1.0)])
def test_factorization_identity_random_points(F, box):
    rng = np.random.default_rng(67)
    e = product_E_of(F)
    checked = 0
    while checked < 100:
        z = complex(rng.uniform(-box, box), rng.uniform(-box, box))
        try:
            s = schwarzian(F, z)
            b = bank_laine_B(e, z)
        except (CriticalPointError, ZeroDivisionError):
            continue
        assert abs(2 * s - b) <= 1e-6 * max(1.0, abs(b))
        checked += 1


def test_holofun_fd_matches_analytic():
    fd_only = HoloFun(np.exp)
    rng = np.random.default_rng(71)
    for _ in range(20):
        z = complex(rng.uniform(-1, 1), rng.uniform(-1, 1))
        assert fd_only.d1(z) == pytest.approx(np.exp(z), rel=1e-9)
        assert fd_only.d2(z) == pytest.approx(np.exp(z), rel=1e-7)
        assert fd_only.d3(z) == pytest.approx(np.exp(z), rel=1e-5)


def test_recover_exponential_pair():
    pair = recover_solutions(F_EXP, 0.0, [0.0, 2.0 + 1.0j])
    assert np.max(np.abs(pair.w1 - np.exp(-pair.z / 2))) < 1e-12
    assert np.max(np.abs(pair.w2 - np.exp(pair.z / 2))) < 1e-12
    assert np.max(np.abs(pair.wronskian - 1)) < 1e-12


def test_recover_tangent_pair():
    pair = recover_solutions(F_TAN, 0.0, [0.0, 1.2])
    assert np.max(np.abs(pair.w1 - np.cos(pair.z))) < 1e-10
    assert np.max(np.abs(pair.w2 - np.sin(pair.z))) < 1e-10
    # E = F/F' = w1 w2 along the path
    e_direct = np.tan(pair.z) * np.cos(pair.z) ** 2
    assert np.max(np.abs(pair.e_values() - e_direct)) < 1e-10


def test_recovered_pair_solves_equation():
    # both solutions satisfy w'' + A w = 0 with A = S[F]/2
    pair = recover_solutions(F_TAN, 0.0, [0.0, 1.2], max_step=0.002)
    z = pair.z
    h = abs(z[1] - z[0])
    for w in (pair.w1, pair.w2):
        wpp = (w[2:] - 2 * w[1:-1] + w[:-2]) / h ** 2
        resid = wpp + 1.0 * w[1:-1]  # A = 1 for tan
        assert np.max(np.abs(resid)) / np.max(np.abs(w)) < 1e-6


def test_zeros_of_F_are_zeros_of_w2_poles_of_w1():
    pair = recover_solutions(F_TAN, 0.1, [0.1, 3.3], max_step=0.002)
    i_pi = np.argmin(np.abs(pair.z - math.pi))
    assert abs(pair.w2[i_pi]) < 1e-2  # zero of F = tan at pi
    i_half = np.argmin(np.abs(pair.z - math.pi / 2))
    assert abs(pair.w1[i_half]) < 1e-2  # pole of tan kills 1/sqrt(F')


def test_integrate_ode_sine_zeros():
    trace = integrate_ode(lambda z: 0.25, [0.0, 45.0], 0.0, 0.5, tol=1e-10)
    zeros = locate_trace_zeros(lambda z: 0.25, trace)
    assert len(zeros) >= 6
    for z in zeros:
        nearest = 2 * math.pi * round(z.real / (2 * math.pi))
        assert abs(z - nearest) < 1e-8


def test_integrate_ode_zero_coefficient_affine():
    trace = integrate_ode(lambda z: 0.0, [0.0, 3.0 + 4.0j], 1.0, 2.0,
                          tol=1e-11)
    expect = 1.0 + 2.0 * trace.z
    assert np.max(np.abs(trace.w - expect)) < 1e-9


def test_integrate_ode_wronskian_between_basis_traces():
    a_fun = lambda z: -0.25
    kw = dict(tol=1e-10, max_step=0.01)
    t1 = integrate_ode(a_fun, [0.0, 20.0], 1.0, 0.5, **kw)   # e^{z/2}
    t2 = integrate_ode(a_fun, [0.0, 20.0], 1.0, -0.5, **kw)  # e^{-z/2}
    assert np.array_equal(t1.z, t2.z)
    wr = t1.w * t2.wp - t1.wp * t2.w
    assert np.max(np.abs(wr - wr[0])) < 1e-9 * np.max(np.abs(wr))


def test_count_zeros_sine():
    total, recs = count_zeros(HoloFun(np.sin, np.cos), (-10, 10, -1, 1))
    assert total == 7
    locs = sorted(r.location.real for r in recs)
    for got, k in zip(locs, range(-3, 4)):
        assert got == pytest.approx(k * math.pi, abs=1e-9)
    assert all(r.multiplicity == 1 for r in recs)


def test_count_zeros_entire_nonvanishing():
    total, recs = count_zeros(HoloFun(np.exp), (-3, 3, -3, 3))
    assert total == 0 and recs == []


def test_count_zeros_matches_lattice_for_block_function():
    # cross-oracle: winding count of g_1 equals the analytic lattice
    from qcsurgery.special import log_g_array

    def g1(z):
        lm, ar = log_g_array(1, np.asarray(z, dtype=complex))
        return np.exp(lm + 1j * ar)

    rect = (0.05, 1.0, -10 * math.pi, 10 * math.pi)
    lattice = zeros_g(1, rect)
    total, recs = count_zeros(g1, rect)
    assert total == len(lattice)
    got = sorted(r.location.imag for r in recs)
    want = sorted(z.imag for z in lattice)
    assert np.allclose(got, want, atol=1e-8)


def test_count_zeros_nudges_boundary_zero():
    # a zero exactly on the initial boundary is nudged away
    total, recs = count_zeros(HoloFun(np.sin, np.cos),
                              (0.0, 2 * math.pi, -1.0, 1.0))
    assert total in (1, 2, 3)  # nudge decides who is inside; count sane
    for r in recs:
        assert abs(np.sin(r.location)) < 1e-8


def test_check_bank_laine_cases():
    e_sin = HoloFun(np.sin, np.cos, lambda z: -np.sin(z))
    recs = [ZeroRecord(l * math.pi, 1, math.cos(l * math.pi))
            for l in range(-3, 4)]
    assert check_bank_laine(e_sin, recs).passed
    e_id = HoloFun(lambda z: z, lambda z: 1.0 + 0 * z, lambda z: 0 * z)
    assert check_bank_laine(e_id, [ZeroRecord(0.0, 1, 1.0)]).passed
    e_sq = HoloFun(lambda z: z * z, lambda z: 2 * z, lambda z: 2.0 + 0 * z)
    rep = check_bank_laine(e_sq, [ZeroRecord(0.0, 2, 0.0)])
    assert not rep.passed
    assert rep.violations


def test_check_bank_laine_special_mode():
    # E = sin: E' = cos vanishes at pi/2 + l pi where E = +-1; the +1
    # points pass, the -1 points are reported
    e_sin = HoloFun(np.sin, np.cos, lambda z: -np.sin(z))
    rep = check_bank_laine(e_sin, [], special_mode=True, tol=1e-6,
                           window=(0.2, 2 * math.pi - 0.2, -1, 1),
                           special_tol=0.05)
    assert rep.special_checked == 2
    assert len(rep.special_violations) == 1  # E(3 pi/2) = -1
