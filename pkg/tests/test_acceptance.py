"""Acceptance gate: every criterion at its stated tolerance, one
pass/fail line each (run with -s to see them)."""

import math
import time

import numpy as np

from qcsurgery import beltrami, gluing, nevanlinna, oscillation, spiral, \
    surgery
from qcsurgery.cli import RunConfig, run_pipeline
from qcsurgery.special import log_g_array, zeros_g

PAIRS = [(0, 1), (1, 2), (0, 2)]


def _report(num, ok, detail):
    print(f"[criterion {num:2d}] {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, detail


def test_criterion_01_spiral_exponent():
    sp = spiral.make_spiral(0.2)
    dev = abs(sp.mu - (0.9384 + 0.2403j))
    ok = dev < 1e-3
    rng = np.random.default_rng(101)
    worst = 0.0
    for k in np.exp(rng.uniform(math.log(0.01), math.log(100), 50)):
        s = spiral.make_spiral(float(k))
        lhs = (s.mu * complex(math.log(s.k), -math.pi)).real
        rhs = (s.mu * 1j * math.pi).real
        worst = max(worst, abs(lhs - rhs) / max(1, abs(rhs)),
                    abs((1j * math.pi / s.mu).imag - math.pi))
    ok &= worst <= 1e-12
    _report(1, ok, f"mu(1/5) dev {dev:.1e} (<=1e-3), "
                   f"identity dev {worst:.1e} (<=1e-12)")


def test_criterion_02_order_recovery():
    t0 = time.time()
    devs = []
    radii = nevanlinna.geometric_radii(1e2, 1e6, 8)
    for (m, n) in PAIRS:
        gp = gluing.glue_constants(m, n)
        sp = spiral.make_spiral(gp.k)
        prof = nevanlinna.composed_logderiv_profile(gp, sp, radii)
        fit = nevanlinna.order_fit(prof)
        devs.append(abs(fit.order - sp.rho) / sp.rho)
    elapsed = time.time() - t0
    ok = max(devs) <= 0.03 and elapsed < 300
    _report(2, ok, f"order deviations {[f'{d:.4%}' for d in devs]} "
                   f"(<=3%), {elapsed:.0f}s (<300s)")


def test_criterion_03_phi_asymptotics():
    t0 = time.time()
    ok = True
    details = []
    for (m, n) in PAIRS:
        gp = gluing.glue_constants(m, n)
        rep = gluing.verify_asymptotics(gp)
        ok &= rep.right_slope <= -0.45
        ok &= rep.left_slope <= -0.9 * gp.delta
        details.append(f"({m},{n}): {rep.right_slope:.2f}/{rep.left_slope:.2f}")
    # the derivative limits at |x| = 25: attainable when the left-tail
    # rate min(1,k) is not small, i.e. on a k > 1 pair
    gp10 = gluing.glue_constants(1, 0)
    d_right = abs(gluing.phi_prime(gp10, 25.0) - 1.0)
    d_left = abs(gluing.phi_prime(gp10, -25.0) - gp10.k)
    ok &= d_right <= 1e-4 and d_left <= 1e-4
    elapsed = time.time() - t0
    ok &= elapsed < 30
    _report(3, ok, f"slopes {details}, phi' limit devs "
                   f"{d_right:.1e}/{d_left:.1e} (<=1e-4), {elapsed:.0f}s")


def test_criterion_04_seam_continuity():
    worst_all = 0.0
    for (m, n) in PAIRS:
        gp = gluing.glue_constants(m, n)
        sp = spiral.make_spiral(gp.k)
        xs = np.concatenate([np.geomspace(1e-2, 25.0, 500),
                             -np.geomspace(1e-2, 25.0, 500)])
        worst = 0.0
        for x in xs:
            w = spiral.power_p(sp, complex(x), side=None if x > 0 else "+")
            up = surgery.eval_U(gp, sp, w, side="plus")
            dn = surgery.eval_U(gp, sp, w, side="minus")
            scale = max(1.0, abs(up.log_mod))
            worst = max(worst, math.hypot(up.log_mod - dn.log_mod,
                                          up.arg - dn.arg) / scale)
        worst_all = max(worst_all, worst)
    ok = worst_all <= 10 * 1e-12
    _report(4, ok, f"max seam jump {worst_all:.2e} (<= 1e-11), "
                   f"1000 samples x {len(PAIRS)} pairs")


def _g0h_holofun(sp):
    def h_of(z):
        return spiral.inverse_h(sp, z)

    def F(z):
        return np.exp(np.exp(h_of(z)))

    def d1(z):
        hh = h_of(z)
        return np.exp(np.exp(hh)) * np.exp(hh) * hh / (sp.mu * z)

    def d2(z):
        hh = h_of(z)
        hp = hh / (sp.mu * z)
        hpp = (1 / sp.mu) * (1 / sp.mu - 1) * hh / z ** 2
        eh = np.exp(hh)
        a1 = eh * hp
        a2 = eh * hp ** 2 + eh * hpp
        return np.exp(eh) * (a1 ** 2 + a2)

    def d3(z):
        hh = h_of(z)
        hp = hh / (sp.mu * z)
        hpp = (1 / sp.mu) * (1 / sp.mu - 1) * hh / z ** 2
        hppp = (1 / sp.mu) * (1 / sp.mu - 1) * (1 / sp.mu - 2) * hh / z ** 3
        eh = np.exp(hh)
        a1 = eh * hp
        a2 = eh * hp ** 2 + eh * hpp
        a3 = eh * hp ** 3 + 3 * eh * hp * hpp + eh * hppp
        return np.exp(eh) * (a1 ** 3 + 3 * a1 * a2 + a3)

    return oscillation.HoloFun(F, d1, d2, d3)


def test_criterion_05_operator_identities():
    rng = np.random.default_rng(103)
    sec2 = lambda z: 1 / np.cos(z) ** 2
    sp = spiral.make_spiral(1 / 3)

    def g0h_sampler():
        while True:
            z = complex(rng.uniform(-3, 3), rng.uniform(-3, 3))
            if z != 0 and spiral.classify(sp, z) is spiral.Region.G_PLUS:
                return z

    cases = [
        ("exp", oscillation.HoloFun(np.exp, np.exp, np.exp, np.exp),
         lambda: complex(rng.uniform(-3, 3), rng.uniform(-3, 3))),
        ("tan", oscillation.HoloFun(
            np.tan, sec2, lambda z: 2 * np.tan(z) * sec2(z),
            lambda z: (4 * np.tan(z) ** 2 + 2 * sec2(z)) * sec2(z)),
         lambda: complex(rng.uniform(-1.2, 1.2), rng.uniform(-1, 1))),
        ("cubic", oscillation.HoloFun(
            lambda z: z + z ** 3, lambda z: 1 + 3 * z ** 2,
            lambda z: 6 * z, lambda z: 6.0 + 0 * z),
         lambda: complex(rng.uniform(-1, 1), rng.uniform(-1, 1))),
        ("g0h", _g0h_holofun(sp), g0h_sampler),
    ]
    worst = 0.0
    for name, F, sample in cases:
        e_fun = oscillation.product_E_of(F)
        count = 0
        while count < 100:
            z = sample()
            try:
                s = oscillation.schwarzian(F, z)
                b = oscillation.bank_laine_B(e_fun, z)
            except (oscillation.CriticalPointError, ZeroDivisionError):
                continue
            if not (np.isfinite(s) and np.isfinite(b)):
                continue
            worst = max(worst, abs(2 * s - b) / max(1.0, abs(b)))
            count += 1
    ok = worst <= 1e-6

    e_one = oscillation.HoloFun(lambda z: 1.0 + 0 * z, lambda z: 0 * z,
                                lambda z: 0 * z)
    e_sin = oscillation.HoloFun(np.sin, np.cos, lambda z: -np.sin(z))
    d_one = abs(oscillation.bank_laine_B(e_one, 0.37) + 1)
    d_sin = abs(oscillation.bank_laine_B(e_sin, 0.4 + 0.2j) - 1)
    ok &= d_one <= 1e-10 and d_sin <= 1e-10

    F_tan = cases[1][1]
    pair = oscillation.recover_solutions(F_tan, 0.0, [0.0, 1.2],
                                         max_step=0.002)
    h = abs(pair.z[1] - pair.z[0])
    resid = 0.0
    for w in (pair.w1, pair.w2):
        wpp = (w[2:] - 2 * w[1:-1] + w[:-2]) / h ** 2
        resid = max(resid, float(np.max(np.abs(wpp + w[1:-1])) /
                                 np.max(np.abs(w))))
    drift = float(np.max(np.abs(pair.wronskian - 1.0)))
    ok &= resid <= 1e-6 and drift <= 1e-9
    _report(5, ok, f"factorization {worst:.1e} (<=1e-6), B[1]/B[sin] "
                   f"{d_one:.1e}/{d_sin:.1e} (<=1e-10), ODE residual "
                   f"{resid:.1e} (<=1e-6), Wronskian {drift:.1e} (<=1e-9)")


def test_criterion_06_ode_and_counting():
    trace = oscillation.integrate_ode(lambda z: 0.25, [0.0, 45.0], 0.0, 0.5,
                                      tol=1e-10)
    zeros = oscillation.locate_trace_zeros(lambda z: 0.25, trace)
    dev = max(abs(z - 2 * math.pi * round(z.real / (2 * math.pi)))
              for z in zeros)
    ok = len(zeros) >= 6 and dev <= 1e-8

    def g1(z):
        lm, ar = log_g_array(1, np.asarray(z, dtype=complex))
        return np.exp(lm + 1j * ar)

    rng = np.random.default_rng(107)
    agree = True
    for _ in range(5):
        x0 = rng.uniform(-1.5, 0.2)
        x1 = x0 + rng.uniform(0.8, 2.2)
        y0 = rng.uniform(-30, 0)
        y1 = y0 + rng.uniform(5, 25)
        rect = (x0, x1, y0, y1)
        try:
            lattice = zeros_g(1, rect, margin=1e-6)
        except ValueError:
            continue
        total, _ = oscillation.count_zeros(g1, rect)
        agree &= total == len(lattice)
    ok &= agree
    _report(6, ok, f"ODE zero dev {dev:.1e} (<=1e-8), argument-principle "
                   f"counts match lattice: {agree}")


def test_criterion_07_nevanlinna_calibration():
    worst = 0.0
    for r in (10.0, 1e3, 1e5):
        val, _ = nevanlinna.proximity_m(lambda pts: pts.real, r)
        worst = max(worst, abs(val - r / math.pi) * math.pi / r)
    ok = worst <= 1e-8
    devs = []
    for m, ylim in ((1, 2000.0), (2, 2000.0)):
        zs = zeros_g(m, (-4, 4, -ylim, ylim))
        rr = nevanlinna.geometric_radii(10, 1500, 8)
        vals = np.array([nevanlinna.counting_N(zs, r) for r in rr])
        fit = nevanlinna.order_fit(
            nevanlinna.RadialProfile(rr, vals, np.zeros_like(rr)))
        devs.append(abs(fit.order - 1.0))
    ok &= max(devs) <= 0.02
    _report(7, ok, f"m(r,e^z) rel dev {worst:.1e} (<=1e-8), zero-counting "
                   f"order devs {[f'{d:.3f}' for d in devs]} (<=0.02)")


def test_criterion_08_log_area_tail():
    gp = gluing.glue_constants(0, 1)
    sp = spiral.make_spiral(gp.k)
    vals = [surgery.log_area(gp, sp, r)[0] for r in (10.0, 100.0, 1000.0)]
    w = abs(sp.mu) ** 2
    inc1 = vals[1] - vals[0]
    inc2 = vals[2] - vals[1]
    model1 = w * (2 / 10 - 2 / 100)
    model2 = w * (2 / 100 - 2 / 1000)
    d1 = abs(inc1 - model1) / model1
    d2 = abs(inc2 - model2) / model2
    ok = vals[0] < vals[1] < vals[2] and d1 <= 0.2 and d2 <= 0.2
    _report(8, ok, f"increments {inc1:.5f}/{inc2:.5f} vs O(1/R) model "
                   f"{model1:.5f}/{model2:.5f}, devs {d1:.1%}/{d2:.1%} (<=20%)")


def test_criterion_09_beltrami_test_fields():
    mu0 = beltrami.ComplexGridField.square(10.0, 256)
    psi0, _ = beltrami.solve_beltrami(mu0)
    ok = np.array_equal(psi0.values, mu0.points())

    K, r0, r1 = 1.5, 4.0, 6.0
    c = (K - 1) / (K + 1)
    errs_disk = {}
    errs_rad = {}
    for n in (512, 1024):
        mu = beltrami.ComplexGridField.square(10.0, n)
        pts = mu.points()
        mu.values = np.where(np.abs(pts) < r0, c, 0.0).astype(complex)
        psi, _ = beltrami.solve_beltrami(mu, tol=1e-9)
        interior = np.abs(pts) < 0.5 * r0
        model = K * pts.real + 1j * pts.imag
        mat = np.vstack([model[interior].ravel(),
                         np.ones(interior.sum())]).T
        coef, *_ = np.linalg.lstsq(mat, psi.values[interior].ravel(),
                                   rcond=None)
        errs_disk[n] = float(np.max(np.abs(psi.values[interior].ravel() -
                                           mat @ coef)) /
                             np.max(np.abs(model[interior])))

        mur = beltrami.ComplexGridField.square(10.0, n)
        a = np.abs(pts)
        ring = (a > 2.0) & (a < r1)
        mur.values = np.where(ring, c * pts / np.conj(
            np.where(pts == 0, 1, pts)), 0.0)
        psir, _ = beltrami.solve_beltrami(mur, tol=1e-9)
        b = r1 ** (1 - K)
        inner = b * 2.0 ** (K - 1)
        exact = np.where(a <= 2.0, inner * pts,
                         np.where(a < r1, b * pts *
                                  np.where(a == 0, 1, a) ** (K - 1), pts))
        band = (a > 3.0) & (a < 5.0)
        errs_rad[n] = float(np.max(np.abs(psir.values - exact)[band]) /
                            np.max(np.abs(exact[band])))

    ok &= errs_disk[512] <= 0.02 and errs_rad[512] <= 0.02
    ratio_d = errs_disk[512] / errs_disk[1024]
    ratio_r = errs_rad[512] / errs_rad[1024]
    ok &= ratio_d >= 2.0 and ratio_r >= 2.0
    _report(9, ok, f"512^2 errors disk {errs_disk[512]:.2e} / radial "
                   f"{errs_rad[512]:.2e} (<=2e-2), refinement ratios "
                   f"{ratio_d:.2f}/{ratio_r:.2f} (>=2)")


def test_criterion_10_end_to_end_pipeline(tmp_path):
    cfg = RunConfig(command="pipeline", m=0, n=1, window=40.0, grid=512,
                    outdir=str(tmp_path))
    rep = run_pipeline(cfg)
    ok = rep["cr_residual_masked"] <= 1e-2
    ok &= rep["zeros_all_simple"] and rep["zeros_checked"] > 0
    ok &= rep["max_e_prime_dev"] <= 0.05
    _report(10, ok, f"CR residual {rep['cr_residual_masked']:.2e} (<=1e-2) "
                    f"over {rep['masked_nodes']} nodes, "
                    f"{rep['zeros_checked']} zeros all simple "
                    f"{rep['zeros_all_simple']}, max |E'-+1| "
                    f"{rep['max_e_prime_dev']:.1e} (<=0.05)")
