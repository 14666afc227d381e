"""Operator layer: Schwarzian, the product-function operator, solution
recovery, complex-path ODE integration, and argument-principle zero
counting.

The two differential operators are linked by the factorization
2 S[F] = B[F/F'], where

    S[F] = F'''/F' - (3/2)(F''/F')^2
    B[E] = -2 E''/E + (E'/E)^2 - 1/E^2

and a coefficient A with w'' + A w = 0 satisfies 2A = S[F] = B[E]/2
for F = w2/w1, E = w1 w2 with unit Wronskian.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

DERIV_TOL = 1e-12


class CriticalPointError(ValueError):
    """F' vanishes where the Schwarzian (or a square root of it) is needed."""


class BranchTrackingError(RuntimeError):
    """Square-root continuation lost the branch along a path."""


class BoundaryZeroError(RuntimeError):
    """A zero persists on the counting rectangle boundary after nudging."""


@dataclass
class HoloFun:
    """A holomorphic function with optional analytic derivatives.

    Derivatives not supplied analytically are produced by Richardson-
    extrapolated central differences with step h = 2.5e-4 |z| + 1e-6
    (third derivatives cost about half the mantissa; tolerance budgets
    downstream account for that).
    """

    f: Callable
    df: Callable | None = None
    d2f: Callable | None = None
    d3f: Callable | None = None
    analytic: bool = field(init=False)

    def __post_init__(self):
        self.analytic = self.df is not None

    def __call__(self, z):
        return self.f(z)

    @staticmethod
    def _step(z: complex, order: int = 1) -> float:
        # roundoff in an order-p stencil grows like eps/h^p, so the base
        # step is widened for higher derivatives to keep ~1e-8 accuracy
        h = 2.5e-4 * abs(z) + 1e-6
        return h * (1, 1, 24, 96)[order]

    def d1(self, z: complex) -> complex:
        if self.df is not None:
            return self.df(z)
        h = self._step(z, 1)
        d = lambda hh: (self.f(z + hh) - self.f(z - hh)) / (2 * hh)
        return (4 * d(h / 2) - d(h)) / 3

    def d2(self, z: complex) -> complex:
        if self.d2f is not None:
            return self.d2f(z)
        if self.df is not None:
            h = self._step(z, 1)
            d = lambda hh: (self.df(z + hh) - self.df(z - hh)) / (2 * hh)
            return (4 * d(h / 2) - d(h)) / 3
        h = self._step(z, 2)
        d = lambda hh: (self.f(z + hh) - 2 * self.f(z) + self.f(z - hh)) / hh ** 2
        return (4 * d(h / 2) - d(h)) / 3

    def d3(self, z: complex) -> complex:
        if self.d3f is not None:
            return self.d3f(z)
        if self.df is not None:
            h = self._step(z, 2)
            d = lambda hh: (self.df(z + hh) - 2 * self.df(z) +
                            self.df(z - hh)) / hh ** 2
            return (4 * d(h / 2) - d(h)) / 3
        h = self._step(z, 3)
        d = lambda hh: (self.f(z + 2 * hh) - 2 * self.f(z + hh) +
                        2 * self.f(z - hh) - self.f(z - 2 * hh)) / (2 * hh ** 3)
        # two Richardson levels: the O(h^6) truncation lets the step stay
        # large enough to keep the eps/h^3 roundoff below ~1e-8
        r1a = (4 * d(h / 2) - d(h)) / 3
        r1b = (4 * d(h / 4) - d(h / 2)) / 3
        return (16 * r1b - r1a) / 15


@dataclass(frozen=True)
class ZeroRecord:
    location: complex
    multiplicity: int
    derivative_at_zero: complex


def schwarzian(F: HoloFun, z: complex) -> complex:
    """S[F](z); raises CriticalPointError when |F'(z)| is below tolerance."""
    fp = F.d1(z)
    if abs(fp) < DERIV_TOL:
        raise CriticalPointError(f"F'({z}) ~ 0, Schwarzian undefined")
    fpp = F.d2(z)
    fppp = F.d3(z)
    r = fpp / fp
    return fppp / fp - 1.5 * r * r


def bank_laine_B(E: HoloFun, z: complex) -> complex:
    """B[E](z) = -2E''/E + (E'/E)^2 - 1/E^2; equals 4A for E = w1 w2."""
    ev = E(z)
    if abs(ev) < DERIV_TOL:
        raise ZeroDivisionError(f"E({z}) ~ 0, operator undefined")
    return -2 * E.d2(z) / ev + (E.d1(z) / ev) ** 2 - 1 / ev ** 2


def product_E_of(F: HoloFun) -> HoloFun:
    """E = F/F' as a HoloFun.

    When F carries analytic derivatives, E', E'' are chained in closed
    form (E' = 1 - F F''/F'^2 etc.), which the operator-identity checks
    need; otherwise E falls back to finite differencing.
    """
    if F.df is None:
        return HoloFun(lambda z: F(z) / F.d1(z))

    def e(z):
        return F(z) / F.d1(z)

    def ep(z):
        fp = F.d1(z)
        return 1.0 - F(z) * F.d2(z) / fp ** 2

    def epp(z):
        fv, fp, fpp, fppp = F(z), F.d1(z), F.d2(z), F.d3(z)
        return -(fp * fpp + fv * fppp) / fp ** 2 + 2 * fv * fpp ** 2 / fp ** 3

    return HoloFun(e, ep, epp)


@dataclass
class BankLaineReport:
    passed: bool
    checked: int
    violations: list
    special_checked: int = 0
    special_violations: list = field(default_factory=list)
    special_values: list = field(default_factory=list)


def check_bank_laine(E: HoloFun, zeros: Sequence[ZeroRecord],
                     special_mode: bool = False,
                     tol: float = 1e-6,
                     window: tuple[float, float, float, float] | None = None,
                     special_tol: float | None = None) -> BankLaineReport:
    """Verify E'(z0) in {-1, +1} at each supplied zero of E.

    With ``special_mode`` the zeros of E' inside ``window`` are located
    as well and E is required to equal 1 there (within ``special_tol``,
    default = tol).  Violations are reported, not raised.
    """
    violations = []
    for rec in zeros:
        if rec.multiplicity != 1:
            violations.append((rec.location, "multiple zero", rec.multiplicity))
            continue
        d = E.d1(rec.location)
        if min(abs(d - 1), abs(d + 1)) > tol:
            violations.append((rec.location, "E' not unimodular-real", d))
    report = BankLaineReport(passed=not violations, checked=len(zeros),
                             violations=violations)
    if special_mode:
        if window is None:
            raise ValueError("special_mode needs a window rectangle")
        stol = tol if special_tol is None else special_tol
        eprime = HoloFun(lambda z: E.d1(z))
        _, crits = count_zeros(eprime, window)
        report.special_checked = len(crits)
        for rec in crits:
            val = E(rec.location)
            report.special_values.append((rec.location, val))
            if abs(val - 1) > stol:
                report.special_violations.append((rec.location, val))
        report.passed = report.passed and not report.special_violations
    return report


@dataclass
class RecoveredPair:
    """Normalized solution pair continued along a path.

    w1^2 = 1/F', w2^2 = F^2/F'; the common square-root branch is fixed
    at the basepoint and continued by nearest-value tracking, which
    keeps the Wronskian identically one.
    """

    z: np.ndarray
    w1: np.ndarray
    w2: np.ndarray
    wronskian: np.ndarray

    def e_values(self) -> np.ndarray:
        return self.w1 * self.w2


def _refine_path(path: Sequence[complex], max_step: float) -> np.ndarray:
    pts = [complex(path[0])]
    for a, b in zip(path[:-1], path[1:]):
        a, b = complex(a), complex(b)
        seg = b - a
        steps = max(1, int(math.ceil(abs(seg) / max_step)))
        for i in range(1, steps + 1):
            pts.append(a + seg * i / steps)
    return np.array(pts)


def recover_solutions(F: HoloFun, basepoint: complex,
                      path: Sequence[complex], max_step: float = 0.05,
                      max_retries: int = 6) -> RecoveredPair:
    """Analytic continuation of (w1, w2) = (1/sqrt F', F/sqrt F') from
    ``basepoint`` along ``path`` (a polyline starting there).

    Retries with halved steps when consecutive sqrt candidates come too
    close in angle to disambiguate.
    """
    if abs(complex(path[0]) - complex(basepoint)) > 1e-12:
        raise ValueError("path must start at the basepoint")
    step = max_step
    for _ in range(max_retries):
        zs = _refine_path(path, step)
        fps = np.array([F.d1(z) for z in zs])
        if np.any(np.abs(fps) < DERIV_TOL):
            raise CriticalPointError("F' vanishes on the path")
        s = np.empty_like(fps)
        s[0] = cmath.sqrt(fps[0])
        ok = True
        for i in range(1, len(zs)):
            cand = cmath.sqrt(fps[i])
            if abs(cand - s[i - 1]) > abs(-cand - s[i - 1]):
                cand = -cand
            # ambiguous when the two candidates are nearly equidistant
            if abs(abs(cand - s[i - 1]) - abs(-cand - s[i - 1])) < \
                    0.1 * abs(cand):
                ok = False
                break
            s[i] = cand
        if ok:
            fv = np.array([F(z) for z in zs])
            w1 = 1.0 / s
            w2 = fv / s
            fpp = np.array([F.d2(z) for z in zs])
            w1p = -fpp / (2 * s * fps)
            w2p = s - fv * fpp / (2 * s * fps)
            wr = w1 * w2p - w1p * w2
            return RecoveredPair(zs, w1, w2, wr)
        step /= 2
    raise BranchTrackingError("square-root branch ambiguous; path too coarse")


@dataclass
class ODETrace:
    z: np.ndarray
    w: np.ndarray
    wp: np.ndarray
    n_steps: int
    n_rejected: int


# Dormand-Prince 5(4) tableau
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784,
                   11 / 84, 0.0])
_DP_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640,
                   -92097 / 339200, 187 / 2100, 1 / 40])


class StepSizeUnderflow(RuntimeError):
    pass


def integrate_ode(A: HoloFun | Callable, path: Sequence[complex],
                  w0: complex, w0p: complex, tol: float = 1e-10,
                  max_step: float | None = None) -> ODETrace:
    """Integrate w'' + A(z) w = 0 along a complex polyline.

    Embedded Dormand-Prince 5(4) on the first-order system for (w, w'),
    parameterized by arclength per segment; mixed absolute+relative
    error control at ``tol``.  ``max_step`` caps the step in |dz| (it
    also makes step sequences reproducible across initial conditions,
    which the Wronskian tests rely on).
    """
    a_fun = A if callable(A) and not isinstance(A, HoloFun) else A
    zs = [complex(path[0])]
    ws = [complex(w0)]
    wps = [complex(w0p)]
    n_steps = 0
    n_rejected = 0

    def rhs(z, y):
        return np.array([y[1], -a_fun(z) * y[0]], dtype=complex)

    for a, b in zip(path[:-1], path[1:]):
        a, b = complex(a), complex(b)
        seg = b - a
        seg_len = abs(seg)
        if seg_len == 0:
            continue
        direction = seg / seg_len
        t = 0.0
        y = np.array([ws[-1], wps[-1]], dtype=complex)
        h = seg_len / 16 if max_step is None else min(max_step, seg_len)
        while t < seg_len:
            h = min(h, seg_len - t)
            if h < 1e-14 * seg_len:
                raise StepSizeUnderflow(f"step underflow at t={t}")
            kst = np.empty((7, 2), dtype=complex)
            kst[0] = rhs(a + direction * t, y) * direction
            for i in range(1, 7):
                acc = np.zeros(2, dtype=complex)
                for j, coef in enumerate(_DP_A[i]):
                    acc = acc + coef * kst[j]
                kst[i] = rhs(a + direction * (t + _DP_C[i] * h),
                             y + h * acc) * direction
            y5 = y + h * np.tensordot(_DP_B5, kst, axes=1)
            y4 = y + h * np.tensordot(_DP_B4, kst, axes=1)
            scale = tol + tol * np.abs(y5)
            err = float(np.max(np.abs(y5 - y4) / scale))
            if err <= 1.0:
                t += h
                y = y5
                zs.append(a + direction * t)
                ws.append(complex(y[0]))
                wps.append(complex(y[1]))
                n_steps += 1
            else:
                n_rejected += 1
            factor = 0.9 * (1.0 / err) ** 0.2 if err > 0 else 5.0
            h *= min(5.0, max(0.2, factor))
            if max_step is not None:
                h = min(h, max_step)
    return ODETrace(np.array(zs), np.array(ws), np.array(wps),
                    n_steps, n_rejected)


def locate_trace_zeros(A: HoloFun | Callable, trace: ODETrace,
                       tol: float = 1e-12) -> list[complex]:
    """Zeros of w along an integration trace, refined to ~1e-12.

    Candidates are |w| dips below the trace median; each is polished by
    Newton steps whose (w, w') values come from short re-integrations
    between trace samples, so accuracy is not limited by the sampling.
    """
    a_fun = A
    absw = np.abs(trace.w)
    med = np.median(absw) + 1e-300
    zeros = []
    for i in range(1, len(absw) - 1):
        if absw[i] <= absw[i - 1] and absw[i] <= absw[i + 1] and \
                absw[i] < 0.25 * med:
            z = trace.z[i]
            w, wp = trace.w[i], trace.wp[i]
            for _ in range(60):
                if wp == 0:
                    break
                step = -w / wp
                # local quadratic correction: w'' = -A w
                wpp = -a_fun(z) * w
                denom = wp + 0.5 * wpp * step
                step = -w / denom if denom != 0 else step
                z = z + step
                tr = integrate_ode(a_fun, [trace.z[i], z], trace.w[i],
                                   trace.wp[i], tol=1e-12)
                w, wp = tr.w[-1], tr.wp[-1]
                if abs(step) < tol * max(1.0, abs(z)):
                    break
            if abs(w) < 1e-8 * med:
                if not any(abs(z - p) < 1e-6 * max(1, abs(z)) for p in zeros):
                    zeros.append(complex(z))
    return zeros


def _boundary_points(rect: tuple[float, float, float, float]):
    x0, x1, y0, y1 = rect
    corners = [complex(x0, y0), complex(x1, y0), complex(x1, y1),
               complex(x0, y1), complex(x0, y0)]
    return corners


def _winding_number(f, rect, samples_per_side: int = 32,
                    max_doublings: int = 14) -> int:
    """Winding of f over the rectangle boundary by phase continuation.

    The boundary sampling is doubled until no consecutive pair of
    values subtends more than pi/2 of phase, which pins the continuous
    argument to the correct branch.
    """
    corners = _boundary_points(rect)
    n = samples_per_side
    for _ in range(max_doublings):
        pts = []
        for a, b in zip(corners[:-1], corners[1:]):
            ts = np.arange(n) / n
            pts.append(a + (b - a) * ts)
        pts = np.concatenate(pts)
        vals = np.asarray(f(pts), dtype=complex)
        if np.any(vals == 0) or np.any(~np.isfinite(vals)):
            raise BoundaryZeroError("zero or nonfinite value on boundary")
        rot = vals[np.r_[1:len(vals), 0]] / vals
        dphi = np.angle(rot)
        if np.max(np.abs(dphi)) < 0.5 * math.pi:
            total = float(np.sum(dphi))
            wind = total / (2 * math.pi)
            if abs(wind - round(wind)) > 0.25:
                raise BoundaryZeroError(
                    f"winding {wind} too far from an integer")
            return int(round(wind))
        n *= 2
    raise BoundaryZeroError("phase continuation failed to resolve")


def count_zeros(f: HoloFun | Callable, rect: tuple[float, float, float, float],
                refine_tol: float = 1e-10, min_cell: float = 1e-7,
                nudge_attempts: int = 5, leaf_size: float = 0.5
                ) -> tuple[int, list[ZeroRecord]]:
    """Argument-principle zero count and refinement inside a rectangle.

    Quadrisects until every cell holds at most one zero and is no
    larger than ``leaf_size`` (keeping the cell center inside the
    Newton basin), then polishes by Newton (derivative finite-
    differenced when not supplied).  Rectangles whose boundary passes
    through a zero are nudged outward up to ``nudge_attempts`` times
    before giving up.
    """
    fun = f if isinstance(f, HoloFun) else HoloFun(f)

    def fvec(pts):
        return fun.f(pts)

    rect = tuple(map(float, rect))
    for attempt in range(nudge_attempts + 1):
        try:
            total = _winding_number(fvec, rect)
            break
        except BoundaryZeroError:
            if attempt == nudge_attempts:
                raise
            bump = 1.7e-3 * (attempt + 1) * max(rect[1] - rect[0],
                                                rect[3] - rect[2])
            rect = (rect[0] - bump, rect[1] + bump,
                    rect[2] - bump, rect[3] + bump)

    records: list[ZeroRecord] = []

    def subdivide(r, count):
        if count == 0:
            return
        x0, x1, y0, y1 = r
        small = max(x1 - x0, y1 - y0) <= leaf_size
        if (count == 1 and small) or min(x1 - x0, y1 - y0) < min_cell:
            cx, cy = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
            z = complex(cx, cy)
            for _ in range(200):
                fv = fun.f(z)
                dv = fun.d1(z)
                if dv == 0:
                    break
                step = fv / dv
                z = z - step
                if abs(step) < refine_tol * max(1.0, abs(z)):
                    break
            records.append(ZeroRecord(z, count, fun.d1(z)))
            return
        # split point perturbed as a whole when a zero hits a split line,
        # so the four cells always partition the parent exactly
        for attempt in range(nudge_attempts + 1):
            off = 2.3e-2 * attempt
            xm = x0 + (x1 - x0) * (0.5 + off)
            ym = y0 + (y1 - y0) * (0.5 + off)
            quads = [(x0, xm, y0, ym), (xm, x1, y0, ym),
                     (x0, xm, ym, y1), (xm, x1, ym, y1)]
            try:
                cnts = [_winding_number(fvec, q) for q in quads]
            except BoundaryZeroError:
                if attempt == nudge_attempts:
                    raise
                continue
            if sum(cnts) == count:
                break
            if attempt == nudge_attempts:
                raise BoundaryZeroError("subdivision counts inconsistent")
        for q, cnt in zip(quads, cnts):
            subdivide(q, cnt)

    subdivide(rect, total)
    records.sort(key=lambda r: (r.location.imag, r.location.real))
    return total, records
