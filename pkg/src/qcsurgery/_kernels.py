"""Hot numeric kernels, in two interchangeable lanes.

Everything here evaluates the building-block functions

    P(m, w)   = sum_{k=0}^{2m} (-1)^k w^k / k!
    g(m, z)   = P(m, e^z) * exp(e^z)
    g'/g      = exp((2m+1) z) / ((2m)! * P(m, e^z))

in log scale, plus the monotone root solve for the real gluing
diffeomorphism phi defined by  log g(m, x) = log g(n, phi(x)).

The same set of functions exists twice:

* a pure-numpy lane (``*_np``), always available, vectorized with masks;
* a numba lane compiled from scalar cores, used by default when numba
  imports cleanly.

Set ``QCSURGERY_NO_NUMBA=1`` in the environment to force the numpy lane
(see ``benchmarks/bench_kernels.py`` for a timing comparison).  Both
lanes must agree to ~1e-14; tests/test_kernels.py enforces that.

Numerical routes (identical in both lanes)
------------------------------------------
Direct evaluation of log g = e^z + log P(e^z) cancels catastrophically
once |e^z| is small: the two terms are O(|e^z|) while their sum is
O(|e^z|^{2m+1}).  We therefore split on w = e^z:

* |w| <= m+1  ("tail"):  use the exact rearrangement
      g = 1 + e^w * R(w),   R(w) = sum_{k>=2m+1} (-1)^{k+1} w^k / k!,
  where R is evaluated through the well-conditioned alternating series
  R(w) = w^{2m+1}/(2m+1)! * sum_j (-w)^j (2m+1)!/(2m+1+j)!  whose terms
  drop by at least a factor 2, and finish with a complex log1p.
* |w| > m+1, Re z <= 20 ("mid"): direct Horner for P(m, w); no
  cancellation because log g is O(|w|) there.
* Re z > 20 ("far"): log P(m, e^z) = 2m z + log T(e^{-z}) with
      T(v) = sum_{j=0}^{2m} (-1)^j v^j / (2m-j)!,
  so that nothing larger than e^{20} is ever formed; valid for real
  parts far beyond the overflow threshold of exp.

The real-axis helpers work with  ll(x) = log(log g(m, x))  so that the
phi root solve stays well-scaled from x ~ -40 up to x ~ 1e7; above
x = 30 they switch to  ll = x + log1p(e^{-x} log P)  which degrades
gracefully to ll = x once the correction underflows.
"""

from __future__ import annotations

import math
import os

import numpy as np

_ENV_FLAG = "QCSURGERY_NO_NUMBA"

_LN_EPS = -40.0          # below this, log1p(e^t) == e^t to double precision
_FAR_RE = 20.0           # switch to the e^{-z} expansion of P(m, e^z)
_FAR_LL = 30.0           # switch to ll = x + log1p(...) on the real axis
_SERIES_CAP = 200        # hard cap for the alternating tail series

MAX_PHI_ITER = 80


def _pm_coeffs(m: int) -> np.ndarray:
    """Coefficients of P(m, .), degree 2m, index k -> (-1)^k/k!."""
    k = np.arange(2 * m + 1)
    signs = np.where(k % 2 == 0, 1.0, -1.0)
    fact = np.array([math.factorial(int(i)) for i in k], dtype=float)
    return signs / fact


def _pm_far_coeffs(m: int) -> np.ndarray:
    """Coefficients of T(v) = sum_j (-1)^j v^j/(2m-j)!, j = 0..2m."""
    j = np.arange(2 * m + 1)
    signs = np.where(j % 2 == 0, 1.0, -1.0)
    fact = np.array([math.factorial(int(2 * m - i)) for i in j], dtype=float)
    return signs / fact


_COEFF_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _coeffs(m: int) -> tuple[np.ndarray, np.ndarray]:
    got = _COEFF_CACHE.get(m)
    if got is None:
        got = (_pm_coeffs(m), _pm_far_coeffs(m))
        _COEFF_CACHE[m] = got
    return got


# ---------------------------------------------------------------------------
# numpy lane
# ---------------------------------------------------------------------------

def pm_values_np(m: int, w: np.ndarray) -> np.ndarray:
    """P(m, w) by Horner, complex array in/out."""
    coeffs = _coeffs(m)[0]
    acc = np.full_like(w, coeffs[-1], dtype=complex)
    for k in range(2 * m - 1, -1, -1):
        acc = acc * w + coeffs[k]
    return acc


def logp_values_np(m: int, z: np.ndarray) -> np.ndarray:
    """Principal-branch log of P(m, e^z), safe for any Re z."""
    z = np.asarray(z, dtype=complex)
    out = np.zeros_like(z)
    if m == 0:
        return out
    far = z.real > _FAR_RE
    mid = ~far
    if np.any(mid):
        w = np.exp(z[mid])
        out[mid] = np.log(pm_values_np(m, w))
    if np.any(far):
        zf = z[far]
        v = np.exp(-zf)
        coeffs = _coeffs(m)[1]
        acc = np.full_like(v, coeffs[-1])
        for j in range(2 * m - 1, -1, -1):
            acc = acc * v + coeffs[j]
        out[far] = 2 * m * zf + np.log(acc)
    return out


def _clog1p_np(u: np.ndarray) -> np.ndarray:
    """Complex log(1+u), accurate for small |u| (Kahan's correction)."""
    v = 1.0 + u
    exact = v == 1.0
    d = np.where(exact, 1.0, v - 1.0)
    safe_u = np.where(exact, 1.0, u)
    corr = np.log(np.where(exact, 1.0, v)) * (safe_u / d)
    return np.where(exact, u, corr)


def _tail_factor_np(m: int, w: np.ndarray) -> np.ndarray:
    """sum_j (-w)^j (2m+1)!/(2m+1+j)!, alternating, |w| <= m+1."""
    term = np.ones_like(w)
    acc = term.copy()
    for j in range(_SERIES_CAP):
        term = -term * w / (2 * m + 2 + j)
        acc += term
        if np.max(np.abs(term)) < 1e-18:
            break
    return acc


def log_g_values_np(m: int, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(log|g|, arg g) for g(m, z); arg = Im e^z + principal arg of P."""
    z = np.asarray(z, dtype=complex)
    logmod = np.empty(z.shape, dtype=float)
    arg = np.empty(z.shape, dtype=float)
    tail = z.real <= math.log(m + 1)
    if np.any(tail):
        zt = z[tail]
        w = np.exp(zt)
        fac = _tail_factor_np(m, w)
        log_r = (2 * m + 1) * zt - math.lgamma(2 * m + 2) + np.log(fac)
        lhat_log = w + log_r
        # Re(lhat_log) <= (m+1) + (2m+1) log(m+1): exp never overflows here,
        # and clog1p is exact down to the underflow of exp itself.
        lg = _clog1p_np(np.exp(lhat_log))
        logmod[tail] = lg.real
        arg[tail] = lg.imag
    rest = ~tail
    if np.any(rest):
        zr = z[rest]
        lp = logp_values_np(m, zr)
        ez = np.exp(zr)
        logmod[rest] = ez.real + lp.real
        arg[rest] = ez.imag + lp.imag
    return logmod, arg


def log_gpg_values_np(m: int, z: np.ndarray) -> np.ndarray:
    """log of g'(m,.)/g(m,.) = (2m+1) z - log (2m)! - log P(m, e^z)."""
    z = np.asarray(z, dtype=complex)
    return (2 * m + 1) * z - math.lgamma(2 * m + 1) - logp_values_np(m, z)


def _logp_real_np(m: int, x: np.ndarray) -> np.ndarray:
    """log P(m, e^x) for real x, same routes as the complex version."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    if m == 0:
        return out
    far = x > _FAR_RE
    mid = ~far
    if np.any(mid):
        w = np.exp(x[mid])
        coeffs = _coeffs(m)[0]
        acc = np.full_like(w, coeffs[-1])
        for k in range(2 * m - 1, -1, -1):
            acc = acc * w + coeffs[k]
        out[mid] = np.log(acc)
    if np.any(far):
        xf = x[far]
        v = np.exp(-xf)
        coeffs = _coeffs(m)[1]
        acc = np.full_like(v, coeffs[-1])
        for j in range(2 * m - 1, -1, -1):
            acc = acc * v + coeffs[j]
        out[far] = 2 * m * xf + np.log(acc)
    return out


def ll_g_real_np(m: int, x: np.ndarray) -> np.ndarray:
    """log(log g(m, x)) on the real axis, monotone increasing."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    far = x > _FAR_LL
    tail = (~far) & (x <= math.log(m + 1))
    mid = (~far) & (~tail)
    if np.any(tail):
        xt = x[tail]
        w = np.exp(xt)
        fac = _tail_factor_np(m, w).real
        lhat_log = w + (2 * m + 1) * xt - math.lgamma(2 * m + 2) + np.log(fac)
        small = lhat_log < _LN_EPS
        big = np.where(small, lhat_log,
                       np.log(np.log1p(np.exp(np.where(small, 0.0, lhat_log)))))
        out[tail] = big
    if np.any(mid):
        xm = x[mid]
        w = np.exp(xm)
        out[mid] = np.log(w + _logp_real_np(m, xm))
    if np.any(far):
        xf = x[far]
        lp = _logp_real_np(m, xf)
        out[far] = xf + np.log1p(lp * np.exp(-np.minimum(xf, 745.0)) *
                                 (xf <= 745.0))
    return out


def lgpg_real_np(m: int, x: np.ndarray) -> np.ndarray:
    """log of (g'/g)(m, x) for real x (the ratio is positive there)."""
    x = np.asarray(x, dtype=float)
    out = (2 * m + 1) * x - math.lgamma(2 * m + 1)
    tail = x <= math.log(m + 1)
    rest = ~tail
    res = np.zeros_like(x)
    if np.any(tail):
        xt = x[tail]
        w = np.exp(xt)
        fac = _tail_factor_np(m, w).real
        lhat_log = w + (2 * m + 1) * xt - math.lgamma(2 * m + 2) + np.log(fac)
        small = lhat_log < _LN_EPS
        lg = np.where(small, np.exp(np.maximum(lhat_log, -745.0)),
                      np.log1p(np.exp(np.where(small, 0.0, lhat_log))))
        res[tail] = lg - w
    if np.any(rest):
        res[rest] = _logp_real_np(m, x[rest])
    return out - res


def phi_values_np(m: int, n: int, k: float, c: float, x: np.ndarray,
                  tol: float) -> np.ndarray:
    """Solve ll(n, y) = ll(m, x) elementwise; Newton with bisection guard.

    Seeds come from the two asymptotic regimes (y ~ x on the right,
    y ~ kx + c on the left); the bracket is grown geometrically from
    width 2 around the seed, which the monotonicity of ll guarantees to
    succeed.  Non-converged entries come back as NaN.
    """
    x = np.asarray(x, dtype=float)
    t = ll_g_real_np(m, x)
    y = np.where(x >= 0, x, k * x + c).astype(float)

    lo = y - 1.0
    hi = y + 1.0
    width = np.ones_like(y)
    for _ in range(80):
        flo = ll_g_real_np(n, lo) - t
        bad = flo > 0
        if not np.any(bad):
            break
        width = np.where(bad, width * 2.0, width)
        lo = np.where(bad, lo - width, lo)
    for _ in range(80):
        fhi = ll_g_real_np(n, hi) - t
        bad = fhi < 0
        if not np.any(bad):
            break
        width = np.where(bad, width * 2.0, width)
        hi = np.where(bad, hi + width, hi)

    # Stop on the residual |ll(n,y) - ll(m,x)| <= tol/2, which bounds the
    # relative defect of log g itself; fall back to step stagnation when
    # the evaluation noise floor is hit first.
    done = np.zeros(y.shape, dtype=bool)
    for _ in range(MAX_PHI_ITER):
        lln = ll_g_real_np(n, y)
        f = lln - t
        conv = np.abs(f) <= 0.5 * tol
        done = done | conv
        if np.all(done):
            break
        hi = np.where((~done) & (f > 0), np.minimum(hi, y), hi)
        lo = np.where((~done) & (f <= 0), np.maximum(lo, y), lo)
        d = np.exp(lgpg_real_np(n, y) - lln)
        ynew = y - f / d
        inside = (ynew > lo) & (ynew < hi)
        ynew = np.where(inside, ynew, 0.5 * (lo + hi))
        stag = np.abs(ynew - y) <= 1e-16 * np.maximum(1.0, np.abs(ynew))
        done = done | stag
        y = np.where(done, y, ynew)
    return np.where(done, y, np.nan)


_NUMPY_LANE = {
    "pm_values": pm_values_np,
    "logp_values": logp_values_np,
    "log_g_values": log_g_values_np,
    "log_gpg_values": log_gpg_values_np,
    "ll_g_real": ll_g_real_np,
    "lgpg_real": lgpg_real_np,
    "phi_values": phi_values_np,
}


# ---------------------------------------------------------------------------
# numba lane
# ---------------------------------------------------------------------------

def _build_numba_lane():
    import cmath

    from numba import njit

    far_re = _FAR_RE
    far_ll = _FAR_LL
    ln_eps = _LN_EPS
    cap = _SERIES_CAP
    max_iter = MAX_PHI_ITER

    @njit(cache=True)
    def _pm_scalar(m, w):
        # Horner, coefficients (-1)^k/k! by the recurrence 1/(k-1)! = k/k!
        inv = 1.0
        for i in range(2, 2 * m + 1):
            inv /= i
        acc = complex(inv, 0.0)
        for k in range(2 * m - 1, -1, -1):
            inv *= (k + 1)
            sign = 1.0 if k % 2 == 0 else -1.0
            acc = acc * w + sign * inv
        return acc

    @njit(cache=True)
    def _logp_far_scalar(m, z):
        # log P(m, e^z) = 2m z + log sum_j (-1)^j e^{-jz}/(2m-j)!
        v = cmath.exp(-z)
        acc = complex(1.0, 0.0)
        invf = 1.0
        for j in range(2 * m - 1, -1, -1):
            invf /= (2 * m - j)
            sign = 1.0 if j % 2 == 0 else -1.0
            acc = acc * v + sign * invf
        return 2 * m * z + cmath.log(acc)

    @njit(cache=True)
    def _logp_scalar(m, z):
        if m == 0:
            return complex(0.0, 0.0)
        if z.real > far_re:
            return _logp_far_scalar(m, z)
        w = cmath.exp(z)
        return cmath.log(_pm_scalar(m, w))

    @njit(cache=True)
    def _clog1p(u):
        v = 1.0 + u
        if v == 1.0 + 0.0j:
            return u
        return cmath.log(v) * (u / (v - 1.0))

    @njit(cache=True)
    def _tail_factor(m, w):
        term = complex(1.0, 0.0)
        acc = complex(1.0, 0.0)
        for j in range(cap):
            term = -term * w / (2 * m + 2 + j)
            acc += term
            if abs(term) < 1e-18:
                break
        return acc

    @njit(cache=True)
    def _log_g_scalar(m, z):
        if z.real <= math.log(m + 1.0):
            w = cmath.exp(z)
            fac = _tail_factor(m, w)
            log_r = (2 * m + 1) * z - math.lgamma(2 * m + 2.0) + cmath.log(fac)
            lhat_log = w + log_r
            return _clog1p(cmath.exp(lhat_log))
        lp = _logp_scalar(m, z)
        ez = cmath.exp(z)
        return complex(ez.real + lp.real, ez.imag + lp.imag)

    @njit(cache=True)
    def _logp_real_far(m, x):
        v = math.exp(-x)
        acc = 1.0
        invf = 1.0
        for j in range(2 * m - 1, -1, -1):
            invf /= (2 * m - j)
            sign = 1.0 if j % 2 == 0 else -1.0
            acc = acc * v + sign * invf
        return 2 * m * x + math.log(acc)

    @njit(cache=True)
    def _pm_real(m, w):
        inv = 1.0
        for i in range(2, 2 * m + 1):
            inv /= i
        acc = inv
        for k in range(2 * m - 1, -1, -1):
            inv *= (k + 1)
            sign = 1.0 if k % 2 == 0 else -1.0
            acc = acc * w + sign * inv
        return acc

    @njit(cache=True)
    def _ll_real_scalar(m, x):
        if x > far_ll:
            lp = 0.0
            if m > 0:
                lp = _logp_real_far(m, x)
            if x > 745.0:
                return x
            return x + math.log1p(lp * math.exp(-x))
        if x <= math.log(m + 1.0):
            w = math.exp(x)
            fac = _tail_factor(m, complex(w, 0.0)).real
            lhat_log = w + (2 * m + 1) * x - math.lgamma(2 * m + 2.0) + \
                math.log(fac)
            if lhat_log < ln_eps:
                return lhat_log
            return math.log(math.log1p(math.exp(lhat_log)))
        w = math.exp(x)
        return math.log(w + math.log(_pm_real(m, w)))

    @njit(cache=True)
    def _lgpg_real_scalar(m, x):
        out = (2 * m + 1) * x - math.lgamma(2 * m + 1.0)
        if x <= math.log(m + 1.0):
            w = math.exp(x)
            fac = _tail_factor(m, complex(w, 0.0)).real
            lhat_log = w + (2 * m + 1) * x - math.lgamma(2 * m + 2.0) + \
                math.log(fac)
            if lhat_log < ln_eps:
                lg = math.exp(max(lhat_log, -745.0))
            else:
                lg = math.log1p(math.exp(lhat_log))
            return out - (lg - w)
        if x > far_re:
            if m == 0:
                return out
            return out - _logp_real_far(m, x)
        w = math.exp(x)
        return out - math.log(_pm_real(m, w))

    @njit(cache=True)
    def _phi_scalar(m, n, k, c, x, tol):
        t = _ll_real_scalar(m, x)
        y = x if x >= 0 else k * x + c
        lo = y - 1.0
        hi = y + 1.0
        width = 1.0
        for _ in range(80):
            if _ll_real_scalar(n, lo) - t <= 0:
                break
            width *= 2.0
            lo -= width
        for _ in range(80):
            if _ll_real_scalar(n, hi) - t >= 0:
                break
            width *= 2.0
            hi += width
        for _ in range(max_iter):
            lln = _ll_real_scalar(n, y)
            f = lln - t
            if abs(f) <= 0.5 * tol:
                return y
            if f > 0:
                hi = min(hi, y)
            else:
                lo = max(lo, y)
            d = math.exp(_lgpg_real_scalar(n, y) - lln)
            ynew = y - f / d
            if not (lo < ynew < hi):
                ynew = 0.5 * (lo + hi)
            if abs(ynew - y) <= 1e-16 * max(1.0, abs(ynew)):
                return ynew
            y = ynew
        return math.nan

    @njit(cache=True)
    def pm_values(m, w):
        out = np.empty(w.shape, dtype=np.complex128)
        for i in range(w.size):
            out.flat[i] = _pm_scalar(m, w.flat[i])
        return out

    @njit(cache=True)
    def logp_values(m, z):
        out = np.empty(z.shape, dtype=np.complex128)
        for i in range(z.size):
            out.flat[i] = _logp_scalar(m, z.flat[i])
        return out

    @njit(cache=True)
    def log_g_values(m, z):
        logmod = np.empty(z.shape, dtype=np.float64)
        arg = np.empty(z.shape, dtype=np.float64)
        for i in range(z.size):
            lg = _log_g_scalar(m, z.flat[i])
            logmod.flat[i] = lg.real
            arg.flat[i] = lg.imag
        return logmod, arg

    @njit(cache=True)
    def log_gpg_values(m, z):
        out = np.empty(z.shape, dtype=np.complex128)
        base = math.lgamma(2 * m + 1.0)
        for i in range(z.size):
            zz = z.flat[i]
            out.flat[i] = (2 * m + 1) * zz - base - _logp_scalar(m, zz)
        return out

    @njit(cache=True)
    def ll_g_real(m, x):
        out = np.empty(x.shape, dtype=np.float64)
        for i in range(x.size):
            out.flat[i] = _ll_real_scalar(m, x.flat[i])
        return out

    @njit(cache=True)
    def lgpg_real(m, x):
        out = np.empty(x.shape, dtype=np.float64)
        for i in range(x.size):
            out.flat[i] = _lgpg_real_scalar(m, x.flat[i])
        return out

    @njit(cache=True)
    def phi_values(m, n, k, c, x, tol):
        out = np.empty(x.shape, dtype=np.float64)
        for i in range(x.size):
            out.flat[i] = _phi_scalar(m, n, k, c, x.flat[i], tol)
        return out

    return {
        "pm_values": pm_values,
        "logp_values": logp_values,
        "log_g_values": log_g_values,
        "log_gpg_values": log_gpg_values,
        "ll_g_real": ll_g_real,
        "lgpg_real": lgpg_real,
        "phi_values": phi_values,
    }


def _select_lane():
    if os.environ.get(_ENV_FLAG, "0") == "1":
        return "numpy", _NUMPY_LANE
    try:
        lane = _build_numba_lane()
        return "numba", lane
    except ImportError:
        return "numpy", _NUMPY_LANE


ACTIVE_LANE, _ACTIVE = _select_lane()

pm_values = _ACTIVE["pm_values"]
logp_values = _ACTIVE["logp_values"]
log_g_values = _ACTIVE["log_g_values"]
log_gpg_values = _ACTIVE["log_gpg_values"]
ll_g_real = _ACTIVE["ll_g_real"]
lgpg_real = _ACTIVE["lgpg_real"]
phi_values = _ACTIVE["phi_values"]


def numpy_lane() -> dict:
    """The always-available fallback lane (for tests and benchmarks)."""
    return dict(_NUMPY_LANE)


def numba_lane() -> dict | None:
    """The compiled lane, or None when numba is unavailable."""
    try:
        return _build_numba_lane()
    except ImportError:
        return None
