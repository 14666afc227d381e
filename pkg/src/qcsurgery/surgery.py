"""Interpolating quasiconformal map and the glued quasiregular function.

tau interpolates between the gluing diffeomorphism on the real axis and
the identity outside the unit-height strip Pi = {|Im z| < 1}; composing
the two block functions through tau and the spiral inverse h yields a
continuous quasiregular U whose non-conformality lives on the spiral-
shaped set X = p(lower half of Pi).  The logarithmic area of X (finite)
is what makes the downstream normalization conformal at infinity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .gluing import GlueParams, phi, phi_prime
from .special import LogComplex, log_g_array
from .spiral import (CODE_G_MINUS, CODE_G_PLUS, CODE_GAMMA, CODE_GAMMA_PRIME,
                     CODE_ORIGIN, Region, SpiralParams, branch_log, classify,
                     classify_array)


@dataclass(frozen=True)
class JacobianMat:
    """Real 2x2 Jacobian (a11 a12 / a21 a22)."""

    a11: float
    a12: float
    a21: float
    a22: float

    @property
    def det(self) -> float:
        return self.a11 * self.a22 - self.a12 * self.a21

    def wirtinger(self) -> tuple[complex, complex]:
        """(d, dbar) derivatives of the map with this Jacobian."""
        d = complex(self.a11 + self.a22, self.a21 - self.a12) / 2
        dbar = complex(self.a11 - self.a22, self.a21 + self.a12) / 2
        return d, dbar


@dataclass(frozen=True)
class BeltramiSample:
    z: complex
    mu_val: complex
    K: float


class SeamError(ValueError):
    """Evaluation at a seam requires a one-sided flag."""


def tau(gp: GlueParams, z) -> complex | np.ndarray:
    """The strip interpolation: identity for |Im z| >= 1, and

        phi(x)   + |y| (x - phi(x))   + iy   (x >= 0)
        phi(x/k) + |y| (x - phi(x/k)) + iy   (x < 0)

    inside; on the real axis tau(x) = phi(x) for x > 0 and
    tau(kx) = phi(x) for x < 0.
    """
    arr = np.asarray(z, dtype=complex)
    scalar = arr.ndim == 0
    zz = np.atleast_1d(arr).astype(complex)
    x = zz.real
    y = zz.imag
    out = zz.copy()
    inside = np.abs(y) < 1.0
    if np.any(inside):
        xi = x[inside]
        yi = y[inside]
        args = np.where(xi >= 0, xi, xi / gp.k)
        pv = _kernels.phi_values(gp.m, gp.n, gp.k, gp.c,
                                 args.astype(float), gp.tol)
        if np.any(np.isnan(pv)):
            from .special import RootSolveError
            raise RootSolveError("phi solve failed inside tau")
        out[inside] = pv + np.abs(yi) * (xi - pv) + 1j * yi
    if scalar:
        return complex(out[0])
    return out.reshape(arr.shape)


def tau_jacobian(gp: GlueParams, z: complex,
                 side: str | None = None) -> JacobianMat:
    """Analytic Jacobian of tau at z, valid off the seams y in {-1,0,1}.

    At a seam, pass side="upper"/"lower" for the one-sided value (the
    identity matrix on the outside of the strip).
    """
    z = complex(z)
    x, y = z.real, z.imag
    if abs(y) > 1.0:
        return JacobianMat(1.0, 0.0, 0.0, 1.0)
    on_seam = y in (-1.0, 0.0, 1.0)
    if on_seam and side is None:
        raise SeamError(f"Jacobian is one-sided at Im z = {y}; pass side=")
    if abs(y) == 1.0:
        outward = (y > 0 and side == "upper") or (y < 0 and side == "lower")
        if outward:
            return JacobianMat(1.0, 0.0, 0.0, 1.0)
    sgn = 1.0 if y > 0 else (-1.0 if y < 0 else
                             (1.0 if side == "upper" else -1.0))
    ay = abs(y)
    if x >= 0:
        pv = phi(gp, x)
        dv = phi_prime(gp, x)
        a11 = dv + ay * (1.0 - dv)
    else:
        pv = phi(gp, x / gp.k)
        dv = phi_prime(gp, x / gp.k) / gp.k
        a11 = dv + ay * (1.0 - dv)
    a12 = sgn * (x - pv)
    return JacobianMat(a11, a12, 0.0, 1.0)


def beltrami_of_tau(gp: GlueParams, z: complex,
                    side: str | None = None) -> BeltramiSample:
    """Beltrami coefficient of tau from its Jacobian; |mu| < 1."""
    jac = tau_jacobian(gp, z, side=side)
    d, dbar = jac.wirtinger()
    mu = dbar / d
    am = abs(mu)
    if am >= 1.0:
        raise RuntimeError(f"tau not orientation preserving at {z}")
    return BeltramiSample(complex(z), mu, (1 + am) / (1 - am))


def _mu_tau_array(gp: GlueParams, zeta: np.ndarray) -> np.ndarray:
    """Vectorized Beltrami coefficient of tau; 0 outside the open strip."""
    zeta = np.asarray(zeta, dtype=complex)
    out = np.zeros(zeta.shape, dtype=complex)
    x = zeta.real
    y = zeta.imag
    inside = (np.abs(y) < 1.0) & (y != 0.0)
    if not np.any(inside):
        return out
    xi = x[inside]
    yi = y[inside]
    args = np.where(xi >= 0, xi, xi / gp.k).astype(float)
    pv = _kernels.phi_values(gp.m, gp.n, gp.k, gp.c, args, gp.tol)
    dv = np.exp(_kernels.lgpg_real(gp.m, args) - _kernels.lgpg_real(gp.n, pv))
    dv = np.where(xi >= 0, dv, dv / gp.k)
    ay = np.abs(yi)
    a11 = dv + ay * (1.0 - dv)
    a12 = np.sign(yi) * (xi - pv)
    d = (a11 + 1.0 + 1j * (0.0 - a12)) / 2
    dbar = (a11 - 1.0 + 1j * (0.0 + a12)) / 2
    out[inside] = dbar / d
    return out


def eval_U(gp: GlueParams, sp: SpiralParams, z: complex,
           side: str = "auto") -> LogComplex:
    """The glued map in log scale:

        U = g(m, .) o h          on G+ u Gamma u Gamma' u {0},
        U = g(n, .) o tau o h    on G-.

    ``side`` selects the branch at seam points: "auto" follows the
    displayed case split, "plus"/"minus" force the G+/G- side limit
    (used by the seam continuity checks).  U(0) is the limiting value 1
    of the first branch; h itself is undefined at 0, so this value is a
    normalization choice, not an evaluation.
    """
    z = complex(z)
    region = classify(sp, z)
    if region is Region.ORIGIN:
        return LogComplex(0.0, 0.0)
    if side not in ("auto", "plus", "minus"):
        raise ValueError("side must be auto/plus/minus")
    use_minus = (region is Region.G_MINUS) or (
        side == "minus" and region in (Region.GAMMA, Region.GAMMA_PRIME))
    if not use_minus:
        u = branch_log(sp, z, side="+")
        zeta = np.exp(u)
        lm, ar = log_g_array(gp.m, np.array([zeta]))
        return LogComplex(float(lm[0]), float(ar[0]))
    u = branch_log(sp, z, side="-")
    zeta = complex(np.exp(u))
    tz = tau(gp, zeta)
    lm, ar = log_g_array(gp.n, np.array([tz]))
    return LogComplex(float(lm[0]), float(ar[0]))


def eval_U_array(gp: GlueParams, sp: SpiralParams,
                 z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized eval_U (auto sides): (log-modulus, argument) arrays."""
    zz = np.atleast_1d(np.asarray(z, dtype=complex))
    logmod = np.zeros(zz.shape, dtype=float)
    arg = np.zeros(zz.shape, dtype=float)
    codes = classify_array(sp, zz)
    origin = codes == CODE_ORIGIN
    plus = (codes == CODE_G_PLUS) | (codes == CODE_GAMMA) | \
        (codes == CODE_GAMMA_PRIME)
    minus = codes == CODE_G_MINUS
    if np.any(plus):
        u = branch_log(sp, zz[plus], side="+")
        lm, ar = log_g_array(gp.m, np.exp(u))
        logmod[plus] = lm
        arg[plus] = ar
    if np.any(minus):
        u = branch_log(sp, zz[minus])
        tz = tau(gp, np.exp(u))
        lm, ar = log_g_array(gp.n, np.atleast_1d(tz))
        logmod[minus] = lm
        arg[minus] = ar
    logmod[origin] = 0.0
    arg[origin] = 0.0
    shape = np.shape(z)
    return logmod.reshape(shape), arg.reshape(shape)


def in_X(gp: GlueParams, sp: SpiralParams, z: np.ndarray) -> np.ndarray:
    """Membership in X = p(lower half of Pi), where U fails to be analytic.

    X is kept implicit: z is in X iff its G-branch preimage has
    Im in (-1, 0).
    """
    zz = np.atleast_1d(np.asarray(z, dtype=complex))
    ok = np.zeros(zz.shape, dtype=bool)
    nz = zz != 0
    u = branch_log(sp, np.where(nz, zz, 1.0))
    zeta = np.exp(u)
    ok = nz & (zeta.imag > -1.0) & (zeta.imag < 0.0)
    return ok.reshape(np.shape(z))


def beltrami_of_U(gp: GlueParams, sp: SpiralParams,
                  z: complex) -> BeltramiSample:
    """Beltrami coefficient of U at z (not on a seam).

    Zero off X; on X it is the tau coefficient pulled back through the
    analytic h:  mu_U(z) = mu_tau(h(z)) conj(h'(z))/h'(z)  with
    h'(z) = h(z)/(mu z).  Post-composition with the analytic block
    function does not alter it.
    """
    z = complex(z)
    region = classify(sp, z)
    if region in (Region.GAMMA, Region.GAMMA_PRIME, Region.ORIGIN):
        raise SeamError(f"Beltrami coefficient one-sided at {region}")
    if region is Region.G_PLUS:
        return BeltramiSample(z, 0.0, 1.0)
    u = branch_log(sp, z)
    zeta = complex(np.exp(u))
    if zeta.imag <= -1.0:
        return BeltramiSample(z, 0.0, 1.0)
    mt = beltrami_of_tau(gp, zeta)
    hp = zeta / (sp.mu * z)
    mu = mt.mu_val * np.conj(hp) / hp
    am = abs(mu)
    return BeltramiSample(z, complex(mu), (1 + am) / (1 - am))


def beltrami_of_U_array(gp: GlueParams, sp: SpiralParams,
                        z: np.ndarray) -> np.ndarray:
    """Vectorized mu_U; 0 off X, no seam errors (grid sampling use)."""
    zz = np.atleast_1d(np.asarray(z, dtype=complex))
    out = np.zeros(zz.shape, dtype=complex)
    nz = zz != 0
    u = branch_log(sp, np.where(nz, zz, 1.0))
    zeta = np.exp(u)
    member = nz & (zeta.imag > -1.0) & (zeta.imag < 0.0)
    if np.any(member):
        zm = zeta[member]
        mt = _mu_tau_array(gp, zm)
        hp = zm / (sp.mu * zz[member])
        out[member] = mt * np.conj(hp) / hp
    return out.reshape(np.shape(z))


def _theta_measure(r: float, refine_tol: float = 1e-12) -> float:
    """Angular measure of {theta in (-pi, 0): r e^{i theta} in Pi^-}.

    Pi^- = {-1 < Im < 0}; on the circle of radius r > 1 the admissible
    set is two arcs adjacent to the endpoints, whose boundaries are
    located by bisection on the indicator boundary r sin(theta) = -1.
    """
    if r <= 1.0:
        return 0.0

    def edge(lo: float, hi: float) -> float:
        # f > 0 inside Pi^-, sign change between lo (inside) and hi;
        # the interval may be traversed in either direction
        flo = r * math.sin(lo) + 1.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            fm = r * math.sin(mid) + 1.0
            if (flo > 0) == (fm > 0):
                lo = mid
                flo = fm
            else:
                hi = mid
            if abs(hi - lo) < refine_tol:
                break
        return 0.5 * (lo + hi)

    b1 = edge(0.0, -0.5 * math.pi)          # arc (-alpha, 0)
    b2 = edge(-math.pi, -0.5 * math.pi)     # arc (-pi, -pi + alpha)
    return (0.0 - b1) + (b2 - (-math.pi))


def _adaptive_simpson(f, a: float, b: float, rtol: float,
                      max_depth: int = 40) -> float:
    fa, fm, fb = f(a), f(0.5 * (a + b)), f(b)
    whole = (b - a) / 6 * (fa + 4 * fm + fb)

    def rec(a, b, fa, fm, fb, whole, depth):
        m = 0.5 * (a + b)
        lm = 0.5 * (a + m)
        rm = 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = (m - a) / 6 * (fa + 4 * flm + fm)
        right = (b - m) / 6 * (fm + 4 * frm + fb)
        if depth >= max_depth:
            return left + right
        if abs(left + right - whole) <= 15 * rtol * (abs(left + right) + 1e-300):
            return left + right + (left + right - whole) / 15
        return (rec(a, m, fa, flm, fm, left, depth + 1) +
                rec(m, b, fm, frm, fb, right, depth + 1))

    return rec(a, b, fa, fm, fb, whole, 0)


def log_area(gp: GlueParams, sp: SpiralParams, r_max: float,
             rtol: float = 1e-8) -> tuple[float, float]:
    """Logarithmic area |mu|^2 * area({Pi^- , 1 < |z| < r_max}, dxdy/|z|^2).

    Integrated in polar-log coordinates: the inner angular measure per
    radius comes from indicator bisection, the outer integral from
    adaptive Simpson in s = log r with extra panels near the |z| = 1
    kink.  Returns (value, tail estimate), the tail being the O(1/R)
    remainder of the strip integral.
    """
    if r_max <= 1.0:
        raise ValueError("r_max must exceed 1")
    s_max = math.log(r_max)

    def f(s: float) -> float:
        return _theta_measure(math.exp(s))

    knots = [0.0]
    for t in (1e-8, 1e-4, 1e-2, 0.1, 1.0):
        if t < s_max:
            knots.append(t)
    knots.append(s_max)
    total = 0.0
    for a, b in zip(knots[:-1], knots[1:]):
        total += _adaptive_simpson(f, a, b, rtol)
    weight = abs(sp.mu) ** 2
    tail = weight * 2.0 / r_max
    return weight * total, tail
