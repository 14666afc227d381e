"""Power map onto the complement of a logarithmic spiral.

For k > 0 the exponent

    mu = 2 pi (2 pi - i log k) / (4 pi^2 + log^2 k)

makes p(z) = z^mu (principal branch on the slit plane
D = C minus R_{<=0}) a conformal homeomorphism onto the complement G of
the logarithmic spiral Gamma = p-image of the slit edges, with the two
edge parameterizations matched by p(x + i0) = p(kx - i0) for x < 0.
The second spiral Gamma' = p(R_{>=0}) splits the plane into G+ and G-,
the images of the upper and lower half-planes.

The inverse h = p^{-1} is realized by branch selection in log
coordinates: among u_j = (Log w + 2 pi i j)/mu the unique j with
Im u_j in (-pi, pi) gives h(w) = e^{u_j}.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

ON_CURVE_TOL = 1e-12


class Region(enum.Enum):
    G_PLUS = "G_plus"
    G_MINUS = "G_minus"
    GAMMA = "Gamma"
    GAMMA_PRIME = "Gamma_prime"
    ORIGIN = "origin"


# integer codes for array classification
CODE_G_PLUS, CODE_G_MINUS, CODE_GAMMA, CODE_GAMMA_PRIME, CODE_ORIGIN = \
    1, -1, 2, 3, 0

_REGION_OF_CODE = {
    CODE_G_PLUS: Region.G_PLUS,
    CODE_G_MINUS: Region.G_MINUS,
    CODE_GAMMA: Region.GAMMA,
    CODE_GAMMA_PRIME: Region.GAMMA_PRIME,
    CODE_ORIGIN: Region.ORIGIN,
}


@dataclass(frozen=True)
class SpiralParams:
    k: float
    mu: complex
    rho: float


def make_spiral(k: float) -> SpiralParams:
    """Spiral exponent and target order for a given k > 0.

    Asserts the defining constraints: both closed forms of the order
    agree to 1e-14, Re(mu (log k - i pi)) = Re(mu i pi) and
    Im(i pi / mu) = pi to 1e-12.
    """
    k = float(k)
    if k <= 0:
        raise ValueError("k must be positive")
    lk = math.log(k)
    q = 4 * math.pi ** 2 + lk ** 2
    mu = 2 * math.pi * complex(2 * math.pi, -lk) / q
    rho = 1.0 + lk ** 2 / (4 * math.pi ** 2)
    rho_alt = 1.0 / mu.real
    if abs(rho - rho_alt) > 1e-14 * max(1.0, rho):
        raise RuntimeError("order closed forms disagree")
    lhs = (mu * complex(lk, -math.pi)).real
    rhs = (mu * 1j * math.pi).real
    if abs(lhs - rhs) > 1e-12 * max(1.0, abs(rhs)):
        raise RuntimeError("edge-matching constraint violated")
    if abs((1j * math.pi / mu).imag - math.pi) > 1e-12:
        raise RuntimeError("inverse normalization constraint violated")
    return SpiralParams(k, mu, rho)


def power_p(sp: SpiralParams, z, side: str | None = None):
    """p(z) = exp(mu Log z) with the principal branch on the slit plane.

    Points on the cut R_{<=0} need ``side`` ("+" for the +i0 edge,
    "-" for -i0); elsewhere the flag is ignored.  Scalar or array.
    """
    arr = np.asarray(z, dtype=complex)
    scalar = arr.ndim == 0
    zz = np.atleast_1d(arr)
    on_cut = (zz.imag == 0) & (zz.real <= 0)
    if np.any(zz[on_cut] == 0):
        raise ValueError("p is not defined at 0")
    if np.any(on_cut) and side is None:
        raise ValueError("point on the cut R_<=0: pass side='+' or side='-'")
    logz = np.log(np.where(zz == 0, 1.0, zz))
    if side is not None:
        edge = math.pi if side == "+" else -math.pi
        logz = np.where(on_cut, np.log(np.abs(zz)) + 1j * edge, logz)
    out = np.exp(sp.mu * logz)
    if scalar:
        return complex(out[0])
    return out.reshape(arr.shape)


def branch_log(sp: SpiralParams, w, side: str | None = None):
    """The G-branch logarithm u of w (h(w) = e^u), Im u in [-pi, pi].

    The candidates (Log w + 2 pi i j)/mu step by 2 pi i as j increases
    (Im(i/mu) = 1 for spiral exponents), so a single rounding picks the
    branch.  On Gamma itself (Im u = +-pi) the branch is two-valued; the
    default resolves to the G+ side (+pi), ``side="-"`` to the other.
    """
    arr = np.asarray(w, dtype=complex)
    scalar = arr.ndim == 0
    ww = np.atleast_1d(arr)
    if np.any(ww == 0):
        raise ValueError("branch log undefined at 0")
    base = np.log(ww) / sp.mu
    step = 2 * math.pi * (1j / sp.mu).imag
    branch = np.round(-base.imag / step)
    u = base + (2j * math.pi * branch) / sp.mu
    # resolve boundary branch: want Im u in (-pi, pi] by default
    too_low = u.imag < -math.pi + 1e-15
    u = np.where(too_low, u + 2j * math.pi / sp.mu, u)
    too_high = u.imag > math.pi + 1e-15
    u = np.where(too_high, u - 2j * math.pi / sp.mu, u)
    if side == "-":
        on_gamma = math.pi - np.abs(u.imag) <= _angle_tol(sp, ww)
        flip = on_gamma & (u.imag > 0)
        u = np.where(flip, u - 2j * math.pi / sp.mu, u)
    elif side in ("+", None):
        on_gamma = math.pi - np.abs(u.imag) <= _angle_tol(sp, ww)
        flip = on_gamma & (u.imag < 0)
        u = np.where(flip, u + 2j * math.pi / sp.mu, u)
    if scalar:
        return complex(u[0])
    return u.reshape(arr.shape)


def _angle_tol(sp: SpiralParams, w: np.ndarray) -> np.ndarray:
    """On-curve angular tolerance, ON_CURVE_TOL scaled by |w|.

    A perturbation dz of a point on the curve moves Im u by about
    |dz| / |mu z|, so distance tolerance t maps to angle t/(|mu||z|),
    with the distance tolerance itself floored at ON_CURVE_TOL for
    |w| < 1.
    """
    aw = np.abs(w)
    return ON_CURVE_TOL * np.maximum(1.0, aw) / (np.abs(sp.mu) * np.maximum(aw, 1e-300))


def inverse_h(sp: SpiralParams, w, side: str | None = None):
    """h(w) = w^{1/mu}: the conformal inverse of p on G.

    Raises on Gamma (the slit image) unless a side flag picks a
    boundary value; h is continuous across Gamma', no flag needed there.
    """
    arr = np.asarray(w, dtype=complex)
    scalar = arr.ndim == 0
    ww = np.atleast_1d(arr)
    u = branch_log(sp, ww, side=side)
    if side is None:
        on_gamma = math.pi - np.abs(u.imag) <= _angle_tol(sp, ww)
        if np.any(on_gamma):
            raise ValueError("point on Gamma: pass side='+' or side='-'")
    out = np.exp(u)
    if scalar:
        return complex(out[0])
    return out.reshape(arr.shape)


def classify_array(sp: SpiralParams, w: np.ndarray) -> np.ndarray:
    """Region codes for an array of points (see CODE_* constants)."""
    ww = np.atleast_1d(np.asarray(w, dtype=complex))
    codes = np.empty(ww.shape, dtype=np.int8)
    origin = ww == 0
    safe = np.where(origin, 1.0, ww)
    u = branch_log(sp, safe)
    tol = _angle_tol(sp, safe)
    on_gamma = math.pi - np.abs(u.imag) <= tol
    on_gamma_pr = np.abs(u.imag) <= tol
    codes[:] = np.where(u.imag > 0, CODE_G_PLUS, CODE_G_MINUS)
    codes[on_gamma] = CODE_GAMMA
    codes[on_gamma_pr] = CODE_GAMMA_PRIME
    codes[origin] = CODE_ORIGIN
    return codes.reshape(np.shape(w))


def classify(sp: SpiralParams, w: complex) -> Region:
    """Which of G+, G-, Gamma, Gamma', {0} the point w belongs to."""
    code = int(classify_array(sp, np.array([w]))[0])
    return _REGION_OF_CODE[code]
