"""Overflow-safe evaluation of the block functions and their zeros.

The block with index m >= 0 consists of the degree-2m polynomial
P(m, w) = sum_{k<=2m} (-1)^k w^k/k! and the locally univalent entire
function g(m, z) = P(m, e^z) exp(e^z), whose values explode like
exp(e^x) and therefore live here as :class:`LogComplex` pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels

ZERO_TOL = 1e-10


class ZeroOfGError(ValueError):
    """Evaluation requested at (or too close to) a zero of g."""


class RootSolveError(RuntimeError):
    """A polynomial or diffeomorphism root solve failed to converge."""


@dataclass(frozen=True)
class LogComplex:
    """A nonzero complex number stored as exp(log_mod + i*arg).

    Survives magnitudes like exp(e^30).  The argument is whatever
    determination the producing evaluation yields (for g it is
    Im e^z plus a principal polynomial argument); it is not reduced
    mod 2pi.
    """

    log_mod: float
    arg: float

    @classmethod
    def from_complex(cls, v: complex) -> "LogComplex":
        v = complex(v)
        if v == 0:
            raise ValueError("LogComplex cannot represent zero")
        return cls(math.log(abs(v)), math.atan2(v.imag, v.real))

    def to_complex(self) -> complex:
        return complex(math.exp(self.log_mod) * math.cos(self.arg),
                       math.exp(self.log_mod) * math.sin(self.arg))

    def __mul__(self, other: "LogComplex") -> "LogComplex":
        return LogComplex(self.log_mod + other.log_mod, self.arg + other.arg)

    def __truediv__(self, other: "LogComplex") -> "LogComplex":
        return LogComplex(self.log_mod - other.log_mod, self.arg - other.arg)


def _check_block(m: int) -> int:
    if not isinstance(m, (int, np.integer)) or m < 0:
        raise ValueError(f"block index must be a non-negative integer, got {m!r}")
    return int(m)


def eval_P(m: int, w) -> complex | np.ndarray:
    """P(m, w) by Horner; accepts scalars or arrays."""
    m = _check_block(m)
    arr = np.asarray(w, dtype=complex)
    out = _kernels.pm_values(m, np.atleast_1d(arr))
    if arr.ndim == 0:
        return complex(out[0])
    return out.reshape(arr.shape)


_ROOT_CACHE: dict[int, np.ndarray] = {}


def pm_roots(m: int) -> np.ndarray:
    """The 2m roots of P(m, .), companion-matrix seeded, Newton polished.

    All roots are nonzero (P(m, 0) = 1).  Polished to 1e-13 relative.
    """
    m = _check_block(m)
    got = _ROOT_CACHE.get(m)
    if got is not None:
        return got
    if m == 0:
        roots = np.zeros(0, dtype=complex)
    else:
        k = np.arange(2 * m + 1)
        coeffs = np.where(k % 2 == 0, 1.0, -1.0) / \
            np.array([math.factorial(int(i)) for i in k])
        roots = np.roots(coeffs[::-1])
        dcoeffs = (coeffs * k)[1:]  # P'
        for _ in range(50):
            pv = np.polyval(coeffs[::-1], roots)
            dv = np.polyval(dcoeffs[::-1], roots)
            step = pv / dv
            roots = roots - step
            if np.max(np.abs(step) / np.abs(roots)) < 1e-14:
                break
        else:
            raise RootSolveError(f"root polish for block {m} did not converge")
        resid = np.abs(np.polyval(coeffs[::-1], roots))
        if np.max(resid) > 1e-10:
            raise RootSolveError(f"root residual too large for block {m}")
        roots = roots[np.argsort(roots.imag)]
    _ROOT_CACHE[m] = roots
    return roots


def _lattice_distance(m: int, z: np.ndarray) -> np.ndarray:
    """Distance from z to the zero set {Log w_j + 2 pi i l} of g(m, .)."""
    if m == 0:
        return np.full(np.shape(z), np.inf)
    z = np.asarray(z, dtype=complex)
    best = np.full(z.shape, np.inf)
    for w in pm_roots(m):
        base = complex(np.log(abs(w)), np.angle(w))
        dy = z.imag - base.imag
        l = np.round(dy / (2 * np.pi))
        d = np.hypot(z.real - base.real, dy - 2 * np.pi * l)
        best = np.minimum(best, d)
    return best


def log_g(m: int, z: complex) -> LogComplex:
    """g(m, z) in log scale.

    Raises :class:`ZeroOfGError` when z is within ZERO_TOL of a zero
    of g (equivalently, of the lattice Log w_j + 2 pi i Z over the
    roots w_j of the block polynomial).
    """
    m = _check_block(m)
    z = complex(z)
    if _lattice_distance(m, np.array([z]))[0] < ZERO_TOL:
        raise ZeroOfGError(f"z={z} is within {ZERO_TOL} of a zero of g_{m}")
    lm, ar = _kernels.log_g_values(m, np.array([z], dtype=complex))
    return LogComplex(float(lm[0]), float(ar[0]))


def log_g_array(m: int, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized log_g: (log-modulus, argument) arrays, no zero guard."""
    m = _check_block(m)
    z = np.asarray(z, dtype=complex)
    lm, ar = _kernels.log_g_values(m, np.atleast_1d(z))
    return lm.reshape(z.shape), ar.reshape(z.shape)


def log_gpg(m: int, z) -> complex | np.ndarray:
    """log of g'(m,.)/g(m,.); safe for arbitrarily large Re z."""
    m = _check_block(m)
    arr = np.asarray(z, dtype=complex)
    out = _kernels.log_gpg_values(m, np.atleast_1d(arr))
    if arr.ndim == 0:
        return complex(out[0])
    return out.reshape(arr.shape)


def log_g_prime_over_g(m: int, z: complex) -> complex:
    """The ratio g'(m, z)/g(m, z) itself.

    Computed as exp((2m+1)z - log (2m)! - log P(m, e^z)); overflows
    once (2m+1) Re z exceeds ~709, use :func:`log_gpg` there.
    """
    m = _check_block(m)
    z = complex(z)
    if m > 0 and _lattice_distance(m, np.array([z]))[0] < ZERO_TOL:
        raise ZeroOfGError(f"g_{m}'/g_{m} has a pole within {ZERO_TOL} of z={z}")
    return complex(np.exp(log_gpg(m, z)))


def ll_g_real(m: int, x) -> float | np.ndarray:
    """log(log g(m, x)) on the real axis (monotone increasing)."""
    m = _check_block(m)
    arr = np.asarray(x, dtype=float)
    out = _kernels.ll_g_real(m, np.atleast_1d(arr))
    if arr.ndim == 0:
        return float(out[0])
    return out.reshape(arr.shape)


def zeros_g(m: int, rect: tuple[float, float, float, float],
            margin: float = 1e-9) -> list[complex]:
    """All zeros of g(m, .) inside rect = (x0, x1, y0, y1).

    The zeros form the lattice Log w_j + 2 pi i l over the roots w_j of
    P(m, .).  Raises ValueError when a zero sits within ``margin`` of
    the rectangle boundary, since callers downstream integrate along it.
    """
    m = _check_block(m)
    x0, x1, y0, y1 = map(float, rect)
    if not (x0 < x1 and y0 < y1):
        raise ValueError("rect must satisfy x0 < x1 and y0 < y1")
    def boundary_dist(px: float, py: float) -> float:
        dx = max(x0 - px, 0.0, px - x1)
        dy = max(y0 - py, 0.0, py - y1)
        if dx > 0.0 or dy > 0.0:
            return math.hypot(dx, dy)
        return min(px - x0, x1 - px, py - y0, y1 - py)

    found: list[complex] = []
    for w in pm_roots(m):
        bx = math.log(abs(w))
        by = math.atan2(w.imag, w.real)
        if bx < x0 - margin or bx > x1 + margin:
            continue
        l_lo = math.ceil((y0 - by) / (2 * math.pi) - 1)
        l_hi = math.floor((y1 - by) / (2 * math.pi) + 1)
        for l in range(l_lo, l_hi + 1):
            zy = by + 2 * math.pi * l
            if boundary_dist(bx, zy) < margin:
                raise ValueError(
                    f"zero {complex(bx, zy)} within margin {margin} of rect side")
            if x0 < bx < x1 and y0 < zy < y1:
                found.append(complex(bx, zy))
    found.sort(key=lambda v: (v.imag, v.real))
    return found
