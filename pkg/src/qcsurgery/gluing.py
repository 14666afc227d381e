"""The increasing diffeomorphism gluing two blocks along the real axis.

phi is defined by  g(m, x) = g(n, phi(x))  and solved in
log-log scale; its two asymptotic regimes are

    phi(x) = x + O(e^{-x/2})            as x -> +inf,
    phi(x) = k x + c + O(e^{-delta|x|})  as x -> -inf,

with k = (2m+1)/(2n+1), c = log((2n+1)!/(2m+1)!)/(2n+1) and
delta = min(1, k)/2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .special import RootSolveError, _check_block

NOISE_FLOOR = 1e-14


class InsufficientPointsError(RuntimeError):
    """A tail fit has fewer than 4 samples above the noise floor."""


@dataclass(frozen=True)
class GlueParams:
    """The pair (m, n) with its gluing constants k, c, delta."""

    m: int
    n: int
    k: float
    c: float
    delta: float
    tol: float = 1e-12

    @property
    def degenerate(self) -> bool:
        return self.m == self.n


def glue_constants(m: int, n: int, tol: float = 1e-12) -> GlueParams:
    """Constants of the gluing diffeomorphism for blocks m != n.

    Factorials enter only through log-Gamma, so large indices are fine.
    """
    m = _check_block(m)
    n = _check_block(n)
    if m == n:
        raise ValueError("glue constants degenerate for m == n")
    k = (2 * m + 1) / (2 * n + 1)
    c = (math.lgamma(2 * n + 2) - math.lgamma(2 * m + 2)) / (2 * n + 1)
    delta = 0.5 * min(1.0, k)
    return GlueParams(m, n, k, c, delta, tol)


def degenerate_params(m: int, tol: float = 1e-12) -> GlueParams:
    """m == n oracle build (phi = identity); for tests and the k=1 pipeline."""
    m = _check_block(m)
    return GlueParams(m, m, 1.0, 0.0, 0.5, tol)


def phi(gp: GlueParams, x) -> float | np.ndarray:
    """Solve g(m, x) = g(n, y) for y; scalar or array."""
    arr = np.asarray(x, dtype=float)
    out = _kernels.phi_values(gp.m, gp.n, gp.k, gp.c,
                              np.atleast_1d(arr).astype(float), gp.tol)
    if np.any(np.isnan(out)):
        bad = np.atleast_1d(arr)[np.isnan(out)]
        raise RootSolveError(f"phi solve failed at x={bad[:5]}")
    if arr.ndim == 0:
        return float(out[0])
    return out.reshape(arr.shape)


def phi_prime(gp: GlueParams, x) -> float | np.ndarray:
    """phi'(x) = (g'/g)(m, x) / (g'/g)(n, phi(x)); strictly positive."""
    arr = np.asarray(x, dtype=float)
    xs = np.atleast_1d(arr).astype(float)
    ys = _kernels.phi_values(gp.m, gp.n, gp.k, gp.c, xs, gp.tol)
    if np.any(np.isnan(ys)):
        raise RootSolveError("phi solve failed inside phi_prime")
    out = np.exp(_kernels.lgpg_real(gp.m, xs) - _kernels.lgpg_real(gp.n, ys))
    if arr.ndim == 0:
        return float(out[0])
    return out.reshape(arr.shape)


@dataclass
class AsymptoticsReport:
    """Least-squares decay rates of the two tails of phi."""

    right_slope: float = math.nan
    right_stderr: float = math.nan
    right_intercept: float = math.nan
    left_slope: float = math.nan
    left_stderr: float = math.nan
    left_intercept: float = math.nan
    n_right: int = 0
    n_left: int = 0
    degenerate: bool = False
    right_residual: float = math.nan
    left_residual: float = math.nan
    samples: dict = field(default_factory=dict)


def _line_fit(t: np.ndarray, v: np.ndarray) -> tuple[float, float, float, float]:
    """Slope, intercept, slope stderr, max residual of v ~ a t + b."""
    a, b = np.polyfit(t, v, 1)
    resid = v - (a * t + b)
    dof = max(len(t) - 2, 1)
    s2 = float(np.sum(resid ** 2)) / dof
    denom = float(np.sum((t - t.mean()) ** 2))
    stderr = math.sqrt(s2 / denom) if denom > 0 else math.inf
    return float(a), float(b), stderr, float(np.max(np.abs(resid)))


def verify_asymptotics(gp: GlueParams,
                       x_grid: np.ndarray | None = None) -> AsymptoticsReport:
    """Fit the tail decay of phi against its two asymptotic models.

    Right tail: slope of log|phi(x) - x| against x (expected <= -1/2).
    Left tail: slope of log|phi(x) - kx - c| against |x| (expected
    <= -delta).  Deviations below NOISE_FLOOR are dropped; fewer than 4
    usable points in a tail raises InsufficientPointsError, except in
    the degenerate m == n build, which reports itself as such.
    """
    if x_grid is None:
        x_grid = np.concatenate([np.arange(-26.0, -7.9, 1.0),
                                 np.arange(8.0, 26.1, 1.0)])
    x_grid = np.asarray(x_grid, dtype=float)
    right_x = x_grid[x_grid > 0]
    left_x = x_grid[x_grid < 0]
    rep = AsymptoticsReport()

    ph_r = phi(gp, right_x)
    dev_r = np.abs(ph_r - right_x)
    keep_r = dev_r > NOISE_FLOOR
    ph_l = phi(gp, left_x)
    dev_l = np.abs(ph_l - gp.k * left_x - gp.c)
    keep_l = dev_l > NOISE_FLOOR
    rep.n_right = int(np.sum(keep_r))
    rep.n_left = int(np.sum(keep_l))
    rep.samples = {"right_x": right_x, "right_dev": dev_r,
                   "left_x": left_x, "left_dev": dev_l}

    if gp.degenerate and rep.n_right < 4 and rep.n_left < 4:
        rep.degenerate = True
        return rep
    if rep.n_right < 4 or rep.n_left < 4:
        raise InsufficientPointsError(
            f"usable tail samples: right {rep.n_right}, left {rep.n_left}")

    a, b, se, res = _line_fit(right_x[keep_r], np.log(dev_r[keep_r]))
    rep.right_slope, rep.right_intercept = a, b
    rep.right_stderr, rep.right_residual = se, res
    a, b, se, res = _line_fit(np.abs(left_x[keep_l]), np.log(dev_l[keep_l]))
    rep.left_slope, rep.left_intercept = a, b
    rep.left_stderr, rep.left_residual = se, res
    return rep
