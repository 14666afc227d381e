"""Desk-scale grid solver for the Beltrami equation d-bar psi = mu d psi.

The classical integral-equation scheme: iterate h <- mu (1 + S h) with
the Beurling transform S, then psi = z + C h with the Cauchy transform
C.  Both transforms act as Fourier multipliers (S-hat = conj(xi)/xi,
C-hat = 1/(pi i xi)) applied on a zero-padded grid of twice the side
length, which pushes the periodization wraparound away from the field.
The multiplier convention is pinned by the mu = 0 (identity) and
constant-mu (affine stretch family) solutions.

Truncating the spiral coefficient field to a window is a modeling
error; everything downstream of a truncated solve is checked as a
trend or with loose tolerances, never exactly.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .gluing import GlueParams
from .spiral import SpiralParams
from .surgery import beltrami_of_U_array, log_area


class BeltramiDivergenceError(RuntimeError):
    pass


@dataclass
class ComplexGridField:
    """Complex samples on a uniform rectangular grid.

    values[iy, ix] is the sample at origin + ix*spacing + 1j*iy*spacing
    (row-major).
    """

    origin: complex
    spacing: float
    nx: int
    ny: int
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (self.ny, self.nx):
            raise ValueError("values must have shape (ny, nx)")

    def points(self) -> np.ndarray:
        ix = np.arange(self.nx)
        iy = np.arange(self.ny)
        X, Y = np.meshgrid(ix, iy)
        return self.origin + self.spacing * (X + 1j * Y)

    @classmethod
    def square(cls, half_width: float, n: int,
               center: complex = 0j) -> "ComplexGridField":
        spacing = 2 * half_width / (n - 1)
        origin = center - half_width - 1j * half_width
        return cls(origin, spacing, n, n, np.zeros((n, n), dtype=complex))

    def to_csv(self, path) -> None:
        """Header row: origin_re, origin_im, spacing, nx, ny; then one
        (re, im) row per node, row-major."""
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow([repr(float(self.origin.real)),
                         repr(float(self.origin.imag)),
                         repr(float(self.spacing)), self.nx, self.ny])
            for v in self.values.ravel():
                wr.writerow([repr(float(v.real)), repr(float(v.imag))])

    @classmethod
    def from_csv(cls, path) -> "ComplexGridField":
        with open(path) as fh:
            rd = csv.reader(fh)
            head = next(rd)
            origin = complex(float(head[0]), float(head[1]))
            spacing = float(head[2])
            nx, ny = int(head[3]), int(head[4])
            data = np.array([complex(float(a), float(b)) for a, b in rd])
        return cls(origin, spacing, nx, ny, data.reshape(ny, nx))

    def to_npz(self, path) -> None:
        np.savez_compressed(path, origin=np.array([self.origin]),
                            spacing=np.array([self.spacing]),
                            nx=np.array([self.nx]), ny=np.array([self.ny]),
                            values=self.values)

    @classmethod
    def from_npz(cls, path) -> "ComplexGridField":
        data = np.load(path)
        return cls(complex(data["origin"][0]), float(data["spacing"][0]),
                   int(data["nx"][0]), int(data["ny"][0]), data["values"])


@dataclass
class QCSolveReport:
    iterations: int = 0
    residual: float = math.nan
    sup_dev: float = math.nan
    deriv_dev: float = math.nan
    angular_measures: list = field(default_factory=list)


def _freq_grid(n: int, spacing: float) -> np.ndarray:
    fr = np.fft.fftfreq(n, d=spacing)
    FX, FY = np.meshgrid(fr, fr)
    return FX + 1j * FY


def _pad(values: np.ndarray) -> tuple[np.ndarray, tuple[slice, slice]]:
    ny, nx = values.shape
    big = np.zeros((2 * ny, 2 * nx), dtype=complex)
    sl = (slice(ny // 2, ny // 2 + ny), slice(nx // 2, nx // 2 + nx))
    big[sl] = values
    return big, sl


def beurling_transform(values: np.ndarray, spacing: float) -> np.ndarray:
    """S h on the grid: multiplier conj(xi)/xi on the 2x padded grid."""
    big, sl = _pad(values)
    f = _freq_grid(big.shape[0], spacing)
    mult = np.zeros_like(f)
    nz = f != 0
    mult[nz] = np.conj(f[nz]) / f[nz]
    out = np.fft.ifft2(np.fft.fft2(big) * mult)
    return out[sl]


def cauchy_transform(values: np.ndarray, spacing: float) -> np.ndarray:
    """C h on the grid (d-bar C h = h): multiplier 1/(pi i xi), padded."""
    big, sl = _pad(values)
    f = _freq_grid(big.shape[0], spacing)
    mult = np.zeros_like(f)
    nz = f != 0
    mult[nz] = 1.0 / (math.pi * 1j * f[nz])
    out = np.fft.ifft2(np.fft.fft2(big) * mult)
    return out[sl]


def _frame_mask(ny: int, nx: int, width: int = 1) -> np.ndarray:
    mask = np.zeros((ny, nx), dtype=bool)
    mask[:width, :] = mask[-width:, :] = True
    mask[:, :width] = mask[:, -width:] = True
    return mask


def solve_beltrami(mu: ComplexGridField, tol: float = 1e-6,
                   max_iter: int = 200) -> tuple[ComplexGridField,
                                                 QCSolveReport]:
    """Solve d-bar psi = mu d psi with psi(z) ~ z at the grid frame.

    Iterates h = mu (1 + S h) on the padded grid (contraction with
    factor ||mu||_inf < 1 since ||S|| = 1), then psi = z + C h with the
    additive constant fixed by zero frame mean.  mu = 0 returns the
    identity exactly.  Raises BeltramiDivergenceError when the residual
    stalls above tolerance.
    """
    sup = float(np.max(np.abs(mu.values)))
    if sup >= 1.0:
        raise ValueError(f"||mu||_inf = {sup:.4f} >= 1: not quasiconformal")
    s = mu.spacing
    mu_big, sl = _pad(mu.values)
    f = _freq_grid(mu_big.shape[0], s)
    s_mult = np.zeros_like(f)
    nz = f != 0
    s_mult[nz] = np.conj(f[nz]) / f[nz]
    c_mult = np.zeros_like(f)
    c_mult[nz] = 1.0 / (math.pi * 1j * f[nz])

    h = mu_big.copy()
    residual = math.inf
    iterations = 0
    if sup == 0.0:
        h[:] = 0
        residual = 0.0
    else:
        prev_residual = math.inf
        stall = 0
        for iterations in range(1, max_iter + 1):
            sh = np.fft.ifft2(np.fft.fft2(h) * s_mult)
            h_new = mu_big * (1.0 + sh)
            residual = float(np.max(np.abs(h_new - h)))
            h = h_new
            if residual < tol:
                break
            if residual >= prev_residual * 0.999:
                stall += 1
                if stall >= 8:
                    raise BeltramiDivergenceError(
                        f"residual stalled at {residual:.3e} "
                        f"(||mu||={sup:.3f}, grid {mu.nx}x{mu.ny})")
            else:
                stall = 0
            prev_residual = residual
        else:
            raise BeltramiDivergenceError(
                f"no convergence below {tol} in {max_iter} iterations "
                f"(residual {residual:.3e}, ||mu||={sup:.3f}, "
                f"grid {mu.nx}x{mu.ny})")

    pts = mu.points()
    frame = _frame_mask(mu.ny, mu.nx)
    if sup > 0:
        ch = np.fft.ifft2(np.fft.fft2(h) * c_mult)[sl]
        # the discrete Cauchy transform drops the zero mode: d-bar(Ch)
        # reproduces h minus its torus mean m0, so the solution needs an
        # explicit m0 conj(z) term to satisfy d-bar psi = h exactly
        m0 = complex(np.mean(h))
        ch = ch + m0 * np.conj(pts)
        ch = ch - np.mean(ch[frame])
    else:
        ch = np.zeros_like(mu.values)
    psi_vals = pts + ch
    psi = ComplexGridField(mu.origin, s, mu.nx, mu.ny, psi_vals)
    with np.errstate(divide="ignore", invalid="ignore"):
        dev = np.abs(psi_vals[frame] / pts[frame] - 1.0)
    report = QCSolveReport(iterations=iterations, residual=residual,
                           sup_dev=float(np.nanmax(dev)))
    return psi, report


def fd_wirtinger(values: np.ndarray, spacing: float, order: int = 2
                 ) -> tuple[np.ndarray, np.ndarray]:
    """Central-difference (d, d-bar) derivatives on the interior
    (2nd order by default, 4th order on request)."""
    dx = np.full_like(values, np.nan)
    dy = np.full_like(values, np.nan)
    if order == 2:
        dx[:, 1:-1] = (values[:, 2:] - values[:, :-2]) / (2 * spacing)
        dy[1:-1, :] = (values[2:, :] - values[:-2, :]) / (2 * spacing)
    elif order == 4:
        dx[:, 2:-2] = (-values[:, 4:] + 8 * values[:, 3:-1] -
                       8 * values[:, 1:-3] + values[:, :-4]) / (12 * spacing)
        dy[2:-2, :] = (-values[4:, :] + 8 * values[3:-1, :] -
                       8 * values[1:-3, :] + values[:-4, :]) / (12 * spacing)
    else:
        raise ValueError("order must be 2 or 4")
    d = 0.5 * (dx - 1j * dy)
    dbar = 0.5 * (dx + 1j * dy)
    return d, dbar


def fd_residual(psi: ComplexGridField, mu: ComplexGridField,
                mask: np.ndarray | None = None, order: int = 2) -> float:
    """max |d-bar psi - mu d psi| by finite differences, over interior
    nodes (optionally restricted by mask, e.g. away from mu jumps)."""
    d, dbar = fd_wirtinger(psi.values, psi.spacing, order=order)
    resid = np.abs(dbar - mu.values * d)
    ok = np.isfinite(resid)
    if mask is not None:
        ok &= mask
    return float(np.max(resid[ok]))


def orientation_fraction(psi: ComplexGridField) -> float:
    """Fraction of interior nodes with positive Jacobian determinant."""
    d, dbar = fd_wirtinger(psi.values, psi.spacing)
    det = np.abs(d) ** 2 - np.abs(dbar) ** 2
    ok = np.isfinite(det)
    return float(np.mean(det[ok] > 0))


def truncate_mu(gp: GlueParams, sp: SpiralParams, half_width: float,
                n: int) -> tuple[ComplexGridField, dict]:
    """Sample the glued map's Beltrami coefficient on a centered square
    window (zero off the spiral support X and outside the window).

    The diagnostics report how much logarithmic area the truncation
    discards relative to a 100x larger reference radius (a report, not
    an assertion: the tail is a modeling error downstream claims must
    tolerate)."""
    if half_width <= 1.0:
        raise ValueError("window must contain the unit disk")
    fld = ComplexGridField.square(half_width, n)
    pts = fld.points()
    fld.values = beltrami_of_U_array(gp, sp, pts)
    inside, _ = log_area(gp, sp, half_width)
    reference, ref_tail = log_area(gp, sp, 100.0 * half_width)
    total = reference + ref_tail
    diag = {
        "support_nodes": int(np.count_nonzero(fld.values)),
        "sup_mu": float(np.max(np.abs(fld.values))),
        "log_area_window": inside,
        "log_area_reference": total,
        "discarded_fraction": (total - inside) / total if total > 0 else 0.0,
    }
    return fld, diag


def psi_interpolator(psi: ComplexGridField, order: int = 3):
    """Bicubic-spline evaluator for a grid field at arbitrary points.

    Returns a callable mapping complex arrays to interpolated values;
    out-of-grid points clamp to the nearest edge (callers keep a margin).
    """
    if order >= 2:
        re = ndimage.spline_filter(psi.values.real, order=order)
        im = ndimage.spline_filter(psi.values.imag, order=order)
    else:
        re = psi.values.real
        im = psi.values.imag

    def ev(z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        col = (z.real - psi.origin.real) / psi.spacing
        row = (z.imag - psi.origin.imag) / psi.spacing
        coords = np.vstack([row.ravel(), col.ravel()])
        vr = ndimage.map_coordinates(re, coords, order=order, prefilter=False,
                                     mode="nearest")
        vi = ndimage.map_coordinates(im, coords, order=order, prefilter=False,
                                     mode="nearest")
        return (vr + 1j * vi).reshape(z.shape)

    return ev


def invert_psi(psi: ComplexGridField, w, tol: float = 1e-10,
               max_iter: int = 60):
    """Solve psi(z) = w pointwise by damped 2x2 Newton on the
    interpolated field (psi is a near-identity homeomorphism, so the
    target itself seeds the iteration)."""
    ev = psi_interpolator(psi)
    dvals, dbvals = fd_wirtinger(psi.values, psi.spacing)
    # fill the frame ring with identity derivatives (mu = 0 there)
    dvals[~np.isfinite(dvals)] = 1.0
    dbvals[~np.isfinite(dbvals)] = 0.0
    ev_d = psi_interpolator(
        ComplexGridField(psi.origin, psi.spacing, psi.nx, psi.ny, dvals), 1)
    ev_db = psi_interpolator(
        ComplexGridField(psi.origin, psi.spacing, psi.nx, psi.ny, dbvals), 1)

    w_arr = np.asarray(w, dtype=complex)
    z = w_arr.copy().astype(complex)
    for _ in range(max_iter):
        fz = ev(z) - w_arr
        err = np.abs(fz)
        if np.max(err) < tol:
            break
        d = ev_d(z)
        db = ev_db(z)
        # df = d * dz + db * conj(dz)  =>  dz from the conjugate-linear solve
        denom = np.abs(d) ** 2 - np.abs(db) ** 2
        denom = np.where(np.abs(denom) < 1e-12, 1.0, denom)
        step = (np.conj(d) * fz - db * np.conj(fz)) / denom
        z = z - step
    return z if np.ndim(w) else complex(z)


def conformal_at_infinity_report(psi: ComplexGridField,
                                 support_mask: np.ndarray | None = None,
                                 exceptional=None,
                                 frame_fractions=(0.5, 0.7, 0.9),
                                 n_theta: int = 720) -> QCSolveReport:
    """Diagnostics for psi(z) ~ z and psi' -> 1 away from the support.

    sup_dev: max |psi(z)/z - 1| over concentric circles at the given
    fractions of the grid half-width.  deriv_dev: max |psi' - 1| over
    interior nodes farther than beta(z) = max(2 spacing, sqrt|z|) from
    the support of mu (the inflated exceptional set).  The angular
    measure of each circle inside the exceptional set is reported
    alongside (it decreases with radius when the support has finite
    logarithmic area)."""
    pts = psi.points()
    center = pts[psi.ny // 2, psi.nx // 2]
    half = 0.5 * min((psi.nx - 1), (psi.ny - 1)) * psi.spacing

    if support_mask is None:
        support_mask = np.zeros(psi.values.shape, dtype=bool)
    if support_mask.any():
        dist_nodes = ndimage.distance_transform_edt(
            ~support_mask) * psi.spacing
    else:
        dist_nodes = np.full(psi.values.shape, np.inf)

    radial = np.abs(pts - center)
    beta = np.maximum(2 * psi.spacing, np.sqrt(radial))
    in_y = dist_nodes <= beta
    if exceptional is not None:
        in_y |= np.asarray(exceptional(pts), dtype=bool)

    sup_dev = 0.0
    measures = []
    for frac in frame_fractions:
        r = frac * half
        ring = np.abs(radial - r) <= psi.spacing
        if not ring.any():
            continue
        rel = np.abs((psi.values[ring] - center) /
                     (pts[ring] - center) - 1.0)
        sup_dev = max(sup_dev, float(np.max(rel)))
        measures.append(float(2 * np.pi * np.mean(in_y[ring])))

    d, _ = fd_wirtinger(psi.values, psi.spacing)
    good = np.isfinite(d) & ~in_y
    deriv_dev = float(np.max(np.abs(d[good] - 1.0))) if good.any() else math.nan
    return QCSolveReport(iterations=0, residual=math.nan, sup_dev=sup_dev,
                         deriv_dev=deriv_dev, angular_measures=measures)
