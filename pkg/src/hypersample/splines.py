"""Polyharmonic spline interpolation and spline deconvolution.

The order-k spline kernel is the zonal function with spectral density
(lam^2 + rho^2)^(-2k) (times |m|^2 when a deconvolution multiplier is in
play).  Interpolants are finite combinations sum_j beta_j K_2k(d(., x_j));
solving the kernel matrix against Lagrangian data delta_(nu mu) realizes
the minimal - ||Delta^k u|| interpolant on the lattice.

The kernel is tabulated once per order on a radial grid by spectral
quadrature and then evaluated through a cubic spline; the spectral cutoff
is chosen from an analytic tail bound so the truncated mass stays below
tail_tol relative to K(0).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.interpolate import CubicSpline
from scipy.linalg import cho_factor, cho_solve

from .bandlimited import BandlimitedFunction
from .errors import (IllConditionedWarning, MultiplierVanishes,
                     SingularKernel, TailTooLarge)
from .geometry import busemann, distance
from .lattice import Lattice
from .sampling import SampleSet
from .spectral import (Multiplier, SpectralCoeffs, SpectralGrid,
                       plancherel_density)

__all__ = [
    "PolyharmonicKernel",
    "polyharmonic_kernel",
    "SplineSystem",
    "build_splines",
    "SplineInterpolant",
    "spline_interpolate",
    "spline_band_projection",
    "spline_reconstruct_deconvolve",
    "iterated_bernstein_check",
]

_TAIL_TOL = 1e-10
_LAM_CAP = 500.0
_COND_LIMIT = 1e12
_CERT_TOL = 1e-8


@dataclass(eq=False)
class PolyharmonicKernel:
    """Tabulated radial kernel K_2k(t) with its truncation certificate."""

    k: int
    rho: float
    t_max: float
    lam_max: float
    tail_bound: float
    tail_tol: float
    multiplier_label: str
    table_t: np.ndarray
    table_values: np.ndarray
    _interp: CubicSpline = field(repr=False)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0) or np.any(t > self.t_max):
            raise ValueError(f"kernel tabulated on [0, {self.t_max}] only")
        out = self._interp(t)
        return float(out) if out.ndim == 0 else out

    @property
    def at_zero(self) -> float:
        return float(self.table_values[0])


def _panel(a: float, b: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = leggauss(n)
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return mid + half * x, half * w


def _kernel_lambda_grid(lam_max: float) -> tuple[np.ndarray, np.ndarray]:
    """Dense panel near zero (the density peak), geometric panels beyond."""
    lo = min(2.0, lam_max)
    nodes, weights = _panel(0.0, lo, 160)
    a = lo
    while a < lam_max:
        b = min(2.0 * a, lam_max)
        x, w = _panel(a, b, 48)
        nodes = np.concatenate([nodes, x])
        weights = np.concatenate([weights, w])
        a = b
    return nodes, weights


def _multiplier_sq(m: Multiplier | None, lam: np.ndarray) -> np.ndarray:
    if m is None:
        return np.ones_like(lam)
    vals = np.asarray(m.fn(lam))
    if not np.all(np.isfinite(vals)):
        raise ValueError(f"multiplier {m.label} is unbounded on the kernel grid")
    return np.abs(vals) ** 2


def polyharmonic_kernel(space, k: int, *, t_max: float = 3.0,
                        lam_max: float | None = None,
                        tail_tol: float = _TAIL_TOL,
                        multiplier: Multiplier | None = None,
                        n_t: int = 1201,
                        n_b: int | None = None) -> PolyharmonicKernel:
    """Tabulate K_2k(t) = int (lam^2+rho^2)^(-2k) |m|^2 phi_lam(t) density dlam.

    The truncation tail beyond lam_max is bounded analytically by
    sup|m|^2 * scale * lam_max^(2-4k) / (4k-2) (density <= scale * lam and
    phi bounded by one); TailTooLarge fires when that bound exceeds
    tail_tol relative to K(0).  Left to its default, lam_max is grown to
    meet the tolerance, within a hard cap.
    """
    if k < 1 or k != int(k):
        raise ValueError("spline order k must be a positive integer")
    if t_max <= 0 or n_t < 16:
        raise ValueError("bad kernel table parameters")
    k = int(k)
    rho, scale = space.rho, space.plancherel_scale
    rho2 = rho * rho

    # reference value K(0) (phi = 1 there): cheap, no angular quadrature
    ref_nodes, ref_weights = _kernel_lambda_grid(10.0)
    ref_dens = plancherel_density(ref_nodes, scale)
    msq_ref = _multiplier_sq(multiplier, ref_nodes)
    k0_ref = float(np.sum(ref_weights * ref_dens * msq_ref
                          * (ref_nodes ** 2 + rho2) ** (-2 * k)))
    if not k0_ref > 0:
        raise ValueError("kernel density integrates to zero")

    probe = np.array([1.0, 2.0, 4.0, 8.0])
    if multiplier is None:
        m_sup = 1.0
    else:
        m_sup = float(np.max(np.abs(multiplier.fn(probe * max(lam_max or 10.0,
                                                              10.0)))))
        m_sup = max(m_sup, 1.0)

    def tail(lam_cut: float) -> float:
        return m_sup ** 2 * scale * lam_cut ** (2 - 4 * k) / (4 * k - 2)

    if lam_max is None:
        needed = (m_sup ** 2 * scale
                  / ((4 * k - 2) * tail_tol * k0_ref)) ** (1.0 / (4 * k - 2))
        lam_max = max(10.0, 1.1 * needed)
        if lam_max > _LAM_CAP:
            raise TailTooLarge(
                f"order {k} needs lam_max ~ {needed:.3g} for a relative tail "
                f"below {tail_tol:.1e}; pass lam_max explicitly or loosen "
                f"tail_tol")
    lam_max = float(lam_max)
    tail_bound = tail(lam_max)
    if tail_bound > tail_tol * k0_ref:
        raise TailTooLarge(
            f"tail bound {tail_bound:.3e} exceeds {tail_tol:.1e} of "
            f"K(0) ~ {k0_ref:.3e}; increase lam_max")

    nodes, weights = _kernel_lambda_grid(lam_max)
    dens = plancherel_density(nodes, scale)
    msq = _multiplier_sq(multiplier, nodes)
    coef = weights * dens * msq * (nodes ** 2 + rho2) ** (-2 * k)

    if n_b is None:
        n_b = 64 * math.ceil((1.5 * lam_max * t_max + 256.0) / 64.0)
    angles = 2.0 * np.pi * np.arange(n_b) / n_b
    t = np.linspace(0.0, t_max, n_t)
    a = busemann(np.tanh(t / 2)[:, None], angles[None, :])
    values = np.zeros(n_t)
    chunk = max(1, int(2e6 / (n_t * n_b)))
    for start in range(0, nodes.size, chunk):
        lam_c = nodes[start:start + chunk]
        phi = np.exp((1j * lam_c[:, None, None] + rho) * a[None, :, :]) \
            .mean(axis=2).real
        values += coef[start:start + chunk] @ phi
    interp = CubicSpline(t, values, bc_type=((1, 0.0), "not-a-knot"))
    return PolyharmonicKernel(k, rho, t_max, lam_max, tail_bound, tail_tol,
                              multiplier.label if multiplier else "",
                              t, values, interp)


@dataclass(eq=False)
class SplineSystem:
    lattice: Lattice
    k: int
    kernel: PolyharmonicKernel
    kernel_matrix: np.ndarray
    coeffs: np.ndarray               # column nu holds the Lagrangian alphas
    deconv_multiplier: Multiplier | None
    condition: float
    lagrangian_defect: float
    _cho: tuple = field(repr=False)

    def _solve(self, rhs: np.ndarray) -> np.ndarray:
        """Cholesky solve, refined until the residual stops contracting."""
        def real_solve(b):
            x = cho_solve(self._cho, b)
            best = math.inf
            for _ in range(6):
                res = b - self.kernel_matrix @ x
                nrm = float(np.max(np.abs(res)))
                if not nrm < 0.5 * best:
                    break
                best = nrm
                x = x + cho_solve(self._cho, res)
            return x
        if np.iscomplexobj(rhs):
            return real_solve(rhs.real) + 1j * real_solve(rhs.imag)
        return real_solve(rhs)


def build_splines(lat: Lattice, k: int, m: Multiplier | None = None, *,
                  space, t_max: float | None = None,
                  lam_max: float | None = None,
                  tail_tol: float = _TAIL_TOL) -> SplineSystem:
    """Kernel matrix K_2k(d(x_j, x_nu)) and its Lagrangian coefficients.

    Positive definiteness is certified by the Cholesky factorization;
    near-coincident points (or an order too high for double precision)
    surface as SingularKernel.  One step of iterative refinement pushes the
    interpolation residual to roundoff even for stiff systems.
    """
    if len(lat) == 0:
        raise ValueError("empty lattice")
    if t_max is None:
        t_max = 2.0 * lat.domain_radius + 1e-9
    kern = polyharmonic_kernel(space, k, t_max=t_max, lam_max=lam_max,
                               tail_tol=tail_tol, multiplier=m)
    d = distance(lat.points[:, None], lat.points[None, :])
    np.fill_diagonal(d, 0.0)
    kmat = kern(d)
    kmat = 0.5 * (kmat + kmat.T)
    try:
        cho = cho_factor(kmat, lower=True)
    except np.linalg.LinAlgError as exc:
        raise SingularKernel(
            f"order-{k} kernel matrix is not positive definite in double "
            f"precision") from exc
    ev = np.linalg.eigvalsh(kmat)
    condition = float(ev[-1] / ev[0]) if ev[0] > 0 else math.inf
    eye = np.eye(len(lat))
    coeffs = cho_solve(cho, eye)
    defect = math.inf
    for _ in range(6):
        res = eye - kmat @ coeffs
        nrm = float(np.max(np.abs(res)))
        if not nrm < 0.5 * defect:
            break
        defect = nrm
        coeffs = coeffs + cho_solve(cho, res)
    defect = float(np.max(np.abs(kmat @ coeffs - eye)))
    if defect > _CERT_TOL:
        warnings.warn(
            f"Lagrangian defect {defect:.2e} exceeds {_CERT_TOL:.0e} at "
            f"condition {condition:.2e}", IllConditionedWarning)
    return SplineSystem(lat, k, kern, kmat, coeffs, m, condition, defect,
                        cho)


@dataclass(eq=False)
class SplineInterpolant:
    """Finite kernel expansion sum_j beta_j K_2k(d(., x_j))."""

    system: SplineSystem
    beta: np.ndarray

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_1d(np.asarray(points, dtype=complex))
        out = np.empty(pts.shape, dtype=self.beta.dtype)
        flat = pts.ravel()
        res = out.ravel()
        anchors = self.system.lattice.points
        step = max(1, int(4e6 / max(1, anchors.size)))
        for start in range(0, flat.size, step):
            d = distance(flat[start:start + step, None], anchors[None, :])
            res[start:start + step] = self.system.kernel(d) @ self.beta
        if np.isscalar(points) or np.asarray(points).ndim == 0:
            return res[0]
        return out

    __call__ = evaluate


def spline_interpolate(sys: SplineSystem, s: SampleSet) -> SplineInterpolant:
    """Interpolant of the sample values; reproduces them to roundoff."""
    if not np.array_equal(s.lattice.points, sys.lattice.points):
        raise ValueError("sample set and spline system use different lattices")
    return SplineInterpolant(sys, sys._solve(s.values))


def spline_band_projection(interp: SplineInterpolant,
                           grid: SpectralGrid) -> BandlimitedFunction:
    """Band-limited part of the interpolant, deconvolved when applicable.

    On the band panel the expansion has transform
    |m|^2 (lam^2+rho^2)^(-2k) sum_j beta_j e^((-i lam + rho) A(x_j, b));
    dividing by m leaves the conj(m)-filtered coefficients returned here.
    """
    if grid.n_band == 0:
        raise ValueError("grid has no band panel")
    sys = interp.system
    sl = grid.band_slice
    lam = grid.lambda_nodes[sl]
    rho2 = grid.rho ** 2
    fac = (lam ** 2 + rho2) ** (-2 * sys.k)
    m = sys.deconv_multiplier
    if m is not None:
        fac = fac * np.conj(np.asarray(m.fn(lam), dtype=complex))
    a = busemann(sys.lattice.points[:, None], grid.boundary_angles[None, :])
    rows = np.exp((-1j * lam[:, None, None] + grid.rho) * a[None, :, :])
    coef = np.tensordot(interp.beta, np.moveaxis(rows, 1, 0), axes=1)
    values = np.zeros((grid.n_lambda, grid.n_b), dtype=complex)
    values[sl] = fac[:, None] * coef
    return BandlimitedFunction(grid.omega, SpectralCoeffs(grid, values))


def spline_reconstruct_deconvolve(lat: Lattice, k_schedule, s: SampleSet, *,
                                  space, grid: SpectralGrid,
                                  t_max: float | None = None,
                                  lam_max: float | None = None,
                                  tail_tol: float = _TAIL_TOL,
                                  cond_limit: float = _COND_LIMIT) -> dict:
    """Band-limited approximations along an increasing order schedule.

    Each order k yields the spline interpolant of the convolution samples
    with kernel density |m|^2 (lam^2+rho^2)^(-2k), divided by m on the band.
    Escalation stops at the first order whose kernel matrix exceeds
    cond_limit (or loses positive definiteness); the result records where.
    """
    if s.kind == "convolution":
        if s.multiplier is None:
            raise ValueError(
                "convolution sample set carries only a multiplier label; "
                "the multiplier itself is required for deconvolution")
        m = s.multiplier
        band_min = m.band_min_abs(grid)
        if band_min <= 1e-12:
            raise MultiplierVanishes(
                f"multiplier {m.label!r} vanishes on the band")
    else:
        m = None
    k_list, functions, conditions = [], [], []
    aborted_at = None
    for k in k_schedule:
        try:
            sys = build_splines(lat, k, m, space=space, t_max=t_max,
                                lam_max=lam_max, tail_tol=tail_tol)
        except SingularKernel:
            aborted_at = k
            break
        if sys.condition > cond_limit:
            aborted_at = k
            break
        interp = spline_interpolate(sys, s)
        k_list.append(int(k))
        functions.append(spline_band_projection(interp, grid))
        conditions.append(sys.condition)
    return {"k_list": k_list, "functions": functions,
            "conditions": conditions, "aborted_at": aborted_at}


def iterated_bernstein_check(f: BandlimitedFunction, sigma: float,
                             m_list=(1, 2, 4), s_list=(0, 1)) -> dict:
    """Iterated spectral inequality, as pure multiplier arithmetic.

    With a = ||f|| / ||Delta^sigma f|| (the smallest admissible constant),
    checks ||Delta^s f|| <= a^m ||Delta^(m sigma + s) f|| for each (m, s).
    """
    grid = f.coeffs.grid
    rho2 = grid.rho ** 2
    base = grid.lambda_nodes ** 2 + rho2

    def power_norm(p: float) -> float:
        vals = f.coeffs.values * (base ** p)[:, None]
        return SpectralCoeffs(grid, vals).norm()

    n0 = power_norm(0.0)
    ns = power_norm(sigma)
    if ns == 0.0:
        return {"a": math.nan, "sigma": sigma, "rows": [], "all_pass": False}
    a = n0 / ns
    rows = []
    for m in m_list:
        for s in s_list:
            lhs = power_norm(float(s))
            rhs = a ** m * power_norm(m * sigma + s)
            rows.append({"m": m, "s": s, "lhs": lhs, "rhs": rhs,
                         "pass": lhs <= rhs * (1 + 1e-8)})
    return {"a": a, "sigma": sigma, "rows": rows,
            "all_pass": all(r["pass"] for r in rows)}
