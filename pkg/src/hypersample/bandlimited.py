"""Band limited functions: synthesis, Bernstein certificates, density probe.

A function is omega band limited when its spectral coefficients vanish for
lam > omega.  Here that support condition is exact by construction: the
coefficient grid carries a dedicated quadrature panel on [0, omega] and all
rows above the band are identically zero.  Test objects are synthesized in
the spectral domain as smooth bump profiles per boundary mode, so there is
no spectral leakage to quantify.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import IllConditionedWarning
from .geometry import SpaceParams, as_complex, distance
from .spectral import (SpectralCoeffs, SpectralGrid, apply_multiplier, build_grid,
                       default_lam_max, sobolev_multiplier)
from .transforms import PolarGrid, inverse_on_grid, inverse_transform

__all__ = [
    "BandlimitedFunction",
    "synthesize",
    "bernstein_check",
    "converse_bernstein_probe",
    "density_probe",
]


@dataclass(eq=False)
class BandlimitedFunction:
    """Spectral coefficients supported on the band panel [0, omega]."""

    omega: float
    coeffs: SpectralCoeffs
    label: str = ""

    def __post_init__(self):
        grid = self.coeffs.grid
        if grid.n_band == 0 or grid.omega != self.omega:
            raise ValueError("coefficient grid has no matching band panel")
        tail = self.coeffs.values[grid.n_band:]
        if tail.size and np.any(tail != 0):
            raise ValueError("coefficients above the band limit must be exactly zero")

    @property
    def grid(self) -> SpectralGrid:
        return self.coeffs.grid

    def norm(self) -> float:
        return self.coeffs.norm()

    def norm_sq(self) -> float:
        return self.coeffs.norm_sq()

    def evaluate(self, points) -> np.ndarray:
        """Point values by the inversion quadrature."""
        return inverse_transform(self.coeffs, points)

    def on_grid(self, pgrid: PolarGrid) -> np.ndarray:
        return inverse_on_grid(self.coeffs, pgrid)

    def scaled(self, a: complex) -> "BandlimitedFunction":
        return BandlimitedFunction(self.omega, SpectralCoeffs(self.grid, a * self.coeffs.values),
                                   label=self.label)


def _bump_mask(t: np.ndarray) -> np.ndarray:
    """Smooth compactly supported profile on (0, 1), peak value 1 at t = 1/2."""
    out = np.zeros_like(t)
    inside = (t > 0.0) & (t < 1.0)
    ti = t[inside]
    out[inside] = np.exp(4.0 - 1.0 / (ti * (1.0 - ti)))
    return out


def synthesize(space: SpaceParams, omega: float, seed: int = 0, n_modes: int = 3, *,
               grid: SpectralGrid | None = None, lam_max: float | None = None,
               n_lambda: int = 96, n_b: int = 64, n_band: int | None = None,
               width_range: tuple[float, float] = (0.12, 0.3),
               center_range: tuple[float, float] = (0.3, 0.7),
               label: str = "") -> BandlimitedFunction:
    """Deterministic pseudo-random element of the omega band limited class.

    Each boundary mode |m| <= n_modes gets a Gaussian profile in lam (center
    and width drawn from the given ranges, as fractions of omega) multiplied
    by a smooth bump vanishing to all orders at 0 and omega, with a random
    complex amplitude.  Normalized to unit Plancherel norm.
    """
    if omega <= 0:
        raise ValueError("omega must be positive")
    if grid is None:
        grid = build_grid(space, lam_max or default_lam_max(omega, space.rho),
                          n_lambda, n_b, omega=omega, n_band=n_band)
    if grid.omega != omega or grid.n_band == 0:
        raise ValueError("grid band panel does not match omega")
    if not 0 <= n_modes <= grid.n_b // 2:
        raise ValueError("n_modes must lie in [0, n_b/2]")
    rng = np.random.default_rng(seed)
    lam_band = grid.lambda_nodes[:grid.n_band]
    mask = _bump_mask(lam_band / omega)
    values = np.zeros((grid.n_lambda, grid.n_b), dtype=complex)
    for m in range(-n_modes, n_modes + 1):
        center = omega * rng.uniform(*center_range)
        width = omega * rng.uniform(*width_range)
        amp = complex(rng.standard_normal(), rng.standard_normal())
        profile = amp * np.exp(-((lam_band - center) ** 2) / (2.0 * width**2)) * mask
        values[:grid.n_band, m % grid.n_b] += profile
    coeffs = SpectralCoeffs(grid, np.fft.ifft(values, axis=1) * grid.n_b)
    nrm = coeffs.norm()
    if nrm == 0.0:
        raise ValueError("degenerate draw produced the zero function")
    coeffs.values /= nrm
    return BandlimitedFunction(omega, coeffs, label=label or f"synth(omega={omega},seed={seed})")


def bernstein_check(f: BandlimitedFunction, sigma: float) -> dict:
    """Verify ||Delta^sigma f|| <= (omega^2 + rho^2)^sigma ||f||.

    Delta^sigma acts spectrally as the multiplier (lam^2 + rho^2)^sigma.
    """
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    space = SpaceParams(rho=f.grid.rho, plancherel_scale=f.grid.plancherel_scale)
    lhs = apply_multiplier(f.coeffs, sobolev_multiplier(space, sigma)).norm()
    rhs = (f.omega**2 + f.grid.rho**2) ** sigma * f.norm()
    return {
        "sigma": sigma,
        "lhs": lhs,
        "rhs": rhs,
        "ratio": lhs / rhs if rhs else math.inf,
        "pass": lhs <= rhs * (1.0 + 1e-10),
    }


def converse_bernstein_probe(coeffs: SpectralCoeffs, omega: float,
                             sigma_list=(0.5, 1.0, 2.0, 4.0, 8.0)) -> dict:
    """Ratios ||Delta^sigma f|| / ((omega^2+rho^2)^sigma ||f||) along sigma_list.

    Bounded by 1 for genuine omega band limited input; grows without bound
    when the spectrum sticks out beyond omega (the negative certificate).
    """
    rho = coeffs.grid.rho
    space = SpaceParams(rho=rho, plancherel_scale=coeffs.grid.plancherel_scale)
    base = coeffs.norm()
    if base == 0.0:
        return {"sigmas": list(sigma_list), "ratios": [math.nan] * len(sigma_list),
                "applicable": False}
    ratios = []
    for s in sigma_list:
        num = apply_multiplier(coeffs, sobolev_multiplier(space, s)).norm()
        ratios.append(num / ((omega**2 + rho**2) ** s * base))
    return {"sigmas": list(sigma_list), "ratios": ratios, "applicable": True}


def density_probe(space: SpaceParams, omega: float, center, radius: float,
                  target_samples: np.ndarray, pgrid: PolarGrid, *,
                  n_list=(10, 20, 40), seed: int = 0, n_modes: int = 3,
                  n_lambda: int = 32, n_b: int = 16) -> dict:
    """Least-squares distance from target to spans of synthesized band
    limited functions, restricted to the ball B(center, radius).

    The error sequence over nested n is nonincreasing by construction.  The
    probe is empirical evidence of density, not a proof.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    n_list = sorted(n_list)
    n_max = n_list[-1]
    mask = np.asarray(distance(as_complex(center), pgrid.points) <= radius)
    if not np.any(mask):
        raise ValueError("ball contains no quadrature nodes")
    sw = np.sqrt(pgrid.weights2d[mask])
    b = (np.asarray(target_samples)[mask] * sw).ravel()
    cols = np.empty((b.size, n_max), dtype=complex)
    for i in range(n_max):
        g = synthesize(space, omega, seed=seed + i, n_modes=n_modes,
                       n_lambda=n_lambda, n_b=n_b,
                       width_range=(0.05, 0.4), center_range=(0.1, 0.9))
        cols[:, i] = (g.on_grid(pgrid)[mask] * sw).ravel()
    errors, conds = [], []
    b_norm = float(np.linalg.norm(b))
    for n in n_list:
        a = cols[:, :n]
        cond = float(np.linalg.cond(a))
        if cond > 1e12:
            warnings.warn(f"density probe basis condition {cond:.2e} at n={n}",
                          IllConditionedWarning)
        beta = np.linalg.lstsq(a, b, rcond=None)[0]
        resid = b - a @ beta
        errors.append(float(np.linalg.norm(resid)) / b_norm if b_norm else 0.0)
        conds.append(cond)
    return {"n": list(n_list), "errors": errors, "condition": conds}
