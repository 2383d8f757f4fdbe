"""Spherical-average tests: two-path symbol agreement, contraction,
near-identity bounds, and the end-to-end averaged-sampling loop."""

import numpy as np
import pytest

from hypersample.bandlimited import synthesize
from hypersample.geometry import SpaceParams
from hypersample.lattice import build_lattice
from hypersample.sampling import (build_frame, convolution_samples,
                                  point_samples, reconstruct)
from hypersample.spectral import SpectralCoeffs, apply_multiplier, build_grid
from hypersample.sphavg import (AverageSpec, average_multiplier,
                                contraction_check, near_identity_check,
                                spherical_average_direct,
                                theorem73_experiment)
from hypersample.transforms import build_polar_grid, calibrate_plancherel

pytestmark = pytest.mark.filterwarnings(
    "ignore::hypersample.errors.IllConditionedWarning")

OMEGA = 2.0


@pytest.fixture(scope="module")
def space():
    return SpaceParams().with_scale(calibrate_plancherel().scale)


@pytest.fixture(scope="module")
def grid(space):
    return build_grid(space, lam_max=8.0, n_lambda=96, n_b=64, omega=OMEGA)


@pytest.fixture(scope="module")
def f(space, grid):
    return synthesize(space, OMEGA, seed=0, grid=grid)


def test_spec_validation():
    with pytest.raises(ValueError):
        AverageSpec(tau=-0.1)
    with pytest.raises(ValueError):
        AverageSpec(tau=0.1, n=-1)
    with pytest.raises(ValueError):
        AverageSpec(tau=0.1, m_circle=8)


def test_admissibility_threshold():
    # (omega^2 + rho^2)^(-(n+1)/2) at omega = 2 is 0.485 for n = 0
    assert AverageSpec(tau=0.3).admissible(2.0)
    assert not AverageSpec(tau=0.5).admissible(2.0)
    # and the threshold shrinks with each extra Laplacian power
    assert not AverageSpec(tau=0.3, n=1).admissible(2.0)
    assert AverageSpec(tau=0.2, n=1).admissible(2.0)


def test_identity_bypass(space, grid):
    m = average_multiplier(space, AverageSpec(tau=0.0, n=0))
    assert np.all(m.values_on(grid) == 1.0)


def test_two_path_agreement(space, grid, f):
    # the circle quadrature never sees the symbol; agreement on random
    # centers, radii and Laplacian powers certifies phi_lam(tau) end to end
    rng = np.random.default_rng(42)
    rho2 = space.rho**2
    base = grid.lambda_nodes**2 + rho2
    for _ in range(10):
        y = 0.6 * np.sqrt(rng.random()) * np.exp(2j * np.pi * rng.random())
        tau = 0.05 + 0.35 * rng.random()
        n = int(rng.integers(0, 2))
        spec = AverageSpec(tau=tau, n=n)
        g = f if n == 0 else type(f)(
            f.omega, SpectralCoeffs(grid, f.coeffs.values * base[:, None]))
        direct = spherical_average_direct(g, y, spec)
        m = average_multiplier(space, spec)
        mf = type(f)(f.omega, apply_multiplier(f.coeffs, m))
        sym = complex(mf.evaluate(np.array([y]))[0])
        assert abs(direct - sym) <= 1e-6 * max(abs(sym), 1e-3)


def test_zero_radius_returns_point_value(space, f):
    y = 0.3 - 0.2j
    spec = AverageSpec(tau=0.0, m_circle=32)
    assert spherical_average_direct(f, y, spec) == complex(
        f.evaluate(np.array([y]))[0])


def test_circle_quadrature_doubling(f):
    y = 0.25 + 0.4j
    a = spherical_average_direct(f, y, AverageSpec(tau=0.3, m_circle=64))
    b = spherical_average_direct(f, y, AverageSpec(tau=0.3, m_circle=128))
    assert abs(a - b) <= 1e-10 * max(abs(a), 1e-6)


def test_contraction_and_monotone_decay(f):
    ratios = []
    for tau in (0.1, 0.5, 1.0):
        rep = contraction_check(f, AverageSpec(tau=tau))
        assert rep["passed"]
        ratios.append(rep["ratio"])
    assert ratios[0] > ratios[1] > ratios[2]


def test_contraction_equality_at_zero(f):
    rep = contraction_check(f, AverageSpec(tau=0.0))
    assert rep["ratio"] == pytest.approx(1.0, abs=1e-13)


def test_contraction_rejects_composed_powers(f):
    with pytest.raises(ValueError):
        contraction_check(f, AverageSpec(tau=0.1, n=1))


def test_low_frequency_spectrum_contracts_less(space, grid):
    f_low = synthesize(space, OMEGA, seed=5, grid=grid,
                       center_range=(0.05, 0.15), width_range=(0.02, 0.05))
    f_broad = synthesize(space, OMEGA, seed=5, grid=grid,
                         center_range=(0.7, 0.9), width_range=(0.02, 0.05))
    spec = AverageSpec(tau=0.5)
    assert contraction_check(f_low, spec)["ratio"] \
        > contraction_check(f_broad, spec)["ratio"]


def test_near_identity_bound_on_band(space, grid):
    for n in (0, 1, 2):
        for tau in (0.05, 0.2):
            rep = near_identity_check(space, grid, AverageSpec(tau=tau, n=n))
            assert rep["passed"], (n, tau)


def test_near_identity_zero_tau(space, grid):
    rep = near_identity_check(space, grid, AverageSpec(tau=0.0))
    assert np.max(rep["lhs"]) == 0.0


def test_experiment_point_sampling_reduction(space, grid):
    # tau = 0, n = 0 must reproduce the plain point-sampling pipeline
    rep = theorem73_experiment(OMEGA, 0.4, AverageSpec(tau=0.0), seed=0,
                               space=space, grid=grid, k_schedule=())
    f = synthesize(space, OMEGA, seed=0, grid=grid)
    lat = build_lattice(0.4, 1.4, seed=0)
    frame = build_frame(lat, OMEGA, grid=grid)
    rec = reconstruct(frame, point_samples(f, lat))
    pgrid = build_polar_grid(1.4, 160, 96)
    fv = f.evaluate(pgrid.points)
    err = pgrid.norm(rec.evaluate(pgrid.points) - fv) / pgrid.norm(fv)
    assert rep["frame_error"] == pytest.approx(err, abs=1e-10)
    assert rep["admissible"]


def test_experiment_overlapping_spheres(space, grid):
    # spheres of radius 0.3 around centers 0.2 apart overlap heavily, yet
    # the averaged samples still determine the function on the band
    rep = theorem73_experiment(OMEGA, 0.2, AverageSpec(tau=0.3), seed=0,
                               space=space, grid=grid)
    assert rep["admissible"]
    assert rep["tau"] > rep["r"]
    assert rep["frame_error"] < 1e-4
    # the deconvolving-spline schedule hits its conditioning guard at this
    # lattice density and must say so rather than return garbage
    assert rep["spline_aborted_at"] == 2
    assert rep["spline_errors"] == []


def test_experiment_derivative_sampling_pipeline(space, grid):
    # averages of -Delta f: the strong reweighting restricts the retained
    # span, so the loop is closed on the pipeline's own band projection
    spec = AverageSpec(tau=0.2, n=1)
    f = synthesize(space, OMEGA, seed=0, grid=grid)
    lat = build_lattice(0.2, 1.4, seed=0)
    m = average_multiplier(space, spec)
    frame = build_frame(lat, OMEGA, m, grid=grid)
    f0 = reconstruct(frame, convolution_samples(f, lat, m))
    rec = reconstruct(frame, convolution_samples(f0, lat, m))
    pgrid = build_polar_grid(1.4, 160, 96)
    v0 = f0.evaluate(pgrid.points)
    err = pgrid.norm(rec.evaluate(pgrid.points) - v0) / pgrid.norm(v0)
    assert err < 1e-5


def test_experiment_inadmissible_is_informative(space, grid):
    rep = theorem73_experiment(OMEGA, 0.4, AverageSpec(tau=0.5), seed=0,
                               space=space, grid=grid, k_schedule=())
    assert not rep["admissible"]
    assert np.isfinite(rep["frame_error"])


def test_experiment_deterministic(space, grid):
    a = theorem73_experiment(OMEGA, 0.4, AverageSpec(tau=0.1), seed=3,
                             space=space, grid=grid, k_schedule=())
    b = theorem73_experiment(OMEGA, 0.4, AverageSpec(tau=0.1), seed=3,
                             space=space, grid=grid, k_schedule=())
    assert a["frame_error"] == b["frame_error"]
    assert a["frame_bounds"] == b["frame_bounds"]
