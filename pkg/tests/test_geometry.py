"""Geometry oracles: closed forms, metric axioms, isometry invariance."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from hypersample import geometry as geo


def test_distance_origin_closed_form():
    # the point at Euclidean radius tanh(s/2) sits at hyperbolic distance s
    for s in (0.25, 1.0, 3.0, 7.0):
        z = math.tanh(s / 2.0)
        assert geo.distance(0.0, z) == pytest.approx(s, abs=1e-13)


def test_distance_matches_arccosh_form():
    rng = np.random.default_rng(7)
    x = geo.random_ball_points(4.0, 64, rng)
    y = geo.random_ball_points(4.0, 64, rng)
    d1 = geo.distance(x, y)
    d2 = np.arccosh(
        1.0 + 2.0 * np.abs(x - y) ** 2 / ((1.0 - np.abs(x) ** 2) * (1.0 - np.abs(y) ** 2))
    )
    assert np.max(np.abs(d1 - d2)) < 1e-10


def test_metric_axioms():
    rng = np.random.default_rng(11)
    x = geo.random_ball_points(3.0, 200, rng)
    y = geo.random_ball_points(3.0, 200, rng)
    z = geo.random_ball_points(3.0, 200, rng)
    dxy = geo.distance(x, y)
    assert np.all(dxy >= 0)
    assert np.max(np.abs(geo.distance(x, x))) == 0.0
    assert np.max(np.abs(dxy - geo.distance(y, x))) < 1e-13
    assert np.all(geo.distance(x, z) <= dxy + geo.distance(y, z) + 1e-12)


def test_sphere_and_ball_closed_forms():
    assert geo.sphere_area(1.0) == pytest.approx(2.0 * math.pi * math.sinh(1.0), rel=1e-14)
    assert geo.ball_volume(1.0) == pytest.approx(2.0 * math.pi * (math.cosh(1.0) - 1.0), rel=1e-14)
    assert geo.ball_volume(0.0) == 0.0


def test_ball_volume_integrates_sphere_area():
    for R in (0.5, 2.0, 5.0):
        val, _ = quad(lambda s: float(geo.sphere_area(s)), 0.0, R)
        assert val == pytest.approx(float(geo.ball_volume(R)), rel=1e-10)


def test_small_radius_euclidean_limit():
    # curvature corrections are O(r^2): B(r) ~ pi r^2, S(r) ~ 2 pi r
    r = 1e-4
    assert geo.ball_volume(r) == pytest.approx(math.pi * r * r, rel=1e-7)
    assert geo.sphere_area(r) == pytest.approx(2.0 * math.pi * r, rel=1e-7)


def test_poisson_kernel_normalization():
    # exp(2 rho A(x, b)) = P(x, b) integrates to 1 in db = dtheta / (2 pi)
    n = 4096
    theta = 2.0 * np.pi * np.arange(n) / n
    for z in (0.0, 0.3 + 0.4j, -0.85j, 0.97):
        p = np.exp(geo.busemann(z, theta))
        assert p.mean() == pytest.approx(1.0, abs=1e-10)


def test_busemann_origin_and_signs():
    theta = np.linspace(0.0, 2.0 * np.pi, 64, endpoint=False)
    assert np.max(np.abs(geo.busemann(0.0, theta))) == 0.0
    # moving straight toward b increases A like +distance
    s = 2.0
    z = math.tanh(s / 2.0)
    assert geo.busemann(z, 0.0) == pytest.approx(s, abs=1e-12)
    assert geo.busemann(z, math.pi) == pytest.approx(-s, abs=1e-12)


def test_busemann_stable_near_alignment():
    # at r = 12 toward b the Poisson kernel is ~e^12; the naive |x-b|^2 form
    # loses most digits, the stable form must not
    s = 12.0
    z = math.tanh(s / 2.0)
    assert geo.busemann(z, 0.0) == pytest.approx(s, rel=1e-12)


def test_mobius_translate_is_isometry():
    rng = np.random.default_rng(3)
    x = geo.random_ball_points(2.5, 128, rng)
    y = geo.random_ball_points(2.5, 128, rng)
    a = 0.37 - 0.52j
    d0 = geo.distance(x, y)
    d1 = geo.distance(geo.mobius_translate(a, x), geo.mobius_translate(a, y))
    assert np.max(np.abs(d0 - d1)) < 1e-12


def test_mobius_translate_moves_origin():
    a = 0.3 + 0.1j
    assert geo.mobius_translate(a, 0.0) == pytest.approx(a)


def test_circle_points_radius_and_spacing():
    c, tau, m = 0.5 + 0.2j, 1.3, 48
    pts = geo.circle_points(c, tau, m)
    d = geo.distance(c, pts)
    assert np.max(np.abs(d - tau)) < 1e-12
    gaps = geo.distance(pts, np.roll(pts, -1))
    assert np.max(np.abs(gaps - gaps[0])) < 1e-12


def test_circle_points_zero_radius():
    pts = geo.circle_points(0.2j, 0.0, 5)
    assert np.all(pts == 0.2j)


def test_point_validation():
    with pytest.raises(ValueError):
        geo.Point(1.0, 0.0)
    with pytest.raises(ValueError):
        geo.Point(0.8, 0.7)
    p = geo.Point(0.6, -0.3)
    assert p.z == complex(0.6, -0.3)
    assert geo.Point.from_complex(0.1 + 0.2j) == geo.Point(0.1, 0.2)


def test_as_complex_coercions():
    pts = [geo.Point(0.1, 0.0), geo.Point(0.0, 0.2)]
    arr = geo.as_complex(pts)
    assert arr.dtype == complex and arr.shape == (2,)
    assert geo.as_complex(geo.Point(0.3, 0.4)) == 0.3 + 0.4j


def test_multiplicity_bound_finite_and_monotone_frame():
    sup = geo.multiplicity_bound()
    # small-r limit is 12^2 * ... = B(3r)/B(r/4) -> 144; growth in r keeps it
    # below the r=1 value; the supremum over (0,1) is attained at r=1
    assert sup == pytest.approx(geo.multiplicity_bound(1.0), rel=1e-3)
    assert geo.multiplicity_bound(1e-6) == pytest.approx(144.0, rel=1e-6)
    assert 144.0 < sup < 300.0


def test_random_ball_points_distribution():
    rng = np.random.default_rng(19)
    R = 2.0
    pts = geo.random_ball_points(R, 20000, rng)
    s = geo.distance(0.0, pts)
    assert np.max(s) <= R + 1e-12
    # fraction inside radius r estimates B(r)/B(R)
    frac = np.mean(s <= 1.0)
    expect = float(geo.ball_volume(1.0) / geo.ball_volume(R))
    assert frac == pytest.approx(expect, abs=0.02)


def test_euclidean_radius_roundtrip():
    tau = 3.7
    assert geo.distance(0.0, geo.euclidean_radius(tau)) == pytest.approx(tau, abs=1e-12)
