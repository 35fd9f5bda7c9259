import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import sph_harm_y

from nodal_lab.errors import DomainError
from nodal_lab.metrics import SphereGrid, nodal_intersections, nodal_length
from nodal_lab.sphere import (
    GeodesicDisc,
    SphericalHarmonicExpansion,
    doubling_statistics,
    eval_basis,
    laplace_beltrami_residual,
    nodal_length_vs_B1,
    random_eigenfunction,
    sectoral,
    sphere_point,
    sphere_positivity_area,
    uniform_sphere_points,
)

NORTH = np.array([0.0, 0.0, 1.0])


def test_basis_examples():
    for N in (1, 5, 12):
        for j in (1, -1, N, -N):
            assert eval_basis(N, j, NORTH) == 0
    p = sphere_point(math.pi / 2, 0.7)
    assert abs(eval_basis(1, 1, p) - np.exp(0.7j)) < 1e-15
    with pytest.raises(DomainError):
        eval_basis(3, 4, NORTH)


def test_sectoral_homogeneity():
    # |e_8| at chart radius r is A_8 r^8
    r1, r2 = 0.1, 0.3
    v1 = abs(eval_basis(8, 8, np.array([r1, 0.0, math.sqrt(1 - r1**2)])))
    v2 = abs(eval_basis(8, 8, np.array([0.0, r2, math.sqrt(1 - r2**2)])))
    assert v2 / v1 == pytest.approx((r2 / r1) ** 8, rel=1e-12)


def test_basis_matches_scipy_normalised_harmonics():
    rng = np.random.default_rng(0)
    p = uniform_sphere_points(40, rng)
    theta = np.arccos(p[:, 2])
    phi = np.arctan2(p[:, 1], p[:, 0])
    for N, j in [(6, 2), (10, 7), (20, 20)]:
        norm = math.sqrt(4 * math.pi / (2 * N + 1) * math.factorial(N + j) / math.factorial(N - j))
        ref = (-1) ** j * sph_harm_y(N, j, theta, phi) * norm
        assert np.max(np.abs(eval_basis(N, j, p) - ref)) < 1e-11 * np.max(np.abs(ref))


def test_expansion_vanishes_at_pole():
    for seed in range(3):
        f = random_eigenfunction(15, seed)
        assert abs(f.expansion.evaluate(0.0, 0.3)) <= 1e-12
        assert abs(f.evaluate_xyz(NORTH[None, :])[0]) <= 1e-12 * np.sum(np.abs(f.gamma))


def test_two_evaluation_paths_agree():
    f = random_eigenfunction(10, 3)
    p = uniform_sphere_points(80, np.random.default_rng(1))
    a, b = f.evaluate_xyz(p), f.expansion.evaluate_xyz(p)
    assert np.max(np.abs(a - b)) < 1e-12 * np.max(np.abs(a))


def test_grid_matches_pointwise():
    f = random_eigenfunction(9, 5).expansion
    g = SphereGrid(16, 32)
    vals, s = f.on_grid(g)
    th, ph = g.axes()
    T, P = np.meshgrid(th, ph, indexing="ij")
    assert np.allclose(vals, f.evaluate(T, P, s), atol=1e-12 * np.max(np.abs(vals)))


def test_eigenvalue_field():
    assert random_eigenfunction(7, 0).expansion.eigenvalue == 56


# -- residual ------------------------------------------------------------------------


def _residual(exp, n_theta):
    g = SphereGrid(n_theta, 2 * n_theta)
    v, _ = exp.on_grid(g)
    return laplace_beltrami_residual(v, g, exp.eigenvalue)


def test_residual_N1_and_order():
    e = SphericalHarmonicExpansion.from_coefficients(1, np.array([0, 0, 1.0]), "legendre")
    r1 = _residual(e, 512)
    r2 = _residual(e, 1024)
    assert r1 < 1e-3
    assert 4 * 0.7 <= r1 / r2 <= 4 * 1.3


def test_residual_zero_field():
    g = SphereGrid(32, 64)
    assert laplace_beltrami_residual(np.zeros((32, 64)), g, 6.0) == 0.0


def test_residual_random_order():
    e = random_eigenfunction(6, 2).expansion
    r1, r2 = _residual(e, 256), _residual(e, 512)
    assert 4 * 0.7 <= r1 / r2 <= 4 * 1.3


# -- random eigenfunctions -----------------------------------------------------------


def test_random_determinism():
    a, b, c = random_eigenfunction(12, 3), random_eigenfunction(12, 3), random_eigenfunction(12, 4)
    assert np.array_equal(a.gamma, b.gamma)
    assert not np.array_equal(a.gamma, c.gamma)


def test_random_variance():
    g = np.concatenate([np.delete(random_eigenfunction(5, s).gamma, 5) for s in range(1000)])
    assert np.mean(np.abs(g) ** 2) == pytest.approx(1.0, rel=0.1)


def test_l2_roundtrip():
    f = random_eigenfunction(8, 9)
    assert np.allclose(f.expansion.l2_coefficients(), f.gamma, rtol=1e-12, atol=1e-14)


# -- geometry / statistics ------------------------------------------------------------


def test_geodesic_disc():
    d = GeodesicDisc(np.array([0.0, 1.0, 0.0]), 0.2)
    pts = d.exp_map(np.array([0.2, 0.1j, -0.05 - 0.05j]))
    assert np.allclose(np.linalg.norm(pts, axis=1), 1.0, atol=1e-14)
    dist = np.arccos(np.clip(pts @ d.center, -1, 1))
    assert np.allclose(dist, [0.2, 0.1, math.hypot(0.05, 0.05)], atol=1e-12)
    with pytest.raises(DomainError):
        GeodesicDisc(np.array([0.0, 0.0, 2.0]), 0.1)


def test_sectoral_nodal_length():
    g = SphereGrid(512, 1024)
    v, _ = sectoral(8).on_grid(g)
    assert nodal_length(v, g) == pytest.approx(16 * math.pi, rel=0.02)


def test_rotation_invariance():
    f = random_eigenfunction(10, 1).expansion
    g = SphereGrid(256, 512)
    a, _ = f.on_grid(g)
    b, _ = f.rotate_z(0.37).on_grid(g)
    assert nodal_length(b, g) == pytest.approx(nodal_length(a, g), rel=0.01)
    assert sphere_positivity_area(b, g) == pytest.approx(sphere_positivity_area(a, g), rel=0.01)


@settings(max_examples=10, deadline=None)
@given(st.integers(1, 20), st.integers(0, 1000))
def test_sphere_areas_sum(N, seed):
    g = SphereGrid(128, 256)
    v, _ = random_eigenfunction(N, seed).expansion.on_grid(g)
    total = sphere_positivity_area(v, g) + sphere_positivity_area(v, g, -1)
    assert total == pytest.approx(4 * math.pi, abs=1e-9)


def test_doubling_statistics_properties():
    f = random_eigenfunction(10, 2)
    s1 = doubling_statistics(f.evaluate_xyz, f.eigenvalue, 1.0, 12, 0)
    s10 = doubling_statistics(lambda p: 10 * f.evaluate_xyz(p), f.eigenvalue, 1.0, 12, 0)
    assert np.allclose(s1.samples, s10.samples, rtol=1e-12, atol=1e-12)
    assert s1.B1 <= s1.B_inf


def test_sectoral_intersections_dense_scan():
    N = 12
    e = sectoral(N)
    disc = GeodesicDisc(np.array([1.0, 0.0, 0.0]), 0.3)
    s = e.natural_log_scale()
    f = e.chart_field(disc, s)
    count = nodal_intersections(f, 0j, 0.3, hint_degree=N)
    theta = 2 * np.pi * (np.arange(200_000) + 0.5) / 200_000
    v = np.sign(f(0.3 * np.exp(1j * theta)))
    dense = int(np.count_nonzero(v != np.roll(v, 1)))
    assert count == dense and count > 0 and count % 2 == 0


def test_length_vs_B1_single_basis_element():
    out = nodal_length_vs_B1(sectoral(6), grid=SphereGrid(128, 256), sample_count=8)
    assert out.length > 0 and math.isfinite(out.B1) and out.B1 > 0


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 200), st.integers(0, 10_000))
def test_legendre_orders_match_scipy(N, seed):
    from scipy.special import sph_harm_y

    from nodal_lab.sphere import normalized_legendre_orders

    th = np.random.default_rng(seed).uniform(0, np.pi, 64)
    th[:2] = 0.0, np.pi
    m = np.arange(N + 1)
    ref = np.real(sph_harm_y(N, m[:, None], th[None, :], np.zeros((1, th.size))))
    got = normalized_legendre_orders(N, th)
    # both sides run O(N) recurrence steps; rounding grows like N^2 eps over a log-exp floor
    assert np.max(np.abs(got - ref)) <= (16 + 2 * N * N) * np.finfo(float).eps * max(1.0, np.max(np.abs(ref)))
