import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nodal_lab.core import HarmonicPolynomial
from nodal_lab.errors import DegenerateInputError, PreconditionError
from nodal_lab.metrics import (
    Disc,
    PlaneGrid,
    arg_oscillation,
    doubling_exponent,
    doubling_sup,
    max_on_circle,
    nodal_intersections,
    nodal_length,
    positivity_area,
    random_harmonic_polynomial,
    sign_changes_on_circle,
    zero_count,
)


def re_power(n):
    return lambda z: np.real(np.asarray(z) ** n)


def one(z):
    return np.ones(np.shape(z))


def dense_sign_count(f, center, r, m=1_000_000):
    theta = 2 * np.pi * (np.arange(m) + 0.37) / m
    s = np.sign(f(center + r * np.exp(1j * theta)))
    return int(np.count_nonzero(s != np.roll(s, -1)))


# -- sign changes ----------------------------------------------------------------


def test_sign_change_examples():
    assert sign_changes_on_circle(re_power(3), 0j, 1.0, 3) == 6
    assert sign_changes_on_circle(re_power(1), 0j, 0.5, 1) == 2


def test_sign_changes_exact_zero_at_sample():
    # Re z vanishes exactly at theta = pi/2, which is a sample angle
    assert sign_changes_on_circle(lambda z: np.real(z), 0j, 1.0, 1) == 2


def test_sign_changes_against_dense_scan():
    rng = np.random.default_rng(12)
    u = HarmonicPolynomial.from_trig(rng.normal(size=12), rng.normal(size=12))
    for r in (0.4, 0.8, 1.0):
        assert sign_changes_on_circle(u, 0j, r, 12) == dense_sign_count(u, 0j, r)


def test_hidden_pair_is_found():
    # cos(2t) - 0.999 dips below zero in two narrow windows, each shorter than the sample step
    f = lambda z: np.real(z**2) / np.abs(z) ** 2 * 0 + np.cos(40 * np.angle(z)) - 0.9999
    coarse = sign_changes_on_circle(f, 0j, 1.0, 1)
    assert coarse == dense_sign_count(f, 0j, 1.0) == 80


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.2, 1.5))
def test_nu_is_even(seed, r):
    u = random_harmonic_polynomial(np.random.default_rng(seed), 20)
    assert sign_changes_on_circle(u, 0j, r, u.degree) % 2 == 0


# -- maxima / doubling -------------------------------------------------------------


def test_max_on_circle_examples():
    assert max_on_circle(re_power(4), 0j, 0.7) == pytest.approx(0.7**4, rel=1e-8)
    assert max_on_circle(one, 0j, 2.0) == 1.0
    f = lambda z: np.real(z + z**2)
    theta = 2 * np.pi * np.arange(1_000_000) / 1_000_000
    dense = np.max(np.abs(f(np.exp(1j * theta))))
    assert max_on_circle(f) == pytest.approx(2.0, rel=1e-8)
    assert abs(dense - 2.0) < 1e-10


def test_max_polish_off_grid():
    f = lambda z: np.real(np.exp(-1j * 0.123456789) * z) ** 2 + 0.0
    assert max_on_circle(f, 0j, 1.0, samples=64) == pytest.approx(1.0, rel=1e-8)


def test_doubling_examples():
    D = Disc(0j, 1.0)
    for n in (1, 3, 7):
        assert doubling_exponent(re_power(n), D) == pytest.approx(n * math.log(2), rel=1e-8)
    assert doubling_exponent(one, D) == 0.0
    assert doubling_exponent(lambda z: np.real(z + z**2), D) == pytest.approx(math.log(8 / 3), rel=1e-8)


def test_doubling_grid_matches_boundary_for_harmonic():
    f = lambda z: np.real(z + z**2)
    b = doubling_exponent(f, Disc(0j, 1.0), boundary_only=False, resolution=(64, 128))
    assert b == pytest.approx(math.log(8 / 3), rel=1e-8)


def test_doubling_degenerate():
    with pytest.raises(DegenerateInputError):
        doubling_exponent(lambda z: np.zeros(np.shape(z)), Disc(0j, 1.0))


def test_doubling_sup():
    assert doubling_sup(re_power(5), [0j, 0.2], [0.5, 1.0]) >= 5 * math.log(2) - 1e-9
    assert doubling_sup(one, [0j, 0.3j], [0.25, 0.5]) == 0.0


def test_half_disc():
    D = Disc(1 + 1j, 3.0)
    assert D.half() == Disc(1 + 1j, 1.5)
    with pytest.raises(ValueError):
        Disc(0j, 0.0)


# -- argument --------------------------------------------------------------------


def test_arg_oscillation_examples():
    for n in (1, 2, 5):
        assert arg_oscillation(lambda z, n=n: z**n, 0j, 1.0, n) == pytest.approx(2 * math.pi * n, rel=1e-12)
    assert arg_oscillation(lambda z: z**2, 0j, 3.7, 2) == pytest.approx(4 * math.pi, rel=1e-12)


def test_arg_oscillation_z_plus_two_dense_oracle():
    f = lambda z: z + 2
    theta = 2 * np.pi * np.arange(1_000_000) / 1_000_000
    ph = np.angle(f(np.exp(1j * theta)))
    dense = ph.max() - ph.min()
    ours = arg_oscillation(f, 0j, 1.0, 1)
    assert ours == pytest.approx(math.pi / 3, abs=1e-9)
    assert abs(ours - dense) < 1e-8


def test_arg_oscillation_zero_on_circle():
    with pytest.raises(PreconditionError, match="angle"):
        arg_oscillation(lambda z: z - 1, 0j, 1.0, 1)


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 6), st.integers(0, 1000))
def test_omega_at_least_winding(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=3) + 1j * rng.normal(size=3)
    a *= 0.4 / np.sum(np.abs(a))
    g = lambda z: 1 + a[0] * z + a[1] * z**2 + a[2] * z**3  # zero-free on the closed disc
    f = lambda z: z**n * g(z)
    assert arg_oscillation(f, 0j, 1.0, n + 3) >= 2 * math.pi * n - 1e-9
    assert zero_count(f, 0j, 1.0, n + 3) == n


def test_zero_count_examples():
    assert zero_count(lambda z: z**5) == 5
    assert zero_count(lambda z: (z - 0.3) * (z - 0.9) * (z + 2), 0j, 1.0, 3) == 2
    with pytest.raises(PreconditionError):
        zero_count(lambda z: z - 1j)


# -- areas -----------------------------------------------------------------------


@pytest.mark.parametrize("n", [1, 2])
def test_area_examples(n):
    est = positivity_area(re_power(n), Disc(0j, 1.0), 10_000)
    assert abs(est.value - math.pi / 2) <= max(est.abs_error, 1e-6)
    assert est.method == "grid-refined"


def test_area_budget_floor():
    with pytest.raises(ValueError):
        positivity_area(re_power(1), Disc(0j, 1.0), 100)


def test_area_methods_agree():
    rng = np.random.default_rng(3)
    u = HarmonicPolynomial.from_trig(rng.normal(size=9), rng.normal(size=9))
    g = positivity_area(u, Disc(0j, 1.0), 40_000)
    mc = positivity_area(u, Disc(0j, 1.0), 200_000, method="monte-carlo", seed=99)
    assert g.agrees_with(mc)


def test_area_error_shrinks_with_budget():
    u = lambda z: np.real(z**3 - 0.3 * z)
    errs = [positivity_area(u, Disc(0j, 1.0), b, depth=2).abs_error for b in (10_000, 40_000, 160_000)]
    assert errs[0] > errs[1] > errs[2]


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000))
def test_complementary_areas_sum(seed):
    u = random_harmonic_polynomial(np.random.default_rng(seed), 15)
    D = Disc(0.1 + 0.2j, 0.8)
    a = positivity_area(u, D, 10_000)
    b = positivity_area(lambda z: -u(z), D, 10_000)
    assert abs(a.value + b.value - D.area) <= a.abs_error + b.abs_error + 1e-12


# -- nodal length / intersections ------------------------------------------------


def test_nodal_length_plane():
    grid = PlaneGrid(Disc(0j, 1.0), 801)
    assert nodal_length(grid.sample(re_power(1)), grid) == pytest.approx(2.0, rel=0.01)
    assert nodal_length(grid.sample(re_power(2)), grid) == pytest.approx(4.0, rel=0.01)


def test_nodal_intersections():
    assert nodal_intersections(one, 0j, 0.5) == 0
    assert nodal_intersections(re_power(1), 0j, 0.9) == 2
