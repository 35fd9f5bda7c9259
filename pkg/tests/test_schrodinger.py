import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import beta, j0

from nodal_lab.errors import DegenerateInputError, DivergenceError, PreconditionError
from nodal_lab.schrodinger import (
    PolarGrid,
    SchrodingerConfig,
    beltrami_field,
    calibrate,
    calibrate_three_circles,
    constant_potential,
    divergence_residual,
    elliptic_sandwich_check,
    frequency_J,
    frequency_profile,
    gaussian_bump,
    green_potential,
    log_convexity_check,
    make_potential,
    manufactured_field,
    positive_solution,
    potential_from_csv,
    sandwich_constants,
    seeded_case,
    solve_dirichlet,
    three_circles_check,
    toy_ode_convexity,
    trig_polynomial,
    write_potential_csv,
)

GRID = PolarGrid()
RADII = 0.5 * 2.0 ** -np.arange(7)[::-1]


def fd_laplacian(f, z, h=1e-3):
    return (f(z + h) + f(z - h) + f(z + 1j * h) + f(z - 1j * h) - 4 * f(z)) / h**2


def interior_points(n, seed, radius=0.85):
    rng = np.random.default_rng(seed)
    return radius * np.sqrt(rng.random(n)) * np.exp(2j * np.pi * rng.random(n))


# -- Green potential -----------------------------------------------------------


def test_green_examples():
    r = GRID.rho[:, None]
    F = green_potential(lambda z: np.ones(z.shape), GRID)
    assert np.max(np.abs(F.values - (1 - r**2) / 4)) < 1e-5
    assert np.all(green_potential(lambda z: np.zeros(z.shape), GRID).values == 0)
    F2 = green_potential(lambda z: np.abs(z) ** 2, GRID)
    assert np.max(np.abs(F2.values - (1 - r**4) / 16)) < 1e-5


def test_green_radial_ode_oracle():
    # psi'' + psi'/rho for the closed form, by finite differences
    rho = np.linspace(0.1, 0.9, 9)
    h = 1e-4
    psi = lambda r: (1 - r**4) / 16
    lap = (psi(rho + h) - 2 * psi(rho) + psi(rho - h)) / h**2 + (psi(rho + h) - psi(rho - h)) / (2 * h * rho)
    assert np.max(np.abs(lap + rho**2)) < 1e-6


def test_green_discrete_residual():
    g = lambda z: np.cos(3 * z.real) * np.exp(z.imag) + np.real(z**5)
    F = green_potential(g, GRID)
    gv = GRID.sample(g)
    assert np.nanmax(np.abs(F.laplacian() + gv.values)) < 1e-4 * gv.sup_norm
    assert np.max(np.abs(F.values[-1])) < 1e-14
    z = interior_points(40, 1)
    assert np.max(np.abs(fd_laplacian(F, z) + g(z))) < 1e-4 * gv.sup_norm


# -- potentials ------------------------------------------------------------------


def test_registry_and_scaling():
    q = make_potential("trig-polynomial", seed=4, amplitude=0.07)
    assert q.sup_norm == pytest.approx(0.07)
    z = interior_points(2000, 2, 1.0)
    assert np.max(np.abs(q(z))) <= 0.07 * (1 + 1e-9)
    assert q.radial_derivative_bound >= q.sup_norm
    h = q.scaled(0.5)
    assert h.sup_norm == pytest.approx(0.035) and np.allclose(h(z), 0.5 * q(z))
    assert gaussian_bump(0.04).sup_norm == pytest.approx(0.04, rel=1e-9)
    assert constant_potential(0.03).radial_derivative_bound == 0.03
    with pytest.raises(ValueError):
        make_potential("nope")


def test_csv_roundtrip(tmp_path):
    q = trig_polynomial(1, 0.05)
    path = tmp_path / "q.csv"
    write_potential_csv(path, q, 81, 160)
    p = potential_from_csv(path)
    z = interior_points(200, 3, 0.95)
    assert np.max(np.abs(p(z) - q(z))) < 2e-3 * q.sup_norm
    assert p.sup_norm == pytest.approx(q.sup_norm, rel=0.02)


# -- positive solution ---------------------------------------------------------------


def test_phi_trivial():
    s = positive_solution(constant_potential(0.0))
    assert np.all(s.phi.values == 1.0)


def test_phi_bessel_profile():
    s = positive_solution(constant_potential(0.05))
    want = j0(math.sqrt(0.05) * GRID.rho)[:, None]
    assert np.max(np.abs(s.phi.values - want)) < 1e-4


def test_phi_residual_fd_oracle():
    q = trig_polynomial(11, 0.08)
    s = positive_solution(q)
    z = interior_points(60, 4, 0.95)
    phi = s.phi
    assert np.max(np.abs(fd_laplacian(phi, z) + q(z) * phi(z))) / phi.sup_norm < 1e-3
    assert s.residual_norm < 1e-3


def test_phi_invariants():
    cal = calibrate()
    for seed in range(4):
        q = trig_polynomial(seed, 0.09)
        s = positive_solution(q)
        assert np.all(s.phi.values > 0)
        assert np.max(s.phi.values) == 1.0
        assert s.c0_measured * q.sup_norm < 0.5
        ratios = np.array(s.norms[1:]) / np.array(s.norms[:-1])
        assert np.all(ratios[:-1] <= s.c0_measured * q.sup_norm * (1 + 1e-12))
        assert cal.c0 * q.sup_norm < 0.5


def test_phi_preconditions():
    with pytest.raises(PreconditionError):
        positive_solution(constant_potential(0.1))
    with pytest.raises(DivergenceError):
        positive_solution(constant_potential(0.05), SchrodingerConfig(max_iter=2))


# -- Beltrami --------------------------------------------------------------------------


def test_beltrami_trivial():
    s = positive_solution(constant_potential(0.0))
    F = manufactured_field(s.phi, [0, 1, 0.3j])
    b = beltrami_field(F, s)
    assert np.nanmax(np.abs(b.mu)) == 0 and b.K == 1.0


def test_beltrami_modulus_identity():
    cfg = SchrodingerConfig(n_rho=100, n_theta=128)
    q = trig_polynomial(2, 0.06)
    s = positive_solution(q, cfg)
    F = solve_dirichlet(q, lambda t: np.cos(t) + 0.4 * np.sin(3 * t) + 0.2, cfg)
    b = beltrami_field(F, s)
    ok = ~b.excluded
    assert np.count_nonzero(ok) >= 10_000
    p2 = s.phi.values[ok] ** 2
    assert np.max(np.abs(np.abs(b.mu[ok]) - (1 - p2) / (1 + p2))) < 1e-12
    assert np.all(np.abs(b.mu[ok]) < 1)


def test_beltrami_K_bound_constant_q():
    s = positive_solution(constant_potential(0.05))
    b = beltrami_field(manufactured_field(s.phi, [0, 1]), s)
    c2 = (b.K - 1) / 0.05
    # K - 1 ~ 2 sup|mu| ~ 1 - J0(sqrt(0.05))^2 = 0.025
    assert c2 == pytest.approx(0.508, abs=0.01)


def test_beltrami_degenerate():
    s = positive_solution(constant_potential(0.02))
    with pytest.raises(DegenerateInputError):
        beltrami_field(s.phi * 3.0, s)


def test_mu_linear_in_q():
    q0 = trig_polynomial(8, 0.99)
    t = np.linspace(0.01, 0.1, 10)
    sup = []
    for ti in t:
        q = q0.scaled(ti)
        s = positive_solution(q)
        F = solve_dirichlet(q, lambda th: np.cos(th) + 0.5 * np.sin(2 * th))
        sup.append(beltrami_field(F, s).sup_abs)
    coef = np.polyfit(t, sup, 1)
    resid = np.array(sup) - np.polyval(coef, t)
    r2 = 1 - np.sum(resid**2) / np.sum((sup - np.mean(sup)) ** 2)
    assert r2 > 0.99


def test_divergence_form_identity():
    q = trig_polynomial(5, 0.07)
    s = positive_solution(q)
    F = solve_dirichlet(q, lambda th: np.sin(th) - 0.3 * np.cos(4 * th))
    assert divergence_residual(F, s.phi) < 1e-6
    # a field that does not solve the equation is visibly off
    assert divergence_residual(manufactured_field(s.phi, [0, 1]), s.phi) > 1e-3


# -- frequency function -------------------------------------------------------------------


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 8), st.floats(0.01, 0.5))
def test_J_beta_oracle(n, r):
    f = lambda z: np.real(z**n)
    circle = 2 * math.pi if n == 0 else math.pi  # integral of (Re z^n)^2 over the unit circle
    want = circle * r ** (2 * n + 1) * beta(n + 1, 0.5) / 2
    assert frequency_J(f, None, r) == pytest.approx(want, rel=1e-12)


def test_J_limits_and_monotone():
    case = seeded_case(1)
    assert frequency_J(case.F, case.q, 1e-8) < 1e-6
    vals = [frequency_J(case.F, case.q, r) for r in np.linspace(0.02, 0.5, 12)]
    assert np.all(np.diff(vals) > 0)
    with pytest.raises(PreconditionError):
        frequency_J(case.F, case.q, 0.6)


def test_log_convexity_examples():
    for n in (1, 2, 4):
        prof = frequency_profile(lambda z, n=n: np.real(z**n), None, RADII)
        slopes = np.diff(np.log(prof.values)) / np.diff(np.log(RADII))
        assert np.allclose(slopes, 2 * n + 1, atol=1e-10)
        assert log_convexity_check(prof).violation < 1e-9
    rep = log_convexity_check(frequency_profile(lambda z: np.real(z + z**3), None, RADII))
    assert rep.ok


def test_log_convexity_on_solutions():
    for seed in range(4):
        case = seeded_case(seed)
        assert log_convexity_check(frequency_profile(case.F, case.q, RADII)).ok


def test_log_convexity_preconditions():
    prof = frequency_profile(lambda z: np.real(z), None, [0.1, 0.2, 0.4])
    with pytest.raises(PreconditionError):
        log_convexity_check(prof)
    prof = frequency_profile(lambda z: np.real(z), None, [0.01, 0.1, 0.2, 0.3, 0.4])
    with pytest.raises(PreconditionError):
        log_convexity_check(prof)


# -- three circles / sandwich --------------------------------------------------------------


def test_three_circles_examples():
    for n in (1, 3):
        tc = three_circles_check(lambda z, n=n: np.real(z**n), constant_potential(0.0), 1 / 16, 1 / 8)
        assert tc.lhs == pytest.approx(2**n, rel=1e-10)
        assert tc.rhs_core == pytest.approx(8**n, rel=1e-10)
        assert tc.complies(1.0, 1.0)
    tc = three_circles_check(lambda z: np.ones(z.shape), constant_potential(0.0), 0.05, 0.1)
    assert tc.lhs == tc.rhs_core == 1.0
    with pytest.raises(PreconditionError):
        three_circles_check(lambda z: np.real(z), None, 0.1, 0.2)
    with pytest.raises(PreconditionError):
        three_circles_check(lambda z: np.real(z), None, 0.1, 0.05)


def test_three_circles_frozen_constants_small_corpus():
    def cases(seeds, tag):
        out = []
        for s in seeds:
            c = seeded_case(s, tag=tag)
            out.append(three_circles_check(c.F, c.q, 1 / 32, 1 / 16))
        return out

    consts = calibrate_three_circles(cases(range(6), tag=1))
    assert all(c.complies(consts.c1, consts.c2) for c in cases(range(6), tag=2))


def test_sandwich_ordering_after_calibration():
    q = constant_potential(0.02)
    F = solve_dirichlet(q, np.cos)
    rows = [elliptic_sandwich_check(F, q, r) for r in (1 / 16, 1 / 8, 1 / 4)]
    assert all(math.isfinite(x.lower_core) and math.isfinite(x.upper_core) for x in rows)
    c3, c4 = sandwich_constants(rows)
    assert all(c3 * x.lower_core <= x.M * (1 + 1e-12) and x.M <= c4 * x.upper_core * (1 + 1e-12) for x in rows)
    band = [x.M / math.sqrt(frequency_J(F, q, x.r) / x.r) for x in rows]
    assert max(band) / min(band) < 1.5


def test_sandwich_zero_q_has_no_upper_side():
    s = elliptic_sandwich_check(lambda z: np.real(z), constant_potential(0.0), 0.25)
    assert s.upper_core == math.inf


# -- ODE skeleton ------------------------------------------------------------------------


def test_ode_constant_scalar():
    assert toy_ode_convexity([[1.0]], [[0.0]], 5.0) < 1e-12


def test_ode_exponential_skeleton_two_steps():
    L = lambda t: np.array([[math.exp(2 * t)]])
    a = toy_ode_convexity([[0.0]], [[0.0]], 6.0, steps=2000, L=L)
    b = toy_ode_convexity([[0.0]], [[0.0]], 6.0, steps=4000, L=L)
    assert a <= 1e-8 and b <= 1e-8


def test_ode_random_psd_pairs():
    rng = np.random.default_rng(20)
    for _ in range(5):
        A, B = rng.normal(size=(2, 8, 8))
        assert toy_ode_convexity(A @ A.T / 8, B @ B.T / 8, 3.0, steps=2000) <= 1e-7


def test_ode_step_refinement():
    rng = np.random.default_rng(3)
    A, B = rng.normal(size=(2, 4, 4))
    coarse = toy_ode_convexity(A @ A.T, B @ B.T, 2.0, steps=500)
    fine = toy_ode_convexity(A @ A.T, B @ B.T, 2.0, steps=1000)
    assert fine <= coarse / 4 * 1.5 + 1e-13


def test_ode_huge_growth_is_tracked_in_log_space():
    assert toy_ode_convexity([[1e4]], [[0.0]], 10.0, steps=20_000) < 1e-9


def test_ode_rejects_indefinite():
    with pytest.raises(PreconditionError):
        toy_ode_convexity([[1.0, 0.0], [0.0, -1.0]], np.eye(2), 1.0)
