import math

import numpy as np
import pytest

from nodal_lab.core import cutoff_chi
from nodal_lab.errors import CapabilityError
from nodal_lab.extremal import (
    EntireE,
    ExtremalConfig,
    ExtremalContext,
    QuadratureSpec,
    build_extremal,
    cauchy_coefficients,
    decay_constant,
    eval_E,
    extremal_area,
    in_half_strip,
    taylor_coefficients,
    transplant,
)
from nodal_lab.metrics import Disc, positivity_area, zero_count


@pytest.fixture(scope="module")
def ctx():
    return ExtremalContext(ExtremalConfig())


@pytest.fixture(scope="module")
def P32(ctx):
    return build_extremal(32, context=ctx)


# -- u and E -----------------------------------------------------------------


def test_integrand_negligible_at_cut(ctx):
    assert ctx.E.tail_ratio < 1e-14


def test_far_field_decay(ctx):
    assert abs(ctx.E.dbar_potential(np.array([100.0 + 0j]))[0]) < 0.05 * ctx.c4.sup_u


@pytest.mark.parametrize("z0", [-0.37 + 1.1j, 1.13 + 2.31j, -0.83 - 2.9j])
def test_dbar_of_u_by_finite_differences(ctx, z0):
    E, h = ctx.E, 1e-4
    u = lambda w: E.dbar_potential(np.array([w]))[0]
    dx = (u(z0 + h) - u(z0 - h)) / (2 * h)
    dy = (u(z0 + 1j * h) - u(z0 - 1j * h)) / (2 * h)
    _, dc = cutoff_chi(E.cutoff, z0)
    target = np.exp(np.exp(z0)) * dc
    assert abs(0.5 * (dx + 1j * dy) - target) < 1e-4 * abs(target)


def test_multipole_matches_direct_sum(ctx):
    direct = EntireE(quad=QuadratureSpec(far_factor=1e9))
    rng = np.random.default_rng(4)
    z = rng.uniform(-4, 7, 300) + 1j * rng.uniform(-6, 6, 300)
    assert np.max(np.abs(direct.dbar_potential(z) - ctx.E.dbar_potential(z))) < 1e-13


def test_polar_rule_matches_tensor_rule_off_panel(ctx):
    # targets near but outside the support, where the tensor rule is still accurate
    tensor = EntireE(quad=QuadratureSpec(near_factor=0.2))
    z = np.array([-1.1 + 0.4j, -1.08 - 1.9j, 2.2 + 4.3j, 0.6 - 4.28j, 1.0 + 2.0j])
    assert np.max(np.abs(tensor.dbar_potential(z) - ctx.E.dbar_potential(z))) < 1e-10


def test_E_examples(ctx):
    c4 = ctx.c4.c4
    assert abs(eval_E(ctx.E, -2.0)) <= c4
    v = eval_E(ctx.E, 1.0).to_complex()
    assert abs(v - math.exp(math.e)) <= c4


def test_E_dichotomy_on_probe_set(ctx):
    rng = np.random.default_rng(2000)
    z = rng.uniform(-6, 8, 6000) + 1j * rng.uniform(-8, 8, 6000)
    off = z[~in_half_strip(z)][:2000]
    assert off.size == 2000
    assert np.max(np.abs(ctx.E(off))) <= ctx.c4.c4
    on = rng.uniform(0, 8, 500) + 1j * rng.uniform(-math.pi / 2, math.pi / 2, 500)
    # on the half strip chi = 1, so E - exp exp = -u exactly
    assert np.max(np.abs(ctx.E.dbar_potential(on))) <= ctx.c4.c4


def test_E_grows_like_double_exponential(ctx):
    x = np.linspace(0, 3, 31)
    logE = np.array([eval_E(ctx.E, xi).log_magnitude for xi in x])
    # |E - exp exp| <= c4 forces |log|E| - e^x| <= -log(1 - c4 exp(-e^x))
    bound = -np.log1p(-ctx.c4.c4 * np.exp(-np.exp(x)))
    assert np.all(np.abs(logE - np.exp(x)) <= bound)
    assert np.abs(logE[-1] - np.exp(3.0)) / np.exp(3.0) < 1e-8


def test_morera_rectangles(ctx):
    g, w = np.polynomial.legendre.leggauss(40)
    rng = np.random.default_rng(7)
    for _ in range(3):
        c = rng.uniform(-1.2, 1.5) + 1j * rng.uniform(-2.5, 2.5)
        a, b = c - 0.3 - 0.2j, c + 0.3 + 0.2j
        corners = [a, complex(b.real, a.imag), b, complex(a.real, b.imag), a]
        total = 0j
        mag = 0.0
        for p, q in zip(corners[:-1], corners[1:]):
            pts = 0.5 * (p + q) + 0.5 * (q - p) * g
            vals = ctx.E(pts)
            total += np.sum(w * vals) * 0.5 * (q - p)
            mag += np.sum(w * np.abs(vals)) * 0.5 * abs(q - p)
        assert abs(total) < 1e-6 * mag


# -- Taylor data ---------------------------------------------------------------


def test_cauchy_pipeline_recovers_factorials():
    data = cauchy_coefficients(lambda z, s: np.exp(z - s), lambda z: float(np.max(z.real)), 0.0, 50,
                               lambda n: float(n))
    got = data.coefficients()
    want = np.array([1 / math.factorial(n) for n in range(51)])
    assert np.max(np.abs(got - want) / want) < 1e-10


def test_a0_vanishes(ctx):
    data = ctx.taylor(64)
    assert data.a0_defect < 1e-10
    assert data.coefficients(4)[0] == 0


def test_decay_constant_stable_under_density(ctx):
    coarse = decay_constant(ctx.taylor(128), 16)
    fine = decay_constant(taylor_coefficients(ctx.E, ctx.R, 128, density=2, c5=ctx.c5), 16)
    assert math.isfinite(coarse)
    assert abs(coarse - fine) < 1e-6 * coarse


def test_capability_cap(ctx):
    with pytest.raises(CapabilityError) as err:
        taylor_coefficients(ctx.E, ctx.R, 2048)
    assert err.value.largest_safe == 1024


def test_zero_count_of_truncated_G():
    ctx3 = ExtremalContext(ExtremalConfig(R=3.0))
    a = ctx3.taylor(32).coefficients(32)
    a = a / np.max(np.abs(a))
    f = lambda z: np.polyval(a[::-1], z)
    roots = np.roots(a[::-1])
    assert np.min(np.abs(np.abs(roots) - 1)) > 1e-6
    assert zero_count(f, 0j, 1.0, 32) == int(np.sum(np.abs(roots) < 1))


# -- P_N -------------------------------------------------------------------------


def test_P_N_basic(P32):
    assert P32(0.0) == 0
    assert P32.degree == 32
    assert P32.truncation_bound <= P32.kappa
    assert P32.conditioning_bound <= P32.kappa / 8


def test_strip_area_bound(P32):
    est = extremal_area(P32, P32.kappa)
    assert est.value / math.pi <= (2 / P32.r_N) * (1 + 0.05)


def test_rescaling_identity(P32):
    t = -0.1
    a = positivity_area(lambda z: np.real(P32(z)) - t, Disc(0j, 1.0), 40_000)
    b = positivity_area(lambda z: np.real(P32.Q(z)) - t, Disc(0j, P32.r_N), 40_000)
    assert abs(a.value - b.value / P32.r_N**2) <= a.abs_error + b.abs_error / P32.r_N**2 + 1e-12


def test_positivity_region_inside_strip(P32):
    rng = np.random.default_rng(11)
    r = P32.r_N * np.sqrt(rng.random(200_000))
    z = r * np.exp(2j * np.pi * rng.random(200_000))
    outside = np.abs(z.imag) >= math.pi / 2
    assert not np.any(np.real(P32.Q(z[outside])) > -P32.kappa)


def test_degree_floor(ctx):
    with pytest.raises(ValueError):
        build_extremal(8, context=ctx)


# -- transplant -------------------------------------------------------------------


@pytest.fixture(scope="module")
def T32(P32):
    return transplant(P32)


def test_transplant_vanishes_at_pole(T32):
    assert T32.chart_field(np.array([0j]))[0] == 0.0
    assert T32.expansion().evaluate(np.array([0.0]), np.array([0.0]))[0] == 0.0


def test_transplant_correction_bound(T32, P32):
    r = np.linspace(0, 1, 60)
    th = np.linspace(0, 2 * np.pi, 120, endpoint=False)
    w = (r[:, None] * np.exp(1j * th[None, :])).ravel()
    sup = np.max(np.abs(T32.correction(w)))
    assert sup <= T32.bound < P32.kappa


def test_transplant_consistency(T32, P32):
    rng = np.random.default_rng(5)
    w = np.sqrt(rng.random(200)) * np.exp(2j * np.pi * rng.random(200))
    theta = np.arcsin(T32.delta * np.abs(w))
    phi = np.angle(w)
    via_basis = T32.expansion().evaluate(theta, phi)
    scale = np.sum(np.abs(P32.coefficients))
    assert np.max(np.abs(via_basis - T32.chart_field(w))) < 1e-10 * scale


def test_transplant_beta_relation(T32, P32):
    j = np.arange(1, T32.N + 1)
    lhs = T32.log_abs_beta[j] + T32.log_A[j] + j * T32.log_delta
    assert np.allclose(lhs, np.log(np.abs(P32.coefficients[j])), rtol=0, atol=1e-9)
