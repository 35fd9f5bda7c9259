"""Measured quantities of fields on discs and circles.

Doubling exponents, boundary sign changes, argument oscillation and winding
numbers, positivity areas, and nodal lengths. Evaluators are vectorised
callables ``f(z: ndarray[complex]) -> ndarray``; real fields may return
complex arrays, in which case the real part is used.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import maximum_filter1d
from skimage.measure import find_contours

from .errors import DegenerateInputError, PreconditionError

log = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
Z99 = 2.5758293035489  # two-sided 99% normal quantile
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class Disc:
    center: complex
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("disc radius must be positive")

    def half(self) -> "Disc":
        return Disc(self.center, self.radius / 2.0)

    @property
    def area(self) -> float:
        return math.pi * self.radius**2


UNIT_DISC = Disc(0j, 1.0)


@dataclass(frozen=True)
class AreaEstimate:
    value: float
    abs_error: float
    method: str
    budget: int

    def agrees_with(self, other: "AreaEstimate", slack: float = 0.0) -> bool:
        return abs(self.value - other.value) <= self.abs_error + other.abs_error + slack


@dataclass(frozen=True)
class ArgProfile:
    theta: np.ndarray
    phase: np.ndarray  # continuous lift, closes on theta[0] + 2 pi

    @property
    def winding(self) -> int:
        return int(round((self.phase[-1] - self.phase[0]) / TWO_PI))


def _real(v):
    return np.real(v) if np.iscomplexobj(v) else np.asarray(v, dtype=float)


def _circle(center, r, theta):
    return center + r * np.exp(1j * theta)


def _golden_minimize(g, a, b, iters=60):
    """Vectorised golden-section minimisation of ``g`` on the intervals ``[a, b]``."""
    a, b = np.array(a, float), np.array(b, float)
    for _ in range(iters):
        c = b - GOLDEN * (b - a)
        d = a + GOLDEN * (b - a)
        left = g(c) < g(d)
        b = np.where(left, d, b)
        a = np.where(left, a, c)
    x = 0.5 * (a + b)
    return x, g(x)


# --------------------------------------------------------------------------
# sign changes
# --------------------------------------------------------------------------


def _sample_count(hint_degree: int) -> int:
    return 16 * max(int(hint_degree), 8)


def sign_change_angles(f, center, r, hint_degree, tol=1e-10):
    """Angles of the sign changes of ``f`` on the circle, refined by bisection."""
    m = _sample_count(hint_degree)
    step = TWO_PI / m
    offset = 0.0
    for attempt in range(8):
        theta = offset + step * np.arange(m)
        v = _real(f(_circle(center, r, theta)))
        if np.all(v != 0):
            break
        offset += step * (0.318309886 + 0.1 * attempt)
    else:
        raise PreconditionError("field vanishes at every resampling of the circle")
    s = np.sign(v)
    nxt = np.roll(np.arange(m), -1)
    flips = np.flatnonzero(s != s[nxt])

    lo = theta[flips]
    hi = lo + step
    s_lo = s[flips]
    brackets = [(lo, hi, s_lo)]

    # hidden pairs: a local minimum of |f| with no flip around it may dip through zero
    absv = np.abs(v)
    prv = np.roll(np.arange(m), 1)
    cand = np.flatnonzero((absv <= absv[prv]) & (absv <= absv[nxt]) & (s == s[prv]) & (s == s[nxt]))
    extra = []
    if cand.size:
        sk = s[cand]
        a = theta[cand] - step
        b = theta[cand] + step

        def signed(t, sk=sk):
            return sk * _real(f(_circle(center, r, t)))

        tmin, gmin = _golden_minimize(signed, a, b)
        dips = gmin < 0
        for k in np.flatnonzero(dips):
            extra.append((a[k], tmin[k], b[k], sk[k]))
    if extra:
        a_, t_, b_, s_ = (np.array(x) for x in zip(*extra))
        brackets.append((a_, t_, s_))
        brackets.append((t_, b_, -s_))

    angles = []
    for lo, hi, s_lo in brackets:
        lo, hi = lo.copy(), hi.copy()
        while lo.size and np.max(hi - lo) > tol:
            mid = 0.5 * (lo + hi)
            vm = _real(f(_circle(center, r, mid)))
            same = np.sign(vm) == s_lo
            lo = np.where(same, mid, lo)
            hi = np.where(same, hi, mid)
        angles.append(0.5 * (lo + hi))
    out = np.sort(np.mod(np.concatenate(angles) if angles else np.zeros(0), TWO_PI))
    if out.size > 1:
        gaps = np.diff(np.concatenate([out, [out[0] + TWO_PI]]))
        if np.any(gaps < 1e-9):
            log.warning("near-tangential zero pair on circle r=%g (gap %.2e)", r, gaps.min())
    return out


def sign_changes_on_circle(f, center=0j, r=1.0, hint_degree=8) -> int:
    """Number of sign alternations of a real field along the circle (always even)."""
    return int(sign_change_angles(f, center, r, hint_degree).size)


def nodal_intersections(f, x, r, hint_degree=8) -> int:
    """Intersections of the nodal line with the circle of radius r about x."""
    return sign_changes_on_circle(f, x, r, hint_degree)


# --------------------------------------------------------------------------
# maxima and doubling
# --------------------------------------------------------------------------


def max_on_circle(f, center=0j, r=1.0, samples=4096) -> float:
    """``max |f|`` on the circle: dense sampling then golden-section polish of the top peaks."""
    if not r > 0:
        raise ValueError("radius must be positive")
    theta = TWO_PI * np.arange(samples) / samples
    vals = np.abs(f(_circle(center, r, theta)))
    best = float(np.max(vals))
    top = np.argsort(vals)[-8:]
    step = TWO_PI / samples

    def neg_abs(t):
        return -np.abs(f(_circle(center, r, t)))

    _, g = _golden_minimize(neg_abs, theta[top] - step, theta[top] + step, iters=32)
    return max(best, float(np.max(-g)))


def max_on_disc(f, center=0j, r=1.0, resolution=(512, 1024)) -> float:
    """Grid maximum of ``|f|`` over the closed disc (polar grid, boundary included)."""
    n_r, n_t = resolution
    rho = r * np.arange(1, n_r + 1) / n_r
    theta = TWO_PI * np.arange(n_t) / n_t
    best = abs(complex(np.atleast_1d(f(np.array([center])))[0]))
    chunk = max(1, 2_000_000 // n_t)
    for i in range(0, n_r, chunk):
        pts = center + rho[i:i + chunk, None] * np.exp(1j * theta)[None, :]
        best = max(best, float(np.max(np.abs(f(pts.ravel())))))
    return max(best, max_on_circle(f, center, r))


def doubling_exponent(f, D: Disc = UNIT_DISC, boundary_only=True, resolution=(512, 1024)) -> float:
    """``log(max_D |f| / max_{D/2} |f|)``.

    With ``boundary_only`` the maxima are taken on the boundary circles, which
    is exact for harmonic and analytic inputs by the maximum principle.
    """
    if boundary_only:
        big = max_on_circle(f, D.center, D.radius)
        small = max_on_circle(f, D.center, D.radius / 2)
    else:
        big = max_on_disc(f, D.center, D.radius, resolution)
        small = max_on_disc(f, D.center, D.radius / 2, resolution)
    if small < 1e-300:
        raise DegenerateInputError("field vanishes on the half disc")
    return math.log(big / small)


def doubling_sup(f, centers, radii, boundary_only=True, resolution=(128, 256)) -> float:
    """Largest doubling exponent over the sampled disc family (a lower bound for the sup)."""
    best = -math.inf
    for c in np.atleast_1d(centers):
        for rad in np.atleast_1d(radii):
            best = max(best, doubling_exponent(f, Disc(complex(c), float(rad)), boundary_only, resolution))
    return best


# --------------------------------------------------------------------------
# argument
# --------------------------------------------------------------------------


def arg_profile(f, center=0j, r=1.0, hint_degree=8, max_samples=1 << 22) -> ArgProfile:
    """Continuous lift of ``arg f`` along the circle, resampled until steps are below pi/2."""
    m = _sample_count(hint_degree)
    while True:
        theta = TWO_PI * np.arange(m + 1) / m
        v = np.asarray(f(_circle(center, r, theta[:-1])), dtype=complex)
        absv = np.abs(v)
        bad = absv <= 1e-12 * absv.max() if absv.max() > 0 else np.ones_like(absv, bool)
        if np.any(bad):
            k = int(np.flatnonzero(bad)[0])
            raise PreconditionError(f"f is (numerically) zero on the circle near angle {theta[k]:.6g}")
        vv = np.append(v, v[0])
        steps = np.angle(vv[1:] / vv[:-1])
        if np.max(np.abs(steps)) < math.pi / 2 or m >= max_samples:
            break
        m *= 2
    phase = np.concatenate([[np.angle(v[0])], np.angle(v[0]) + np.cumsum(steps)])
    return ArgProfile(theta, phase)


def zero_count(f, center=0j, r=1.0, hint_degree=8) -> int:
    """Zeros inside the circle (with multiplicity) by the argument principle."""
    return arg_profile(f, center, r, hint_degree).winding


def arg_oscillation(f, center=0j, r=1.0, hint_degree=8) -> float:
    """Maximal increment of ``arg f`` over counterclockwise arcs, the full circle included."""
    prof = arg_profile(f, center, r, hint_degree)
    m = prof.theta.size - 1
    th, ph = prof.theta[:-1], prof.phase[:-1]
    total = prof.phase[-1] - prof.phase[0]
    ext = np.concatenate([ph, ph + total, [ph[0] + 2 * total]])
    win_max = maximum_filter1d(ext, size=m + 1, origin=-((m + 1) // 2), mode="nearest")[:m]
    gains = win_max - ph
    i = int(np.argmax(gains))
    omega = float(gains[i])
    window = ext[i:i + m + 1]
    j = i + int(np.argmax(window))
    if j - i >= m - 1 or j == i:
        return max(omega, float(total))

    step = TWO_PI / m
    t_i, t_j = th[i], th[j % m] + (TWO_PI if j >= m else 0.0)
    base_i = np.asarray(f(np.array([_circle(center, r, t_i)])), complex)[0]
    base_j = np.asarray(f(np.array([_circle(center, r, t_j)])), complex)[0]

    def lift(t, base, base_phase):
        return base_phase + np.angle(np.asarray(f(_circle(center, r, t)), complex) / base)

    ts, gs = _golden_minimize(lambda t: lift(t, base_i, ph[i]), [t_i - step], [t_i + step])
    te, ge = _golden_minimize(lambda t: -lift(t, base_j, ext[j]), [t_j - step], [t_j + step])
    if te[0] - ts[0] <= TWO_PI:
        omega = max(omega, float(-ge[0] - gs[0]))
    return max(omega, float(total))


# --------------------------------------------------------------------------
# areas
# --------------------------------------------------------------------------


def _polar_points(region: Disc, s, theta):
    return region.center + region.radius * np.sqrt(s) * np.exp(1j * theta)


def positivity_area(f, region: Disc = UNIT_DISC, budget: int = 10_000, method="grid-refined",
                    seed=None, depth=6, weight=None) -> AreaEstimate:
    """Estimate ``Area({f > 0} ∩ region)``.

    ``grid-refined`` works on an equal-area polar grid (cells uniform in r^2 and
    angle), classifies each cell by its corners and centre, and splits mixed
    cells 2x2 up to ``depth`` times. Unresolved cells at the last level count
    by their positive-sample fraction, and half their area enters the error.
    ``monte-carlo`` samples uniformly and reports a 99% half-width.

    ``weight`` (optional, vectorised on points) turns the result into a
    weighted area ``∫ w 1{f>0}``, used for spherical areas in a chart.
    """
    if budget < 10_000:
        raise ValueError("area budget must be at least 1e4")
    if method == "monte-carlo":
        return _area_monte_carlo(f, region, budget, seed, weight)
    if method != "grid-refined":
        raise ValueError(f"unknown area method {method!r}")
    return _area_grid(f, region, budget, depth, weight)


def _area_monte_carlo(f, region, budget, seed, weight):
    rng = np.random.default_rng(seed)
    total, sq = 0.0, 0.0
    done = 0
    chunk = 1 << 18
    while done < budget:
        n = min(chunk, budget - done)
        pts = _polar_points(region, rng.random(n), TWO_PI * rng.random(n))
        ind = (_real(f(pts)) > 0).astype(float)
        if weight is not None:
            ind = ind * weight(pts)
        total += ind.sum()
        sq += (ind * ind).sum()
        done += n
    mean = total / budget
    var = max(sq / budget - mean * mean, 0.0)
    area = region.area
    return AreaEstimate(area * mean, Z99 * area * math.sqrt(var / budget), "monte-carlo", budget)


def _area_grid(f, region, budget, depth, weight):
    n_s = max(4, int(math.ceil(math.sqrt(budget / 4.0))))
    n_t = 4 * n_s
    cell_area = region.area / (n_s * n_t)  # in (s, theta) cells: area = R^2 ds dtheta / 2

    s_edges = np.arange(n_s + 1) / n_s
    t_edges = TWO_PI * np.arange(n_t + 1) / n_t
    S, T = np.meshgrid(s_edges, t_edges[:-1], indexing="ij")
    corner_v = _real(f(_polar_points(region, S, T))) > 0
    corner_v = np.concatenate([corner_v, corner_v[:, :1]], axis=1)
    sc = 0.5 * (s_edges[:-1] + s_edges[1:])
    tc = 0.5 * (t_edges[:-1] + t_edges[1:])
    SC, TC = np.meshgrid(sc, tc, indexing="ij")
    center_pts = _polar_points(region, SC, TC)
    center_v = _real(f(center_pts)) > 0

    c00, c10 = corner_v[:-1, :-1], corner_v[1:, :-1]
    c01, c11 = corner_v[:-1, 1:], corner_v[1:, 1:]
    n_pos = c00.astype(int) + c10 + c01 + c11 + center_v
    w = weight(center_pts) if weight is not None else np.ones_like(SC)
    pure_pos = n_pos == 5
    mixed = (n_pos > 0) & (n_pos < 5)
    value = float(np.sum(w[pure_pos]) * cell_area)

    # mixed cells: (s0, t0, ds, dt)
    s0, t0 = S[:-1, :][mixed], T[:-1, :][mixed]
    ds, dt = 1.0 / n_s, TWO_PI / n_t
    area = cell_area
    err = 0.0
    for level in range(1, depth + 1):
        if s0.size == 0:
            break
        ds, dt, area = ds / 2, dt / 2, area / 4
        # children origins
        cs = np.concatenate([s0, s0 + ds, s0, s0 + ds])
        ct = np.concatenate([t0, t0, t0 + dt, t0 + dt])
        # 3x3 lattice per child: corners + centre
        offs_s = np.array([0, 1, 0, 1, 0.5]) * ds
        offs_t = np.array([0, 0, 1, 1, 0.5]) * dt
        ps = cs[:, None] + offs_s[None, :]
        pt = ct[:, None] + offs_t[None, :]
        pts = _polar_points(region, ps, pt)
        pos = _real(f(pts)) > 0
        npos = pos.sum(axis=1)
        wc = weight(pts[:, 4]) if weight is not None else np.ones(cs.size)
        value += float(np.sum(wc[npos == 5]) * area)
        still = (npos > 0) & (npos < 5)
        if level == depth:
            value += float(np.sum(wc[still] * npos[still] / 5.0) * area)
            err += float(np.sum(wc[still]) * area * 0.5)
        s0, t0 = cs[still], ct[still]
    return AreaEstimate(value, err, "grid-refined", budget)


def region_area(region: Disc = UNIT_DISC, weight=None, budget=40_000) -> float:
    """Area of the region, or its weighted area when ``weight`` is given."""
    if weight is None:
        return region.area
    return positivity_area(lambda z: np.ones(np.shape(z)), region, budget, weight=weight).value


# --------------------------------------------------------------------------
# nodal length
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class PlaneGrid:
    """Uniform grid over the square bounding a disc; lengths are clipped to the disc."""

    disc: Disc
    n: int = 512

    def axes(self):
        c, r = self.disc.center, self.disc.radius
        xs = c.real + np.linspace(-r, r, self.n)
        ys = c.imag + np.linspace(-r, r, self.n)
        return xs, ys

    def sample(self, f):
        xs, ys = self.axes()
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        return _real(f(X + 1j * Y))


@dataclass(frozen=True)
class SphereGrid:
    """Colatitude/longitude grid with cell-centred colatitudes (poles excluded)."""

    n_theta: int = 512
    n_phi: int = 1024

    def axes(self):
        theta = math.pi * (np.arange(self.n_theta) + 0.5) / self.n_theta
        phi = TWO_PI * np.arange(self.n_phi) / self.n_phi
        return theta, phi


def nodal_length(values, grid) -> float:
    """Length of the marching-squares zero contour of gridded values.

    On a PlaneGrid only segments with midpoint inside the disc count. On a
    SphereGrid segment lengths use the round metric at segment midpoints and
    the longitude seam is closed periodically.
    """
    values = np.asarray(values, dtype=float)
    if isinstance(grid, SphereGrid):
        theta, phi = grid.axes()
        wrapped = np.concatenate([values, values[:, :1]], axis=1)
        phi_ext = np.append(phi, TWO_PI)
        total = 0.0
        for c in find_contours(wrapped, 0.0):
            th = np.interp(c[:, 0], np.arange(theta.size), theta)
            ph = np.interp(c[:, 1], np.arange(phi_ext.size), phi_ext)
            dth, dph = np.diff(th), np.diff(ph)
            mid = 0.5 * (th[1:] + th[:-1])
            total += float(np.sum(np.sqrt(dth**2 + (np.sin(mid) * dph) ** 2)))
        return total
    xs, ys = grid.axes()
    total = 0.0
    c0, rad = grid.disc.center, grid.disc.radius
    for c in find_contours(values, 0.0):
        x = np.interp(c[:, 0], np.arange(xs.size), xs)
        y = np.interp(c[:, 1], np.arange(ys.size), ys)
        mx, my = 0.5 * (x[1:] + x[:-1]), 0.5 * (y[1:] + y[:-1])
        inside = np.abs(mx + 1j * my - c0) <= rad
        total += float(np.sum(np.hypot(np.diff(x), np.diff(y))[inside]))
    return total


# --------------------------------------------------------------------------
# corpus helpers
# --------------------------------------------------------------------------


def random_harmonic_polynomial(rng, max_degree=30):
    """Random harmonic polynomial vanishing at 0 with iid Gaussian trig coefficients."""
    from .core import HarmonicPolynomial

    d = int(rng.integers(1, max_degree + 1))
    p = rng.normal(size=d)
    q = rng.normal(size=d)
    return HarmonicPolynomial.from_trig(p, q)
