"""Degree-N spherical harmonics over the basis e_j = L_N^{(j)}(x3) (x1 + i x2)^j.

Expansions store coefficients c_j against the pole-normalised basis
G_j(x3) (x1 + i x2)^j (G_j = L_N^{(j)} / L_N^{(j)}(1), conjugate powers for
j < 0) in log-magnitude/phase form, so transplanted harmonics whose
coefficients span hundreds of orders of magnitude evaluate without overflow.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.special import gammaln

from .core import TWO_PI, gegenbauer_normalized, log_legendre_derivative_at_one
from .errors import DomainError
from .metrics import Disc, SphereGrid, doubling_exponent, nodal_length

FOUR_PI = 4.0 * math.pi


def log_basis_norm(N: int, j: int) -> float:
    """log of the L2(S^2) norm of e_j."""
    j = abs(j)
    return 0.5 * (math.log(FOUR_PI) + gammaln(N + j + 1) - gammaln(N - j + 1) - math.log(2 * N + 1))


def eval_basis(N: int, j: int, point) -> np.ndarray:
    """e_j at unit vectors ``point`` (shape (..., 3)); formula holds on the whole sphere."""
    if abs(j) > N or j == 0 and N == 0:
        raise DomainError(f"basis index {j} outside 1..{N}")
    p = np.asarray(point, dtype=float)
    x3 = p[..., 2]
    z = p[..., 0] + 1j * p[..., 1]
    if j < 0:
        z = np.conj(z)
    k = abs(j)
    A = math.exp(log_legendre_derivative_at_one(N, k))
    return A * gegenbauer_normalized(N - k, k + 0.5, x3) * z**k


def sphere_point(theta, phi) -> np.ndarray:
    theta, phi = np.broadcast_arrays(np.asarray(theta, float), np.asarray(phi, float))
    s = np.sin(theta)
    return np.stack([s * np.cos(phi), s * np.sin(phi), np.cos(theta)], axis=-1)


@dataclass(frozen=True)
class GeodesicDisc:
    center: np.ndarray  # unit 3-vector
    radius: float  # geodesic radius

    def __post_init__(self):
        c = np.asarray(self.center, float)
        if abs(np.linalg.norm(c) - 1.0) > 1e-14 * 10:
            raise DomainError("disc centre must be a unit vector")
        if not 0 < self.radius < math.pi / 2:
            raise DomainError("geodesic radius must lie in (0, pi/2)")

    @cached_property
    def _frame(self):
        return self._make_frame()

    def frame(self):
        """Orthonormal tangent frame (t1, t2) at the centre."""
        return self._frame

    def _make_frame(self):
        c = np.asarray(self.center, float)
        helper = np.array([1.0, 0.0, 0.0]) if abs(c[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
        t1 = helper - c * (helper @ c)
        t1 /= np.linalg.norm(t1)
        return t1, np.cross(c, t1)

    def exp_map(self, w) -> np.ndarray:
        """Points at geodesic distance |w| from the centre in direction arg w."""
        w = np.asarray(w, complex)
        c = np.asarray(self.center, float)
        t1, t2 = self.frame()
        d = np.abs(w)
        u = np.where(d > 0, w / np.where(d > 0, d, 1.0), 0)
        direction = u.real[..., None] * t1 + u.imag[..., None] * t2
        return np.cos(d)[..., None] * c + np.sin(d)[..., None] * direction


@dataclass(frozen=True)
class SphericalHarmonicExpansion:
    """f = Re sum_{0 < |j| <= N} c_j G_|j|(x3) (x1 + i x2)^j (conjugate power for j < 0)."""

    N: int
    log_abs: np.ndarray  # index j + N, j = -N..N
    phase: np.ndarray

    def __post_init__(self):
        if self.log_abs.shape != (2 * self.N + 1,):
            raise ValueError("coefficient arrays must have length 2N+1")

    @property
    def eigenvalue(self) -> int:
        return self.N * (self.N + 1)

    @classmethod
    def from_log(cls, N: int, log_abs_pos, phase_pos, basis: str = "legendre-normalised"):
        """From log|c_j|, arg c_j for j = 0..N (negative orders zero). ``log_abs_pos`` is taken
        against the pole-normalised basis when basis='legendre-normalised'."""
        la = np.full(2 * N + 1, -np.inf)
        ph = np.zeros(2 * N + 1)
        la[N + 1:] = np.asarray(log_abs_pos, float)[1:N + 1]
        ph[N + 1:] = np.asarray(phase_pos, float)[1:N + 1]
        if basis == "legendre":
            j = np.arange(1, N + 1)
            la[N + 1:] += np.array([log_legendre_derivative_at_one(N, k) for k in j])
        elif basis != "legendre-normalised":
            raise ValueError(f"unknown basis {basis!r}")
        return cls(N, la, ph)

    @classmethod
    def from_coefficients(cls, N: int, gamma, basis: str = "l2"):
        """From complex coefficients gamma_j, j = -N..N (entry j = 0 ignored).

        basis 'l2': against e_j / ||e_j||; basis 'legendre': against e_j itself.
        """
        gamma = np.asarray(gamma, complex)
        j = np.arange(-N, N + 1)
        with np.errstate(divide="ignore"):
            la = np.log(np.abs(gamma))
        la[N] = -np.inf
        logA = np.array([log_legendre_derivative_at_one(N, abs(k)) if k else 0.0 for k in j])
        if basis == "l2":
            lognorm = np.array([log_basis_norm(N, k) if k else 0.0 for k in j])
            la = la + logA - lognorm
        elif basis == "legendre":
            la = la + logA
        else:
            raise ValueError(f"unknown basis {basis!r}")
        return cls(N, la, np.angle(gamma))

    def l2_coefficients(self) -> np.ndarray:
        """Coefficients gamma_j against e_j / ||e_j|| (may overflow for extreme expansions)."""
        j = np.arange(-self.N, self.N + 1)
        out = np.zeros(2 * self.N + 1, complex)
        for k in j:
            if k == 0 or not np.isfinite(self.log_abs[k + self.N]):
                continue
            lg = self.log_abs[k + self.N] - log_legendre_derivative_at_one(self.N, abs(k)) + log_basis_norm(self.N, k)
            out[k + self.N] = math.exp(lg) * np.exp(1j * self.phase[k + self.N])
        return out

    def rotate_z(self, angle: float) -> "SphericalHarmonicExpansion":
        """Rotation about the polar axis: c_j -> c_j e^{i j angle}."""
        j = np.arange(-self.N, self.N + 1)
        return SphericalHarmonicExpansion(self.N, self.log_abs.copy(), self.phase + j * angle)

    def scaled(self, factor: float) -> "SphericalHarmonicExpansion":
        ph = self.phase + (math.pi if factor < 0 else 0.0)
        return SphericalHarmonicExpansion(self.N, self.log_abs + math.log(abs(factor)), ph)

    @property
    def max_log(self) -> float:
        return float(np.max(self.log_abs))

    # -- evaluation ------------------------------------------------------

    def _row_terms(self, theta, log_scale):
        """Per-row Fourier coefficients b_j(theta) e^{-log_scale}, shape (len(theta), 2N+1)."""
        N = self.N
        theta = np.asarray(theta, float)
        x3 = np.cos(theta)
        with np.errstate(divide="ignore"):
            ls = np.log(np.abs(np.sin(theta)))
        out = np.zeros((theta.size, 2 * N + 1), complex)
        for k in range(1, N + 1):
            for sgn in (1, -1):
                idx = sgn * k + N
                if not np.isfinite(self.log_abs[idx]):
                    continue
                mag = np.exp(self.log_abs[idx] + k * ls - log_scale)
                if not np.any(mag):
                    continue
                G = gegenbauer_normalized(N - k, k + 0.5, x3)
                out[:, idx] = mag * G * np.exp(1j * self.phase[idx])
        return out

    def evaluate(self, theta, phi, log_scale: float = 0.0) -> np.ndarray:
        """f(theta, phi) e^{-log_scale} at arbitrary points (broadcast)."""
        theta, phi = np.broadcast_arrays(np.asarray(theta, float), np.asarray(phi, float))
        shape = theta.shape
        t, p = theta.ravel(), phi.ravel()
        terms = self._row_terms(t, log_scale)
        j = np.arange(-self.N, self.N + 1)
        vals = np.real(np.sum(terms * np.exp(1j * j[None, :] * p[:, None]), axis=1))
        return vals.reshape(shape)

    def evaluate_xyz(self, points, log_scale: float = 0.0) -> np.ndarray:
        p = np.asarray(points, float)
        theta = np.arccos(np.clip(p[..., 2], -1.0, 1.0))
        phi = np.arctan2(p[..., 1], p[..., 0])
        return self.evaluate(theta, phi, log_scale)

    def natural_log_scale(self) -> float:
        """A log scale bringing the global maximum of |f| to order one or below."""
        s = math.log(2 * self.N + 1) + self.max_log
        # sin^k with the largest order dominates at the equator; the bound |G| <= 1 holds
        return s

    def on_grid(self, grid: SphereGrid, log_scale: float | None = None):
        """Values on a colatitude/longitude grid via one FFT per row; returns (values, log_scale)."""
        theta, _ = grid.axes()
        if log_scale is None:
            log_scale = self._grid_scale(theta)
        terms = self._row_terms(theta, log_scale)
        n_phi = grid.n_phi
        if n_phi <= 2 * self.N:
            raise ValueError("need more than 2N longitudes")
        spec = np.zeros((theta.size, n_phi), complex)
        j = np.arange(-self.N, self.N + 1)
        spec[:, j % n_phi] = terms
        return np.real(np.fft.ifft(spec, axis=1) * n_phi), log_scale

    def _grid_scale(self, theta) -> float:
        with np.errstate(divide="ignore"):
            ls = np.log(np.abs(np.sin(theta)))
        j = np.abs(np.arange(-self.N, self.N + 1))
        fin = np.isfinite(self.log_abs)
        return float(np.max(self.log_abs[fin][None, :] + j[fin][None, :] * ls[:, None]))

    def chart_field(self, disc: GeodesicDisc, log_scale: float = 0.0):
        """Callable w -> f(exp_x(w)) e^{-log_scale} for the nodal-metrics routines."""
        return lambda w: self.evaluate_xyz(disc.exp_map(w), log_scale)


# --------------------------------------------------------------------------
# random eigenfunctions
# --------------------------------------------------------------------------


def normalized_legendre_orders(N: int, theta) -> np.ndarray:
    """Orthonormal P_N^m(cos theta) for m = 0..N at once, Condon-Shortley phase, shape (N+1, len(theta)).

    Runs the stable upward recurrence in degree for every order simultaneously,
    so ``Y_N^m = P[m] e^{i m phi}`` matches ``scipy.special.sph_harm_y``.
    """
    theta = np.atleast_1d(np.asarray(theta, float))
    x, s = np.cos(theta), np.abs(np.sin(theta))
    m = np.arange(N + 1)
    # log of sqrt((2m+1)/(4 pi) (2m-1)!!^2/(2m)!)
    log_c = 0.5 * (np.log(2 * m + 1) - math.log(4 * math.pi) + 2 * gammaln(2 * m + 1) - 2 * m * math.log(2)
                   - 2 * gammaln(m + 1) - gammaln(2 * m + 1))
    with np.errstate(divide="ignore", invalid="ignore"):
        log_s = np.log(s)
        diag = ((-1.0) ** m)[:, None] * np.exp(log_c[:, None] + m[:, None] * log_s[None, :])
    diag[0] = math.sqrt(1 / (4 * math.pi))
    prev2 = np.zeros_like(diag)  # P_{l-2}^m
    prev1 = diag.copy()  # P_{l-1}^m, valid once l-1 >= m
    out = np.where((m == N)[:, None], diag, 0.0)
    for l in range(1, N + 1):
        mm = m[:l]  # orders with m < l advance to degree l
        a = np.sqrt((4.0 * l * l - 1) / (l * l - mm * mm))
        b = np.sqrt(np.maximum(0.0, ((l - 1.0) ** 2 - mm * mm) / (4.0 * (l - 1) ** 2 - 1)))
        cur = a[:, None] * (x * prev1[:l] - b[:, None] * prev2[:l])
        prev2[:l] = prev1[:l]
        prev1[:l] = cur
    out[:N] = prev1[:N]
    return out


@dataclass(frozen=True)
class RandomEigenfunction:
    """Standard complex Gaussian coefficients against the L2-normalised basis."""

    N: int
    gamma: np.ndarray  # j = -N..N, entry N is zero
    seed: int

    @property
    def expansion(self) -> SphericalHarmonicExpansion:
        return SphericalHarmonicExpansion.from_coefficients(self.N, self.gamma, "l2")

    @property
    def eigenvalue(self) -> int:
        return self.N * (self.N + 1)

    def evaluate_xyz(self, points) -> np.ndarray:
        """Direct evaluation with normalised spherical harmonics (e_j/||e_j|| = (-1)^j Y_N^j)."""
        p = np.asarray(points, float)
        theta = np.arccos(np.clip(p[..., 2], -1.0, 1.0)).ravel()
        phi = np.arctan2(p[..., 1], p[..., 0]).ravel()
        N = self.N
        m = np.arange(1, N + 1)
        P = normalized_legendre_orders(N, theta)[1:]
        Y = P * np.exp(1j * m[:, None] * phi[None, :]) * ((-1.0) ** m)[:, None]
        gp = self.gamma[N + 1:][:, None]
        gm = self.gamma[:N][::-1][:, None]
        vals = np.real(np.sum(gp * Y + gm * np.conj(Y), axis=0))
        return vals.reshape(p.shape[:-1])


def random_eigenfunction(N: int, seed: int) -> RandomEigenfunction:
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), int(N)]))
    g = (rng.standard_normal(2 * N + 1) + 1j * rng.standard_normal(2 * N + 1)) / math.sqrt(2.0)
    g[N] = 0.0
    return RandomEigenfunction(N, g, int(seed))


def sectoral(N: int) -> SphericalHarmonicExpansion:
    """Re e_N, the sectoral harmonic sin^N(theta) cos(N phi) up to the factor L_N^{(N)}(1)."""
    gamma = np.zeros(2 * N + 1, complex)
    gamma[2 * N] = 1.0
    return SphericalHarmonicExpansion.from_coefficients(N, gamma, "legendre")


# --------------------------------------------------------------------------
# residuals and statistics
# --------------------------------------------------------------------------


POLE_CAP = 2.0 * math.pi / 512  # two rows of the 512-row reference grid


def laplace_beltrami_residual(values, grid: SphereGrid, eigenvalue: float, pole_cap: float = POLE_CAP) -> float:
    """max |Delta_h f + lambda f| / max |f| with the conservative second-order stencil.

    Rows with colatitude within ``pole_cap`` of either pole are excluded. The
    cap is a fixed angle so refinement studies compare the same region.
    """
    f = np.asarray(values, float)
    fmax = np.max(np.abs(f))
    if fmax == 0:
        return 0.0
    f = f / fmax
    theta, _ = grid.axes()
    ht = math.pi / grid.n_theta
    hp = TWO_PI / grid.n_phi
    s = np.sin(theta)[:, None]
    s_up = np.sin(theta + 0.5 * ht)[:, None]
    s_dn = np.sin(theta - 0.5 * ht)[:, None]
    lap = np.zeros_like(f)
    i = slice(1, -1)
    lap[i] = (s_up[i] * (f[2:] - f[1:-1]) - s_dn[i] * (f[1:-1] - f[:-2])) / (ht * ht * s[i])
    lap += (np.roll(f, -1, axis=1) - 2 * f + np.roll(f, 1, axis=1)) / (hp * hp * s * s)
    res = np.abs(lap + eigenvalue * f)
    keep = (theta > pole_cap) & (theta < math.pi - pole_cap)
    keep[0] = keep[-1] = False
    return float(np.max(res[keep]))


def sphere_positivity_area(values, grid: SphereGrid, sign: int = 1) -> float:
    """Grid area of {sign * f > 0} using exact cell areas."""
    theta, _ = grid.axes()
    ht = math.pi / grid.n_theta
    cell = (np.cos(theta - 0.5 * ht) - np.cos(theta + 0.5 * ht)) * (TWO_PI / grid.n_phi)
    return float(np.sum(cell[:, None] * (sign * np.asarray(values) > 0)))


def uniform_sphere_points(n: int, rng) -> np.ndarray:
    v = rng.standard_normal((n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


@dataclass(frozen=True)
class DoublingStats:
    B1: float
    B_inf: float
    samples: np.ndarray
    histogram: tuple
    r_factor: float
    resolution: tuple


def doubling_statistics(f, eigenvalue: float, r_factor: float = 1.0, sample_count: int = 64, seed: int = 0,
                        resolution=(24, 48)) -> DoublingStats:
    """b(x, lambda) on geodesic discs of radius r_factor / sqrt(lambda) about uniform random x.

    ``f`` evaluates unit vectors (e.g. RandomEigenfunction.evaluate_xyz). The
    doubling exponent uses the grid maximum over each closed disc in its
    exponential chart.
    """
    rho = r_factor / math.sqrt(eigenvalue)
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 7]))
    pts = uniform_sphere_points(sample_count, rng)
    b = np.empty(sample_count)
    for k, x in enumerate(pts):
        disc = GeodesicDisc(x, rho)
        field = lambda w, disc=disc: f(disc.exp_map(w))
        b[k] = doubling_exponent(field, Disc(0j, rho), boundary_only=False, resolution=resolution)
    counts, edges = np.histogram(b, bins=10)
    return DoublingStats(float(b.mean()), float(b.max()), b, (counts, edges), r_factor, tuple(resolution))


@dataclass(frozen=True)
class LengthVsB1:
    length: float
    B1: float
    normalized_length: float  # Length * lambda^{-1/2}
    ratio: float  # B1 / normalized_length


def nodal_length_vs_B1(expansion: SphericalHarmonicExpansion, f_points=None, grid: SphereGrid | None = None,
                       r_factor: float = 1.0, sample_count: int = 64, seed: int = 0) -> LengthVsB1:
    grid = grid or SphereGrid(512, 1024)
    vals, _ = expansion.on_grid(grid)
    length = nodal_length(vals, grid)
    lam = expansion.eigenvalue
    if f_points is None:
        s = expansion.natural_log_scale()
        f_points = lambda p: expansion.evaluate_xyz(p, s)
    stats = doubling_statistics(f_points, lam, r_factor, sample_count, seed)
    norm_len = length / math.sqrt(lam)
    return LengthVsB1(length, stats.B1, norm_len, stats.B1 / norm_len)
