"""Schrodinger-type equations Delta F + q F = 0 on the unit disc.

Fields live on a polar grid: Chebyshev-Lobatto nodes in the radius (origin
and boundary included) times equispaced angles. Every radial operation acts
on the angular Fourier modes, so the Green potential, the Laplacian and the
gradient are all spectral. The Green potential is a product quadrature of the
exact modal kernels of the Dirichlet Green function against the polynomial
interpolant of the source; the kernel kinks and the logarithm at the origin
are handled by splitting at the target radius and grading panels towards 0.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Callable

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.optimize import minimize

from .errors import DegenerateInputError, DivergenceError, PreconditionError
from .metrics import TWO_PI, max_on_circle

# --------------------------------------------------------------------------
# polar grid and fields
# --------------------------------------------------------------------------


def _lobatto(n_rho: int):
    k = np.arange(n_rho)
    x = 0.5 * (1.0 - np.cos(math.pi * k / (n_rho - 1)))
    w = (-1.0) ** k
    w[0] *= 0.5
    w[-1] *= 0.5
    return x, w


def _bary_matrix(nodes, weights, x):
    """Rows interpolate nodal values to the points ``x``."""
    x = np.asarray(x, dtype=float).ravel()
    diff = x[:, None] - nodes[None, :]
    exact = diff == 0.0
    diff[exact] = 1.0
    c = weights[None, :] / diff
    B = c / np.sum(c, axis=1, keepdims=True)
    hit = np.any(exact, axis=1)
    if np.any(hit):
        B[hit] = exact[hit].astype(float)
    return B


@lru_cache(maxsize=16)
def _operators(n_rho: int, n_theta: int, n_quad: int):
    rho, w = _lobatto(n_rho)
    # differentiation matrix from barycentric weights
    dx = rho[:, None] - rho[None, :]
    np.fill_diagonal(dx, 1.0)
    D = (w[None, :] / w[:, None]) / dx
    np.fill_diagonal(D, 0.0)
    np.fill_diagonal(D, -np.sum(D, axis=1))

    m = np.arange(n_theta // 2 + 1)
    gx, gw = np.polynomial.legendre.leggauss(n_quad)
    green = np.zeros((m.size, n_rho, n_rho))
    for i, r in enumerate(rho):
        edges = [0.0, r] if r > 0 else [0.0]
        lo = max(r, 2.0 ** -40)
        while lo < 1.0:
            edges.append(lo)
            lo *= 2.0
        edges.append(1.0)
        edges = np.unique(edges)
        a, b = edges[:-1], edges[1:]
        s = (0.5 * (a + b)[:, None] + 0.5 * (b - a)[:, None] * gx[None, :]).ravel()
        ws = (0.5 * (b - a)[:, None] * gw[None, :]).ravel() * s
        big = np.maximum(r, s)
        ratio = np.minimum(r, s) / big
        K = np.empty((m.size, s.size))
        K[0] = -np.log(big)
        mm = m[1:, None].astype(float)
        K[1:] = (ratio[None, :] ** mm - (r * s)[None, :] ** mm) / (2.0 * mm)
        green[:, i, :] = (K * ws[None, :]) @ _bary_matrix(rho, w, s)
    return rho, w, D, green


@dataclass(frozen=True)
class PolarGrid:
    n_rho: int = 41
    n_theta: int = 64
    n_quad: int = 24

    def __post_init__(self):
        if self.n_rho < 4 or self.n_theta < 4 or self.n_theta % 2:
            raise ValueError("need n_rho >= 4 and an even n_theta >= 4")

    @property
    def rho(self) -> np.ndarray:
        return _operators(self.n_rho, self.n_theta, self.n_quad)[0]

    @property
    def theta(self) -> np.ndarray:
        return TWO_PI * np.arange(self.n_theta) / self.n_theta

    @property
    def modes(self) -> np.ndarray:
        return np.arange(self.n_theta // 2 + 1)

    @property
    def points(self) -> np.ndarray:
        return self.rho[:, None] * np.exp(1j * self.theta)[None, :]

    def sample(self, f) -> "PolarField":
        return PolarField(self, np.real(np.asarray(f(self.points))).astype(float))

    def to_modes(self, values):
        return np.fft.rfft(values, axis=1)

    def from_modes(self, modes):
        return np.fft.irfft(modes, n=self.n_theta, axis=1)

    def interpolation(self, r):
        _, w, _, _ = _operators(self.n_rho, self.n_theta, self.n_quad)
        return _bary_matrix(self.rho, w, r)

    @property
    def D(self) -> np.ndarray:
        return _operators(self.n_rho, self.n_theta, self.n_quad)[2]

    @property
    def green(self) -> np.ndarray:
        return _operators(self.n_rho, self.n_theta, self.n_quad)[3]


@dataclass(frozen=True, eq=False)
class PolarField:
    """Real field sampled on a polar grid; callable on complex points."""

    grid: PolarGrid
    values: np.ndarray

    @cached_property
    def modes(self) -> np.ndarray:
        return self.grid.to_modes(self.values)

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        shape = z.shape
        z = z.ravel()
        B = self.grid.interpolation(np.abs(z))
        c = B @ self.modes
        n = self.grid.n_theta
        weight = np.full(c.shape[1], 2.0)
        weight[0] = 1.0
        weight[-1] = 1.0
        phase = np.exp(1j * np.outer(np.angle(z), self.grid.modes))
        out = np.real(c * phase) @ weight / n
        return out.reshape(shape)

    def laplacian(self) -> np.ndarray:
        """Spectral Laplacian at the grid nodes; the origin row is NaN."""
        g = self.grid
        D = g.D
        c = self.modes
        r = g.rho[1:, None]
        m2 = (g.modes ** 2)[None, :]
        lap = (D @ D @ c)[1:] + (D @ c)[1:] / r - m2 * c[1:] / r**2
        out = np.full(self.values.shape, np.nan)
        out[1:] = g.from_modes(lap)
        return out

    def gradient(self):
        """``(f_x, f_y)`` at the grid nodes, origin included."""
        g = self.grid
        c = self.modes
        f_r = g.from_modes(g.D @ c)
        f_t = g.from_modes(1j * g.modes[None, :] * c)
        cos, sin = np.cos(g.theta)[None, :], np.sin(g.theta)[None, :]
        fx = np.empty_like(self.values)
        fy = np.empty_like(self.values)
        r = g.rho[1:, None]
        fx[1:] = cos * f_r[1:] - sin * f_t[1:] / r
        fy[1:] = sin * f_r[1:] + cos * f_t[1:] / r
        d1 = (g.D @ c[:, 1])[0] * 2.0 / g.n_theta
        fx[0] = d1.real
        fy[0] = -d1.imag
        return fx, fy

    def __mul__(self, other):
        v = other.values if isinstance(other, PolarField) else other
        return PolarField(self.grid, self.values * v)

    __rmul__ = __mul__

    def __add__(self, other):
        v = other.values if isinstance(other, PolarField) else other
        return PolarField(self.grid, self.values + v)

    def __truediv__(self, other):
        v = other.values if isinstance(other, PolarField) else other
        return PolarField(self.grid, self.values / v)


def green_potential(g, grid: PolarGrid | None = None) -> PolarField:
    """``F`` with ``Delta F = -g`` in the disc and ``F = 0`` on the circle."""
    if not isinstance(g, PolarField):
        g = (grid or PolarGrid()).sample(g)
    grid = g.grid
    c = g.modes
    out = np.einsum("mij,jm->im", grid.green, c)
    return PolarField(grid, grid.from_modes(out))


def harmonic_extension(boundary: Callable, grid: PolarGrid) -> PolarField:
    b = np.fft.rfft(np.real(boundary(grid.theta)))
    modes = grid.rho[:, None] ** grid.modes[None, :] * b[None, :]
    return PolarField(grid, grid.from_modes(modes))


# --------------------------------------------------------------------------
# potentials
# --------------------------------------------------------------------------


def _measure(f, resolution=(160, 320)):
    n_r, n_t = resolution
    rho = np.linspace(0.0, 1.0, n_r)
    theta = TWO_PI * np.arange(n_t) / n_t
    R, T = np.meshgrid(rho, theta, indexing="ij")
    z = R * np.exp(1j * T)
    vals = np.real(f(z))
    h = 1e-6
    q_r = (np.real(f((R + h) * np.exp(1j * T))) - np.real(f((R - h) * np.exp(1j * T)))) / (2 * h)
    N = float(np.max(np.abs(vals) + R * np.abs(q_r)))

    def neg(p):
        w = complex(p[0], p[1])
        if abs(w) > 1.0:
            w /= abs(w)
        return -abs(float(np.real(f(np.array([w])))[0]))

    flat = np.argsort(np.abs(vals).ravel())[-4:]
    sup = float(np.max(np.abs(vals)))
    for k in flat:
        w = z.ravel()[k]
        res = minimize(neg, [w.real, w.imag], method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-15, "maxiter": 400})
        sup = max(sup, -float(res.fun))
    return sup, max(N, sup)


@dataclass(frozen=True, eq=False)
class Potential:
    evaluator: Callable
    sup_norm: float
    radial_derivative_bound: float
    name: str = "custom"

    def __call__(self, z):
        return np.real(self.evaluator(np.asarray(z, dtype=complex)))

    @property
    def gamma(self) -> float:
        return math.sqrt(self.radial_derivative_bound)

    @classmethod
    def from_function(cls, f, name="custom") -> "Potential":
        sup, N = _measure(f)
        return cls(f, sup, N, name)

    def scaled(self, t: float) -> "Potential":
        f = self.evaluator
        return Potential(lambda z: t * f(z), abs(t) * self.sup_norm, abs(t) * self.radial_derivative_bound,
                         f"{t:g}*{self.name}")


def constant_potential(value: float = 0.05) -> Potential:
    return Potential(lambda z: np.full(np.shape(z), float(value)), abs(value), abs(value), f"constant({value:g})")


def gaussian_bump(amplitude: float = 0.05, center: complex = 0j, width: float = 0.3) -> Potential:
    f = lambda z: amplitude * np.exp(-np.abs(z - center) ** 2 / width**2)
    return Potential.from_function(f, f"gaussian-bump({amplitude:g})")


def trig_polynomial(seed: int, amplitude: float = 0.05, degree: int = 3) -> Potential:
    """Seeded ``sum a cos(j x + k y) + b sin(j x + k y)`` scaled to sup norm ``amplitude``."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 7301]))
    jk = np.array([(j, k) for j in range(degree + 1) for k in range(-degree, degree + 1)], dtype=float)
    decay = 1.0 / (1.0 + np.abs(jk).sum(axis=1))
    a = rng.normal(size=len(jk)) * decay
    b = rng.normal(size=len(jk)) * decay

    def raw(z):
        z = np.asarray(z, dtype=complex)
        arg = np.multiply.outer(z.real, jk[:, 0]) + np.multiply.outer(z.imag, jk[:, 1])
        return np.cos(arg) @ a + np.sin(arg) @ b

    sup, N = _measure(raw)
    scale = amplitude / sup
    return Potential(lambda z: scale * raw(z), amplitude, N * scale, f"trig-polynomial(seed={seed})")


def potential_from_csv(path) -> Potential:
    """Grid file: a ``n_rho,n_theta`` header, the two sizes, then the values row-major in (rho, theta).

    Nodes are ``rho_i = i/(n_rho-1)`` and ``theta_j = 2 pi j / n_theta``; values are
    interpolated bilinearly (periodically in theta).
    """
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if [c.strip() for c in rows[0]] != ["n_rho", "n_theta"]:
        raise ValueError("potential CSV must start with the header 'n_rho,n_theta'")
    n_rho, n_theta = (int(c) for c in rows[1])
    vals = np.array([float(c) for r in rows[2:] for c in r if c.strip()])
    if vals.size != n_rho * n_theta:
        raise ValueError(f"expected {n_rho * n_theta} values, found {vals.size}")
    V = vals.reshape(n_rho, n_theta)
    rho = np.linspace(0.0, 1.0, n_rho)
    theta = TWO_PI * np.arange(n_theta + 1) / n_theta
    interp = RegularGridInterpolator((rho, theta), np.hstack([V, V[:, :1]]), bounds_error=False, fill_value=None)

    def f(z):
        z = np.asarray(z, dtype=complex)
        pts = np.stack([np.clip(np.abs(z), 0.0, 1.0), np.mod(np.angle(z), TWO_PI)], axis=-1)
        return interp(pts)

    return Potential.from_function(f, f"csv({path})")


def write_potential_csv(path, q: Potential, n_rho: int, n_theta: int) -> None:
    rho = np.linspace(0.0, 1.0, n_rho)
    theta = TWO_PI * np.arange(n_theta) / n_theta
    V = q(rho[:, None] * np.exp(1j * theta)[None, :])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n_rho", "n_theta"])
        w.writerow([n_rho, n_theta])
        for row in V:
            w.writerow([repr(float(v)) for v in row])


POTENTIALS = {
    "constant": constant_potential,
    "gaussian-bump": gaussian_bump,
    "trig-polynomial": trig_polynomial,
}


def make_potential(name: str, **params) -> Potential:
    if name == "csv":
        return potential_from_csv(params["path"])
    try:
        return POTENTIALS[name](**params)
    except KeyError:
        raise ValueError(f"unknown potential {name!r}; choose from {sorted(POTENTIALS) + ['csv']}") from None


# --------------------------------------------------------------------------
# positive solution and Dirichlet solves
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SchrodingerConfig:
    eps0: float = 0.1
    n_rho: int = 41
    n_theta: int = 64
    tol: float = 1e-12
    max_iter: int = 200
    grad_threshold: float = 1e-8

    @property
    def grid(self) -> PolarGrid:
        return PolarGrid(self.n_rho, self.n_theta)


@dataclass(frozen=True, eq=False)
class PositiveSolution:
    phi: PolarField
    residual_norm: float
    iteration_count: int
    c0_measured: float
    c1_measured: float
    q_norm: float
    norms: tuple = field(default=())


def _neumann(qv, grid, tol, max_iter):
    F = PolarField(grid, np.ones((grid.n_rho, grid.n_theta)))
    psi = F.values.copy()
    norms = [1.0]
    for it in range(1, max_iter + 1):
        F = green_potential(PolarField(grid, qv * F.values))
        nrm = F.sup_norm
        norms.append(nrm)
        psi += F.values
        if nrm < tol:
            return psi, norms, it
    raise DivergenceError(f"Neumann series not below {tol:g} after {max_iter} iterations")


def _check_q(q: Potential, config: SchrodingerConfig):
    if q.sup_norm >= config.eps0:
        raise PreconditionError(f"||q|| = {q.sup_norm:.4g} is not below eps0 = {config.eps0:g}")


def _schrodinger_residual(F: PolarField, qv) -> float:
    res = F.laplacian()[1:] + qv[1:] * F.values[1:]
    return float(np.max(np.abs(res)) / max(F.sup_norm, 1e-300))


def positive_solution(q: Potential, config: SchrodingerConfig = SchrodingerConfig()) -> PositiveSolution:
    """Positive solution of ``Delta phi + q phi = 0`` with ``max phi = 1``."""
    _check_q(q, config)
    grid = config.grid
    qv = q(grid.points)
    psi, norms, it = _neumann(qv, grid, config.tol, config.max_iter)
    phi = PolarField(grid, psi / np.max(psi))
    if not np.all(phi.values > 0):
        raise DivergenceError("computed solution is not positive")
    qn = q.sup_norm
    ratios = [b / a for a, b in zip(norms[:-1], norms[1:]) if a > 0]
    c0 = max(ratios) / qn if qn > 0 and ratios else 0.0
    c1 = (1.0 - float(np.min(phi.values))) / qn if qn > 0 else 0.0
    return PositiveSolution(phi, _schrodinger_residual(phi, qv), it, c0, c1, qn, tuple(norms))


@dataclass(frozen=True)
class Calibration:
    eps0: float
    c0: float
    c1: float


def calibrate(config: SchrodingerConfig = SchrodingerConfig()) -> Calibration:
    """Measure c0 and c1 on ``q = eps0`` (the edge of the admissible range)."""
    grid = config.grid
    qv = np.full((grid.n_rho, grid.n_theta), config.eps0)
    psi, norms, _ = _neumann(qv, grid, config.tol, config.max_iter)
    ratios = [b / a for a, b in zip(norms[:-1], norms[1:])]
    c1 = (1.0 - np.min(psi) / np.max(psi)) / config.eps0
    return Calibration(config.eps0, max(ratios) / config.eps0, float(c1))


def solve_dirichlet(q: Potential, boundary: Callable, config: SchrodingerConfig = SchrodingerConfig()) -> PolarField:
    """``Delta F + q F = 0`` with ``F = boundary(theta)`` on the circle (fixed point of F = H + G[qF])."""
    _check_q(q, config)
    grid = config.grid
    H = harmonic_extension(boundary, grid)
    qv = q(grid.points)
    F = H
    for _ in range(config.max_iter):
        new = H + green_potential(PolarField(grid, qv * F.values))
        delta = float(np.max(np.abs(new.values - F.values)))
        F = new
        if delta <= config.tol * max(F.sup_norm, 1e-300):
            return F
    raise DivergenceError("Dirichlet iteration did not converge")


def manufactured_field(phi: PolarField, coefficients) -> PolarField:
    """``phi * Re W`` for the polynomial ``W = sum a_k z^k``."""
    a = np.asarray(coefficients, dtype=complex)
    W = np.polynomial.polynomial.polyval(phi.grid.points, a)
    return PolarField(phi.grid, phi.values * np.real(W))


def schrodinger_residual(F: PolarField, q: Potential) -> float:
    """``max |Delta F + q F| / max |F|`` away from the origin row."""
    return _schrodinger_residual(F, q(F.grid.points))


# --------------------------------------------------------------------------
# Beltrami coefficient
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class BeltramiField:
    grid: PolarGrid
    mu: np.ndarray
    excluded: np.ndarray
    sup_abs: float

    @property
    def K(self) -> float:
        return (1.0 + self.sup_abs) / (1.0 - self.sup_abs)


def beltrami_field(F: PolarField, phi: PositiveSolution | PolarField, threshold: float = 1e-8) -> BeltramiField:
    if isinstance(phi, PositiveSolution):
        phi = phi.phi
    u = F / phi
    ux, uy = u.gradient()
    g = np.hypot(ux, uy)
    gmax = float(np.max(g))
    if not gmax > 1e-12 * max(u.sup_norm, 1e-300):
        raise DegenerateInputError("u = F/phi is locally constant; no Beltrami coefficient")
    excluded = g < threshold * gmax
    p2 = phi.values**2
    with np.errstate(invalid="ignore", divide="ignore"):
        mu = (1.0 - p2) / (1.0 + p2) * (ux + 1j * uy) / (ux - 1j * uy)
    mu = np.where(excluded, np.nan + 0j, mu)
    return BeltramiField(F.grid, mu, excluded, float(np.nanmax(np.abs(mu))))


def divergence_residual(F: PolarField, phi: PolarField) -> float:
    """``max |div(phi^2 grad u)|`` for ``u = F/phi``, relative to ``max |phi^2 grad u|``."""
    grid = F.grid
    u = F / phi
    c = u.modes
    p2 = phi.values**2
    u_r = grid.from_modes(grid.D @ c)
    u_t = grid.from_modes(1j * grid.modes[None, :] * c)
    flux_r = PolarField(grid, grid.rho[:, None] * p2 * u_r)
    flux_t = PolarField(grid, p2 * u_t)
    r = grid.rho[1:, None]
    div = grid.from_modes(grid.D @ flux_r.modes)[1:] / r
    div += grid.from_modes(1j * grid.modes[None, :] * flux_t.modes)[1:] / r**2
    ux, uy = u.gradient()
    scale = float(np.max(p2 * np.hypot(ux, uy)))
    return float(np.max(np.abs(div)) / max(scale, 1e-300))


# --------------------------------------------------------------------------
# frequency function and its convexity
# --------------------------------------------------------------------------


def _J(F, gamma, r, n_tau, n_phi):
    x, w = np.polynomial.legendre.leggauss(n_tau)
    tau = 0.25 * math.pi * (x + 1.0)
    w = 0.25 * math.pi * w
    s = r * np.sin(tau)
    phi = TWO_PI * np.arange(n_phi) / n_phi
    vals = np.real(F(s[:, None] * np.exp(1j * phi)[None, :]))
    I = TWO_PI * np.mean(vals**2, axis=1)
    return float(np.sum(w * r * np.sin(tau) * np.cosh(gamma * r * np.cos(tau)) ** 2 * I))


def _gamma(q) -> float:
    if q is None:
        return 0.0
    if isinstance(q, Potential):
        return q.gamma
    return float(q)


def frequency_J(F, q, r: float, n_tau: int = 64, n_phi: int = 256) -> float:
    """``J(r)`` via ``s = r sin(tau)``; ``q`` is a Potential, a gamma value, or None for gamma = 0."""
    if not 0 < r <= 0.5:
        raise PreconditionError("need 0 < r <= 1/2")
    return _J(F, _gamma(q), r, n_tau, n_phi)


@dataclass(frozen=True)
class FrequencyProfile:
    radii: np.ndarray
    values: np.ndarray
    errors: np.ndarray
    gamma: float


def frequency_profile(F, q, radii, n_tau: int = 64, n_phi: int = 256) -> FrequencyProfile:
    radii = np.asarray(radii, dtype=float)
    if np.any(radii <= 0) or np.any(radii > 0.5):
        raise PreconditionError("need 0 < r <= 1/2")
    g = _gamma(q)
    fine = np.array([_J(F, g, r, n_tau, n_phi) for r in radii])
    coarse = np.array([_J(F, g, r, n_tau // 2, n_phi // 2) for r in radii])
    return FrequencyProfile(radii, fine, np.abs(fine - coarse), g)


@dataclass(frozen=True)
class ConvexityReport:
    violation: float
    tolerance: float

    @property
    def ok(self) -> bool:
        return self.violation <= self.tolerance


def log_convexity_check(profile: FrequencyProfile, tol: float = 1e-6) -> ConvexityReport:
    """Largest negative second derivative estimate of ``t -> log J(e^t)``."""
    r = profile.radii
    if r.size < 5:
        raise PreconditionError("need at least 5 radii")
    t = np.log(r)
    dt = np.diff(t)
    if not np.allclose(dt, dt[0], rtol=1e-9):
        raise PreconditionError("radii must be geometrically spaced")
    L = np.log(profile.values)
    second = (L[2:] - 2 * L[1:-1] + L[:-2]) / dt[0] ** 2
    rel = profile.errors / profile.values
    qerr = (rel[2:] + 2 * rel[1:-1] + rel[:-2]) / dt[0] ** 2
    return ConvexityReport(max(0.0, float(np.max(-second))), tol + float(np.max(qerr)))


# --------------------------------------------------------------------------
# three circles and the elliptic sandwich
# --------------------------------------------------------------------------


def _M(F, r, samples=1024):
    return max_on_circle(F, 0j, r, samples)


@dataclass(frozen=True)
class ThreeCircles:
    lhs: float
    rhs_core: float
    N: float
    s: float
    r: float

    def margin(self, c2: float = 1.0) -> float:
        """``lhs / (e^{c2 sqrt N} rhs_core)``; compliance means margin <= c1."""
        return self.lhs / (math.exp(c2 * math.sqrt(self.N)) * self.rhs_core)

    def complies(self, c1: float, c2: float = 1.0) -> bool:
        return self.margin(c2) <= c1


def three_circles_check(F, q, s: float, r: float) -> ThreeCircles:
    if not 0 < s <= r <= 0.125:
        raise PreconditionError("need 0 < s <= r <= 1/8")
    Ms, Mr = _M(F, s), _M(F, r)
    if Ms <= 1e-300 or Mr <= 1e-300:
        raise DegenerateInputError("field vanishes on a test circle")
    N = q.radial_derivative_bound if isinstance(q, Potential) else float(q or 0.0)
    return ThreeCircles(_M(F, 2 * s) / Ms, _M(F, 8 * r) / Mr, N, s, r)


@dataclass(frozen=True)
class ThreeCirclesConstants:
    c1: float
    c2: float


def calibrate_three_circles(cases, c2: float = 1.0, safety: float = 2.0) -> ThreeCirclesConstants:
    """Freeze ``c1 = safety * max margin`` (at least 1) over a calibration corpus."""
    worst = max(c.margin(c2) for c in cases)
    return ThreeCirclesConstants(max(1.0, safety * worst), c2)


@dataclass(frozen=True)
class Sandwich:
    lower_core: float
    M: float
    upper_core: float
    r: float


def elliptic_sandwich_check(F, q, r: float) -> Sandwich:
    """Uncalibrated sides ``e^{-sqrt N r} sqrt(J(r)/r)`` and ``N sqrt(J(2r)/2r)`` around ``M(r)``."""
    if not 0 < r <= 0.5:
        raise PreconditionError("need 0 < r <= 1/2")
    N = q.radial_derivative_bound if isinstance(q, Potential) else float(q or 0.0)
    lower = math.exp(-math.sqrt(N) * r) * math.sqrt(frequency_J(F, q, r) / r)
    upper = N * math.sqrt(_J(F, math.sqrt(N), 2 * r, 64, 256) / (2 * r)) if N > 0 else math.inf
    return Sandwich(lower, _M(F, r), upper, r)


def sandwich_constants(cases) -> tuple[float, float]:
    """Empirical ``(c3, c4)``: the extreme ratios ``M/lower_core`` (min) and ``M/upper_core`` (max)."""
    c3 = min(c.M / c.lower_core for c in cases)
    c4 = max(c.M / c.upper_core for c in cases if math.isfinite(c.upper_core))
    return c3, c4


# --------------------------------------------------------------------------
# ODE skeleton
# --------------------------------------------------------------------------


def _psd(A, name):
    if not np.allclose(A, A.T, atol=1e-12 * max(1.0, np.max(np.abs(A)))):
        raise PreconditionError(f"{name} is not symmetric")
    lam = np.linalg.eigvalsh(A)
    if lam[0] < -1e-12 * max(1.0, abs(lam[-1])):
        raise PreconditionError(f"{name} is not positive semidefinite")


def toy_ode_convexity(L0, L1, T: float, eps: float = 1e-3, steps: int = 4000, L: Callable | None = None,
                      v=None) -> float:
    """Max negative second difference of ``log(|h|^2/2)`` for ``h'' = L(t) h`` on ``[-T, 0]``.

    ``L`` defaults to ``L0 + (t + T) L1``. The state is renormalised whenever it
    leaves ``[1e-150, 1e150]`` and the log of the scale is carried separately.
    """
    L0 = np.atleast_2d(np.asarray(L0, dtype=float))
    L1 = np.atleast_2d(np.asarray(L1, dtype=float))
    if L is None:
        _psd(L0, "L0")
        _psd(L1, "L1")
        L = lambda t: L0 + (t + T) * L1
    if not T > 0:
        raise PreconditionError("horizon must be positive")
    d = L0.shape[0]
    v = np.ones(d) / math.sqrt(d) if v is None else np.asarray(v, dtype=float)
    lam, Q = np.linalg.eigh(np.atleast_2d(L(-T)))
    root = (Q * np.sqrt(np.maximum(lam, 0.0))) @ Q.T
    h, p = eps * v, eps * (root @ v)
    dt = T / steps
    shift = 0.0
    logs = np.empty(steps + 1)
    logs[0] = 2 * math.log(np.linalg.norm(h)) - math.log(2.0)
    t = -T
    for k in range(1, steps + 1):
        La, Lm, Lb = L(t), L(t + dt / 2), L(t + dt)
        k1h, k1p = p, La @ h
        k2h, k2p = p + dt / 2 * k1p, Lm @ (h + dt / 2 * k1h)
        k3h, k3p = p + dt / 2 * k2p, Lm @ (h + dt / 2 * k2h)
        k4h, k4p = p + dt * k3p, Lb @ (h + dt * k3h)
        h = h + dt / 6 * (k1h + 2 * k2h + 2 * k3h + k4h)
        p = p + dt / 6 * (k1p + 2 * k2p + 2 * k3p + k4p)
        t = -T + k * dt
        nrm = max(np.linalg.norm(h), np.linalg.norm(p))
        if nrm > 1e150 or nrm < 1e-150:
            h, p = h / nrm, p / nrm
            shift += math.log(nrm)
        logs[k] = 2 * (math.log(np.linalg.norm(h)) + shift) - math.log(2.0)
    second = logs[2:] - 2 * logs[1:-1] + logs[:-2]
    return max(0.0, float(np.max(-second)))


# --------------------------------------------------------------------------
# seeded corpus
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SchrodingerCase:
    seed: int
    q: Potential
    F: PolarField


def seeded_case(seed: int, q_norm: float = 0.05, boundary_degree: int = 6, tag: int = 0,
                config: SchrodingerConfig = SchrodingerConfig()) -> SchrodingerCase:
    """Trig-polynomial potential plus Gaussian Fourier boundary data, solved exactly on the grid."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, tag, 5501]))
    q = trig_polynomial(int(rng.integers(2**31)), q_norm)
    m = np.arange(boundary_degree + 1)
    a = rng.normal(size=m.size) / (1.0 + m)
    b = rng.normal(size=m.size) / (1.0 + m)
    boundary = lambda th: np.cos(np.outer(th, m)) @ a + np.sin(np.outer(th, m)) @ b
    return SchrodingerCase(seed, q, solve_dirichlet(q, boundary, config))
