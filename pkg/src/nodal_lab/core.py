"""Function carriers and special-function kernels.

Everything here is pure: coefficient series on discs, log-scaled complex
numbers for values of ``exp(exp(z))``, the smooth cut-off used to build the
entire function of the extremal construction, and Legendre derivatives.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .errors import DomainError

TWO_PI = 2.0 * math.pi


# --------------------------------------------------------------------------
# coefficient series
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class CoefficientSeries:
    """Finite power series ``sum a_n z**n`` trusted on ``|z| <= validity_radius``."""

    coefficients: np.ndarray
    validity_radius: float = math.inf

    def __post_init__(self):
        coeffs = np.atleast_1d(np.asarray(self.coefficients, dtype=complex))
        object.__setattr__(self, "coefficients", coeffs)
        if not self.validity_radius > 0:
            raise DomainError("validity_radius must be positive")

    @property
    def degree(self) -> int:
        nz = np.flatnonzero(self.coefficients)
        return int(nz[-1]) if nz.size else 0

    def __call__(self, z):
        return eval_series(self, z)


def eval_series(s: CoefficientSeries, z):
    """Nested (Horner) evaluation; raises DomainError outside the validity disc."""
    z_arr = np.asarray(z, dtype=complex)
    if np.any(np.abs(z_arr) > s.validity_radius * (1 + 1e-12)):
        raise DomainError(
            f"evaluation at |z|={np.max(np.abs(z_arr)):.6g} outside validity radius "
            f"{s.validity_radius:.6g}"
        )
    coeffs = s.coefficients
    acc = np.full(z_arr.shape, coeffs[-1], dtype=complex)
    for a in coeffs[-2::-1]:
        acc = acc * z_arr + a
    return acc[()] if acc.ndim == 0 else acc


# --------------------------------------------------------------------------
# log-scaled complex numbers
# --------------------------------------------------------------------------


def _wrap(phase: float) -> float:
    return math.remainder(phase, TWO_PI)


@dataclass(frozen=True)
class ScaledComplex:
    """The number ``exp(log_magnitude + 1j * phase)``; zero has log_magnitude=-inf."""

    log_magnitude: float
    phase: float = 0.0

    @classmethod
    def from_complex(cls, w: complex) -> "ScaledComplex":
        if w == 0:
            return cls(-math.inf, 0.0)
        return cls(math.log(abs(w)), cmath.phase(w))

    @classmethod
    def zero(cls) -> "ScaledComplex":
        return cls(-math.inf, 0.0)

    @property
    def is_zero(self) -> bool:
        return self.log_magnitude == -math.inf

    def to_complex(self) -> complex:
        if self.is_zero:
            return 0j
        if self.log_magnitude > 709.7:
            raise OverflowError(f"log-magnitude {self.log_magnitude:.4g} exceeds float range")
        return cmath.rect(math.exp(self.log_magnitude), self.phase)

    def scaled(self, log_scale: float) -> complex:
        """Value multiplied by ``exp(-log_scale)`` as a native complex."""
        if self.is_zero:
            return 0j
        return cmath.rect(math.exp(self.log_magnitude - log_scale), self.phase)

    def __mul__(self, other):
        if not isinstance(other, ScaledComplex):
            other = ScaledComplex.from_complex(complex(other))
        if self.is_zero or other.is_zero:
            return ScaledComplex.zero()
        return ScaledComplex(self.log_magnitude + other.log_magnitude,
                             _wrap(self.phase + other.phase))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, ScaledComplex):
            other = ScaledComplex.from_complex(complex(other))
        if other.is_zero:
            raise ZeroDivisionError("division by a zero ScaledComplex")
        if self.is_zero:
            return ScaledComplex.zero()
        return ScaledComplex(self.log_magnitude - other.log_magnitude,
                             _wrap(self.phase - other.phase))

    def __neg__(self):
        return ScaledComplex(self.log_magnitude, _wrap(self.phase + math.pi))

    def __add__(self, other):
        if not isinstance(other, ScaledComplex):
            other = ScaledComplex.from_complex(complex(other))
        if self.is_zero:
            return other
        if other.is_zero:
            return self
        big, small = (self, other) if self.log_magnitude >= other.log_magnitude else (other, self)
        w = 1.0 + cmath.rect(math.exp(small.log_magnitude - big.log_magnitude),
                             small.phase - big.phase)
        if w == 0:
            return ScaledComplex.zero()
        return ScaledComplex(big.log_magnitude + math.log(abs(w)),
                             _wrap(big.phase + cmath.phase(w)))

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, ScaledComplex):
            other = ScaledComplex.from_complex(complex(other))
        return self + (-other)

    def __abs__(self):
        return math.exp(self.log_magnitude) if not self.is_zero else 0.0


def double_exponential(z: complex) -> ScaledComplex:
    """``exp(exp(z))`` as a ScaledComplex; finite for any finite ``z``."""
    z = complex(z)
    ex = math.exp(z.real)
    return ScaledComplex(ex * math.cos(z.imag), _wrap(ex * math.sin(z.imag)))


def double_exponential_scaled(z, log_scale=0.0):
    """Vectorised ``exp(exp(z) - log_scale)``; caller picks ``log_scale`` to stay in range."""
    z = np.asarray(z, dtype=complex)
    ez = np.exp(z)
    return np.exp(ez.real - log_scale) * np.exp(1j * np.remainder(ez.imag, TWO_PI))


# --------------------------------------------------------------------------
# smooth cut-off
# --------------------------------------------------------------------------


def _smoothstep(t):
    t = np.clip(t, 0.0, 1.0)
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t))


def _smoothstep_prime(t):
    inside = (t > 0.0) & (t < 1.0)
    t = np.clip(t, 0.0, 1.0)
    return np.where(inside, 30.0 * t * t * (1.0 - t) ** 2, 0.0)


@dataclass(frozen=True)
class CutoffSpec:
    """Tensor-product cut-off ``chi(x, y) = a(x) b(y)`` built from C2 quintic ramps.

    ``chi = 1`` on ``{x > inner_left, |y| <= inner_half_height}`` and
    ``chi = 0`` outside ``{x > outer_left, |y| <= outer_half_height}``.
    """

    inner_left: float = 0.0
    outer_left: float = -1.0
    inner_half_height: float = 2.0 * math.pi / 3.0
    outer_half_height: float = 4.0 * math.pi / 3.0

    @property
    def x_width(self) -> float:
        return self.inner_left - self.outer_left

    @property
    def y_width(self) -> float:
        return self.outer_half_height - self.inner_half_height

    @property
    def dbar_bound(self) -> float:
        # max |S'| = 15/8 for the quintic ramp
        ax = 15.0 / 8.0 / self.x_width
        by = 15.0 / 8.0 / self.y_width
        return 0.5 * math.hypot(ax, by)

    def ramps(self, x, y):
        tx = (np.asarray(x, float) - self.outer_left) / self.x_width
        ty = (self.outer_half_height - np.abs(np.asarray(y, float))) / self.y_width
        a, b = _smoothstep(tx), _smoothstep(ty)
        da = _smoothstep_prime(tx) / self.x_width
        db = -np.sign(y) * _smoothstep_prime(ty) / self.y_width
        return a, da, b, db

    def in_transition(self, z):
        """True where ``dbar chi`` may be non-zero (the closed layer between the strips)."""
        z = np.asarray(z, dtype=complex)
        x, ay = z.real, np.abs(z.imag)
        in_outer = (x > self.outer_left) & (ay < self.outer_half_height)
        in_inner = (x >= self.inner_left) & (ay <= self.inner_half_height)
        return in_outer & ~in_inner


def cutoff_chi(spec: CutoffSpec, zeta):
    """Return ``(chi, dbar_chi)`` with ``dbar = (d/dx + i d/dy) / 2``."""
    zeta = np.asarray(zeta, dtype=complex)
    a, da, b, db = spec.ramps(zeta.real, zeta.imag)
    chi = a * b
    dbar = 0.5 * (da * b + 1j * a * db)
    if chi.ndim == 0:
        return float(chi), complex(dbar)
    return chi, dbar


# --------------------------------------------------------------------------
# Legendre derivatives
# --------------------------------------------------------------------------


def log_legendre_derivative_at_one(N: int, j: int) -> float:
    """``log L_N^{(j)}(1) = log[(N+j)! / (2^j j! (N-j)!)]``."""
    if N < 0:
        raise DomainError("Legendre degree must be non-negative")
    if j > N:
        return -math.inf
    return float(gammaln(N + j + 1) - j * math.log(2.0) - gammaln(j + 1) - gammaln(N - j + 1))


def gegenbauer_normalized(n: int, alpha: float, t):
    """``C_n^alpha(t) / C_n^alpha(1)`` by its bounded three-term recurrence."""
    t = np.asarray(t, dtype=float)
    g_prev = np.ones_like(t)
    if n == 0:
        return g_prev
    g = t.copy()
    for m in range(2, n + 1):
        g_prev, g = g, (2.0 * t * (m + alpha - 1.0) * g - (m - 1.0) * g_prev) / (m + 2.0 * alpha - 1.0)
    return g


def normalized_legendre_derivative(N: int, j: int, x):
    """``L_N^{(j)}(x) / L_N^{(j)}(1)``; bounded by 1 on [-1, 1]."""
    if N < 0:
        raise DomainError("Legendre degree must be non-negative")
    if j > N:
        return np.zeros_like(np.asarray(x, dtype=float))
    return gegenbauer_normalized(N - j, j + 0.5, x)


def legendre_derivative(N: int, j: int, x):
    """j-th derivative of the degree-N Legendre polynomial.

    Computed as ``L_N^{(j)}(1)`` (closed form, in logs) times the bounded
    normalised Gegenbauer ratio, so the only failure mode is a result that
    does not fit in a double, which raises OverflowError.
    """
    if N < 0:
        raise DomainError("Legendre degree must be non-negative")
    if j < 0:
        raise DomainError("derivative order must be non-negative")
    x_arr = np.asarray(x, dtype=float)
    if j > N:
        out = np.zeros_like(x_arr)
        return float(out) if out.ndim == 0 else out
    log_a = log_legendre_derivative_at_one(N, j)
    if log_a > 709.0:
        raise OverflowError(f"L_{N}^({j}) reaches exp({log_a:.1f}); use the normalised form")
    out = math.exp(log_a) * normalized_legendre_derivative(N, j, x_arr)
    return float(out) if out.ndim == 0 else out


def legendre_table(N: int, J: int, x):
    """All derivative columns ``L_N^{(j)}(x)``, j = 0..J, by the jointly differentiated recurrence.

    ``(n+1) L_{n+1}^{(j)} = (2n+1) (x L_n^{(j)} + j L_n^{(j-1)}) - n L_{n-1}^{(j)}``.
    Returns an array of shape ``(J + 1,) + x.shape``.
    """
    if N < 0:
        raise DomainError("Legendre degree must be non-negative")
    x = np.asarray(x, dtype=float)
    J = min(J, N) if N > 0 else 0
    prev = np.zeros((J + 1,) + x.shape)
    prev[0] = 1.0
    if N == 0:
        return prev
    cur = np.zeros_like(prev)
    cur[0] = x
    if J >= 1:
        cur[1] = 1.0
    for n in range(1, N):
        nxt = np.empty_like(cur)
        nxt[0] = ((2 * n + 1) * x * cur[0] - n * prev[0]) / (n + 1)
        for j in range(1, J + 1):
            nxt[j] = ((2 * n + 1) * (x * cur[j] + j * cur[j - 1]) - n * prev[j]) / (n + 1)
        prev, cur = cur, nxt
    return cur


@dataclass
class LegendreTable:
    """Cached derivative columns of ``L_N`` on a fixed set of abscissae."""

    N: int
    x: np.ndarray
    max_order: int = 0
    values: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.N < 1:
            raise DomainError("LegendreTable needs N >= 1")
        self.x = np.asarray(self.x, dtype=float)
        self.max_order = min(self.max_order, self.N)
        self.values = legendre_table(self.N, self.max_order, self.x)

    def __getitem__(self, j: int) -> np.ndarray:
        if j > self.N:
            return np.zeros_like(self.x)
        return self.values[j]


def legendre_ratio_defect(N: int, j: int, r):
    """``L_N^{(j)}(sqrt(1 - r^2)) / L_N^{(j)}(1) - 1`` without cancellation at small r.

    Uses the terminating hypergeometric series in ``y = (1 - t)/2`` when the
    terms contract quickly, the bounded recurrence otherwise.
    """
    r = np.asarray(r, dtype=float)
    n = N - j
    if j > N:
        return -np.ones_like(r)
    one_minus_t = r * r / (1.0 + np.sqrt(np.clip(1.0 - r * r, 0.0, None)))
    y = 0.5 * one_minus_t
    ratio0 = n * (n + 2 * j + 1) / (j + 1.0) if n > 0 else 0.0
    use_series = ratio0 * y < 0.25
    out = np.empty_like(r)
    if np.any(use_series):
        ys = y[use_series]
        term = np.ones_like(ys)
        total = np.zeros_like(ys)
        for k in range(n):
            term = term * (-(n - k)) * (n + 2 * j + 1 + k) / ((j + 1 + k) * (k + 1.0)) * ys
            total += term
            if np.all(np.abs(term) <= 1e-18 * np.maximum(np.abs(total), 1e-300)):
                break
        out[use_series] = total
    if np.any(~use_series):
        t = np.sqrt(np.clip(1.0 - r[~use_series] ** 2, 0.0, None))
        out[~use_series] = normalized_legendre_derivative(N, j, t) - 1.0
    return out


@dataclass(frozen=True)
class HarmonicPolynomial:
    """``u = Re sum_n c_n z**n`` on the plane; ``analytic`` gives the complex polynomial."""

    coefficients: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coefficients",
                           np.atleast_1d(np.asarray(self.coefficients, dtype=complex)))

    @classmethod
    def from_trig(cls, p, q) -> "HarmonicPolynomial":
        """From ``u(r e^{it}) = sum_{n>=1} r^n (p_n cos nt + q_n sin nt)``."""
        p, q = np.asarray(p, float), np.asarray(q, float)
        return cls(np.concatenate([[0.0], p - 1j * q]))

    @property
    def degree(self) -> int:
        nz = np.flatnonzero(self.coefficients)
        return int(nz[-1]) if nz.size else 0

    def analytic(self, z):
        return eval_series(CoefficientSeries(self.coefficients), z)

    def __call__(self, z):
        return np.real(self.analytic(z))

    def on_circle(self, r: float, n_theta: int) -> np.ndarray:
        """Values on ``n_theta`` equispaced points of ``|z| = r`` via one FFT."""
        c = self.coefficients
        if n_theta <= len(c) - 1:
            theta = TWO_PI * np.arange(n_theta) / n_theta
            return self(r * np.exp(1j * theta))
        spec = np.zeros(n_theta, dtype=complex)
        spec[: len(c)] = c * r ** np.arange(len(c))
        return np.real(np.fft.ifft(spec) * n_theta)
