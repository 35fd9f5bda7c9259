"""Upper estimates of the least positivity area in the class of harmonic u with u(0) = 0 and at most d boundary sign changes.

Search space: ``u(r e^{it}) = sum_{n<=d} r^n (p_n cos nt + q_n sin nt)``. Each
restart runs Nelder-Mead in a random low-dimensional affine subspace through
the start candidate; along that subspace u is linear in the parameters, so the
surrogate objective (positive fraction of a fixed equal-area polar grid, with a
dense boundary scan for feasibility) is a precomputed matrix-vector product.
Every restart winner is re-measured with the exact metrics before it can be
reported.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from ._parallel import parallel_map
from .core import HarmonicPolynomial
from .errors import DegenerateInputError
from .metrics import TWO_PI, UNIT_DISC, AreaEstimate, positivity_area, sign_changes_on_circle

CAVEAT = ("upper estimate: search restricted to degree <= d; the gap to the infimum over all "
          "harmonic functions with at most d sign changes is not quantified")


def canonical_d(d: int) -> int:
    """Sign changes on a circle come in pairs, so class d equals class 2 floor(d/2)."""
    d = int(d)
    if d < 2:
        raise ValueError("d must be at least 2")
    return d - d % 2


@dataclass(frozen=True, eq=False)
class Candidate:
    p: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        q = np.asarray(self.q, dtype=float)
        if p.shape != q.shape or p.ndim != 1:
            raise ValueError("p and q must be 1-d arrays of equal length")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)

    @property
    def n_max(self) -> int:
        return self.p.size

    @property
    def polynomial(self) -> HarmonicPolynomial:
        return HarmonicPolynomial.from_trig(self.p, self.q)

    def __call__(self, z):
        return self.polynomial(z)

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate([self.p, self.q])

    @classmethod
    def from_vector(cls, v) -> "Candidate":
        v = np.asarray(v, dtype=float)
        n = v.size // 2
        return cls(v[:n], v[n:])

    @classmethod
    def from_analytic(cls, coefficients, n_max: int | None = None) -> "Candidate":
        """``Re sum a_n z^n``; the constant term is dropped."""
        a = np.asarray(coefficients, dtype=complex)[1:]
        n = n_max or a.size
        out = np.zeros(n, dtype=complex)
        out[: min(n, a.size)] = a[:n]
        return cls(out.real, -out.imag)

    def padded(self, n_max: int) -> "Candidate":
        if n_max < self.n_max and np.any(self.vector.reshape(2, -1)[:, n_max:]):
            raise ValueError("cannot truncate non-zero coefficients")
        p = np.zeros(n_max)
        q = np.zeros(n_max)
        k = min(n_max, self.n_max)
        p[:k], q[:k] = self.p[:k], self.q[:k]
        return Candidate(p, q)

    def normalized(self) -> "Candidate":
        m = float(np.max(np.abs(self.vector)))
        if m == 0:
            raise DegenerateInputError("zero candidate")
        return Candidate(self.p / m, self.q / m)

    def sign_changes(self) -> int:
        return sign_changes_on_circle(self.normalized().polynomial, 0j, 1.0, max(self.n_max, 1))

    def area(self, budget: int = 40_000, method: str = "grid-refined", seed=None) -> AreaEstimate:
        return positivity_area(self.normalized().polynomial, UNIT_DISC, budget, method=method, seed=seed)


def feasibility(candidate: Candidate, d: int) -> bool:
    if not np.any(candidate.vector):
        raise DegenerateInputError("zero candidate")
    return candidate.sign_changes() <= d


def fallback_start(d: int) -> Candidate:
    """``Re z^{d/2}``: exactly d sign changes and positive area pi/2."""
    d = canonical_d(d)
    p = np.zeros(d)
    p[d // 2 - 1] = 1.0
    return Candidate(p, np.zeros(d))


def warm_start(d: int, constructions=()) -> Candidate:
    """``Re P_N`` for the largest stored ``N <= d`` that is feasible for d, else the fallback."""
    d = canonical_d(d)
    for P in sorted(constructions, key=lambda P: P.degree, reverse=True):
        if P.degree > d:
            continue
        c = Candidate.from_analytic(P.coefficients, d)
        if feasibility(c, d):
            return c
    return fallback_start(d)


@dataclass(frozen=True)
class EstimatorConfig:
    restarts: int = 20
    rounds: int = 2
    evaluations: int = 50_000
    subspace_dim: int = 8
    step: float = 0.2
    grid_radii: int = 64
    area_budget: int = 40_000
    seed: int = 0


@dataclass(frozen=True, eq=False)
class EstimateRecord:
    d: int
    area: AreaEstimate
    candidate: Candidate
    sign_changes: int
    construction_bound: float
    evaluations: int
    restarts: int
    seed: int
    start: str
    caveat: str = CAVEAT
    history: tuple = field(default=())

    @property
    def value(self) -> float:
        return self.area.value

    def revalidate(self, budget_factor: int = 2, mc_seed: int | None = None) -> tuple[bool, AreaEstimate]:
        """Re-measure the certificate at a larger budget; True iff feasible and within combined error bars."""
        if mc_seed is None:
            again = self.candidate.area(self.area.budget * budget_factor)
        else:
            again = self.candidate.area(self.area.budget * budget_factor, "monte-carlo", mc_seed)
        ok = self.candidate.sign_changes() <= self.d and self.area.agrees_with(again)
        return ok, again


# --------------------------------------------------------------------------
# surrogate objective
# --------------------------------------------------------------------------


class _Surrogate:
    """Positive fraction on a fixed equal-area grid, linear in the subspace coordinates."""

    def __init__(self, n_max: int, grid_radii: int):
        self.n_max = n_max
        self.n_theta = max(256, 1 << math.ceil(math.log2(8 * n_max)))
        self.n_circle = max(1024, 1 << math.ceil(math.log2(64 * n_max)))
        self.r = np.sqrt((np.arange(grid_radii) + 0.5) / grid_radii)

    def _rows(self, vecs, n_theta, radii):
        vecs = np.atleast_2d(vecs)
        n = self.n_max
        c = vecs[:, :n] - 1j * vecs[:, n:]
        k = np.arange(1, n + 1)
        shift = np.exp(1j * k * (math.pi / n_theta))  # half-cell offset avoids symmetric zeros
        spec = np.zeros((vecs.shape[0], radii.size, n_theta), dtype=complex)
        spec[:, :, 1:n + 1] = c[:, None, :] * shift * radii[:, None] ** k
        return np.real(np.fft.ifft(spec, axis=2)) * n_theta

    def prepare(self, base, directions):
        self.grid_base = self._rows(base, self.n_theta, self.r)[0].ravel()
        self.grid_dirs = self._rows(directions, self.n_theta, self.r).reshape(len(directions), -1)
        self.circ_base = self._rows(base, self.n_circle, np.ones(1))[0, 0]
        self.circ_dirs = self._rows(directions, self.n_circle, np.ones(1))[:, 0, :]

    def evaluate(self, x, d):
        c = self.circ_base + x @ self.circ_dirs
        s = np.signbit(c)
        if np.count_nonzero(s != np.roll(s, 1)) > d or np.all(c == 0):
            return math.pi
        g = self.grid_base + x @ self.grid_dirs
        return math.pi * np.count_nonzero(g > 0) / g.size


def _restart(args):
    """One restart: chained simplex searches in fresh random subspaces until its evaluation share is spent."""
    d, start, cfg, index, evals = args
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, d, index]))
    base = start.normalized().vector
    n = start.n_max
    k = min(cfg.subspace_dim, 2 * n)
    modes = np.concatenate([np.arange(1, n + 1)] * 2)
    sur = _Surrogate(n, cfg.grid_radii)
    step = cfg.step * 0.6 ** (index % 4)
    best, used = None, 0
    while used < evals:
        scale = np.abs(base) + 1e-2 / modes
        dirs = rng.normal(size=(k, 2 * n)) * scale[None, :]
        dirs /= np.max(np.abs(dirs), axis=1, keepdims=True)
        sur.prepare(base, dirs)
        simplex = np.vstack([np.zeros(k), step * np.eye(k)])
        res = minimize(lambda x: sur.evaluate(x, d), np.zeros(k), method="Nelder-Mead",
                       options={"initial_simplex": simplex, "maxfev": evals - used, "xatol": 1e-9, "fatol": 0.0})
        used += int(res.nfev)
        if best is None or res.fun < best:
            best = float(res.fun)
            v = base + res.x @ dirs
            base = v / np.max(np.abs(v))
        else:
            step *= 0.5
    return best, used, Candidate.from_vector(base)


def _certify(c: Candidate, d: int, budget: int):
    if c.sign_changes() > d:
        return None
    return c.area(budget)


def minimize_area(d: int, config: EstimatorConfig = EstimatorConfig(), starts=(), constructions=()) -> EstimateRecord:
    """Best certified area in class d over restarts from the warm start and any extra ``starts``."""
    d = canonical_d(d)
    cfg = config
    pool = []  # (area, tie index, candidate, label)
    ws = warm_start(d, constructions)
    labels = ["fallback" if np.array_equal(ws.vector, fallback_start(d).vector) else "warm"]
    seeds = [ws]
    for s in starts:
        seeds.append(s.padded(d) if s.n_max <= d else s)
        labels.append("chained")
    for i, (s, lab) in enumerate(zip(seeds, labels)):
        est = _certify(s, d, cfg.area_budget)
        if est is not None:
            pool.append((est.value, -1 - i, s.normalized(), lab, est))
    if not pool:
        raise RuntimeError(f"no feasible start for d={d}")
    construction_bound = min(
        [math.pi / 2] + [p[0] for p in pool if p[3] == "warm"]
    )
    per_round = max(1, cfg.restarts // max(1, cfg.rounds))
    evals = max(1, cfg.evaluations // max(1, cfg.restarts))
    used = 0
    history = []
    index = 0
    for _ in range(max(1, cfg.rounds)):
        best = min(pool, key=lambda t: (t[0], t[1]))
        jobs = [(d, best[2], cfg, index + j, evals) for j in range(per_round)]
        index += per_round
        for (job, (sval, nfev, cand)) in zip(jobs, parallel_map(_restart, jobs)):
            used += nfev
            est = _certify(cand, d, cfg.area_budget)
            history.append((job[3], float(sval), None if est is None else est.value))
            if est is not None:
                pool.append((est.value, job[3], cand, "restart", est))
    best = min(pool, key=lambda t: (t[0], t[1]))
    _, _, cand, label, est = best
    return EstimateRecord(d, est, cand, cand.sign_changes(), construction_bound, used, index, cfg.seed,
                          label, CAVEAT, tuple(history))


def sweep(ds, config: EstimatorConfig = EstimatorConfig(), constructions=()) -> list[EstimateRecord]:
    """Classes in increasing d, each also seeded with every earlier optimum (nested classes)."""
    out: list[EstimateRecord] = []
    for d in sorted({canonical_d(x) for x in ds}):
        rec = minimize_area(d, config, starts=[r.candidate for r in out], constructions=constructions)
        out.append(rec)
    return out
