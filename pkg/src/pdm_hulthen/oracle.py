"""Finite-difference eigensolver for the radial equation

    R'' + P R' + [theta f1 + delta f2 - omega f3 + eps(E) f4] R = 0,
    P = (1 + q) lambda u / d,  u = exp(-lambda rho),  d = 1 - q u,
    f1 = u^2/d^2,  f2 = u/d^2,  f3 = u/d,  f4 = 1/d.

Self-adjoint form: with mu = d^((1+q)/q) one has mu'/mu = P because
d' = q lambda u. Multiplying by mu therefore gives

    -(mu R')' - mu [theta f1 + delta f2 - omega f3] R = E (2 M0/hbar^2) mu f4 R,

i.e. A R = E B R with A symmetric (flux differencing, mu at half nodes) and
B diagonal and positive. Dirichlet conditions close both ends.

Eigenvalues come from bisection on Sturm sequences of the symmetrized
tridiagonal matrix B^-1/2 A B^-1/2, eigenvectors from inverse iteration.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import solve_banded
from scipy.optimize import brentq

from .core import (
    DomainSpec,
    FieldConfig,
    ModelParams,
    PhysicalConstants,
    deformation_denominator,
    rho_singularity,
)
from .errors import ConvergenceFailure, InvalidQ, NonMonotoneRefinement, NonPositiveWeight, OutOfDomain
from .nu import NATURAL, compute_aux

_EPS = np.finfo(float).eps
_MULTISECTION = 63
_MAX_SWEEPS = 40
_MAX_INVERSE_ITERATIONS = 100


@dataclass(frozen=True)
class RadialGrid:
    """Uniform grid with ``n_points`` nodes including both Dirichlet ends."""

    rho_min: float
    rho_max: float
    n_points: int

    def __post_init__(self):
        if self.n_points < 16:
            raise ValueError("n_points must be >= 16")
        if not self.rho_max > self.rho_min:
            raise ValueError("rho_max must exceed rho_min")

    @property
    def h(self) -> float:
        return (self.rho_max - self.rho_min) / (self.n_points - 1)

    @property
    def nodes(self) -> np.ndarray:
        return self.rho_min + self.h * np.arange(self.n_points)

    def with_spacing_extended(self, factor: float) -> "RadialGrid":
        """Same rho_min and spacing, rho_max pushed out by at least ``factor``."""
        intervals = math.ceil(factor * (self.n_points - 1))
        return RadialGrid(self.rho_min, self.rho_min + intervals * self.h, intervals + 1)


def default_grid(p: ModelParams, n_points: int = 4000, rho_min: float | None = None,
                 rho_max: float | None = None) -> RadialGrid:
    dom = DomainSpec.for_params(p, rho_min, rho_max)
    return RadialGrid(dom.rho_min, dom.rho_max, n_points)


def _check_q(p: ModelParams):
    if p.q == 0:
        raise InvalidQ("the radial equation needs q != 0")


def integrating_factor(rho, p: ModelParams):
    """mu(rho) = (1 - q e^{-lambda rho})^((1+q)/q)."""
    _check_q(p)
    d = np.asarray(deformation_denominator(rho, p.lam, p.q))
    mu = d ** ((1.0 + p.q) / p.q)
    return float(mu) if mu.ndim == 0 else mu


def log_integrating_factor(rho, p: ModelParams):
    """ln mu = ((1 + q)/q) ln(1 - q e^{-lambda rho}), accurate where mu is close to 1."""
    _check_q(p)
    r = np.asarray(rho, dtype=float)
    deformation_denominator(r, p.lam, p.q)
    out = (1.0 + p.q) / p.q * np.log1p(-p.q * np.exp(-p.lam * r))
    return float(out) if out.ndim == 0 else out


def drift_coefficient(rho, p: ModelParams):
    """First-derivative coefficient P(rho) = (1 + q) lambda e^{-lambda rho} / (1 - q e^{-lambda rho})."""
    r = np.asarray(rho, dtype=float)
    d = np.asarray(deformation_denominator(r, p.lam, p.q))
    out = (1.0 + p.q) * p.lam * np.exp(-p.lam * r) / d
    return float(out) if out.ndim == 0 else out


def equation_coefficients(p: ModelParams, f: FieldConfig, m: int,
                          consts: PhysicalConstants, rho) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(P, Q0, eps-coefficient) at ``rho`` where the equation reads R'' + P R' + (Q0 + E k f4) R = 0.

    The third array already includes the mass factor k = 2 M0 / hbar^2.
    """
    aux = compute_aux(p, f, m, consts)
    r = np.asarray(rho, dtype=float)
    u = np.exp(-p.lam * r)
    d = np.asarray(deformation_denominator(r, p.lam, p.q))
    q0 = aux.theta * u * u / d ** 2 + aux.delta * u / d ** 2 - aux.omega * u / d
    drift = (1.0 + p.q) * p.lam * u / d
    return drift, q0, aux.mass_factor / d


@dataclass(frozen=True)
class SLProblem:
    """Discretization data for -(mu R')' - potential_term R = E weight R.

    ``mu``, ``potential_term`` and ``weight`` are sampled on every node;
    ``mu_half`` on the ``n_points - 1`` midpoints.
    """

    grid: RadialGrid
    mu: np.ndarray
    mu_half: np.ndarray
    potential_term: np.ndarray
    weight: np.ndarray

    def matrices(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Interior (diag of A, off-diagonal of A, diag of B)."""
        h2 = self.grid.h ** 2
        left, right = self.mu_half[:-1], self.mu_half[1:]
        diag = (left + right) / h2 - self.potential_term[1:-1]
        off = -self.mu_half[1:-1] / h2
        return diag, off, self.weight[1:-1]


def build_sl_problem(p: ModelParams, f: FieldConfig, m: int, consts: PhysicalConstants,
                     grid: RadialGrid) -> SLProblem:
    _check_q(p)
    if grid.rho_min <= rho_singularity(p) or grid.rho_min <= 0:
        raise OutOfDomain(
            f"grid starts at {grid.rho_min!r}, at or below the singular radius {rho_singularity(p)!r}"
        )
    rho = grid.nodes
    _, q0, eps_coef = equation_coefficients(p, f, m, consts, rho)
    mu = integrating_factor(rho, p)
    mu_half = integrating_factor(rho[:-1] + 0.5 * grid.h, p)
    weight = mu * eps_coef
    if not np.all(weight[1:-1] > 0):
        raise NonPositiveWeight("weight must be positive at every interior node")
    return SLProblem(grid, mu, mu_half, mu * q0, weight)


def free_particle_problem(grid: RadialGrid) -> SLProblem:
    """-R'' = E R with Dirichlet ends; eigenvalues (j pi / L)^2."""
    n = grid.n_points
    return SLProblem(grid, np.ones(n), np.ones(n - 1), np.zeros(n), np.ones(n))


@dataclass(frozen=True)
class EigenSolution:
    """Lowest eigenpairs. ``eigenvectors[k]`` spans all grid nodes (zero at both ends)
    and is B-normalized; its largest-magnitude entry is positive."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    grid: RadialGrid


def _sturm_counts(d: np.ndarray, e2: np.ndarray, shifts: np.ndarray, pivmin: float) -> np.ndarray:
    """Number of eigenvalues below each shift (negative pivots of LDL^T of T - x I)."""
    count = np.zeros(shifts.shape, dtype=np.int64)
    t = d[0] - shifts
    t[np.abs(t) < pivmin] = -pivmin
    count += t < 0
    for i in range(1, d.size):
        t = (d[i] - shifts) - e2[i - 1] / t
        t[np.abs(t) < pivmin] = -pivmin
        count += t < 0
    return count


def _bisect_lowest(d: np.ndarray, e: np.ndarray, k: int) -> np.ndarray:
    e2 = e * e
    radius = np.zeros_like(d)
    radius[:-1] += np.abs(e)
    radius[1:] += np.abs(e)
    lo0 = float(np.min(d - radius))
    hi0 = float(np.max(d + radius))
    span = max(abs(lo0), abs(hi0), 1.0)
    lo0 -= 2 * _EPS * span * d.size
    hi0 += 2 * _EPS * span * d.size
    pivmin = np.finfo(float).tiny * max(1.0, float(np.max(e2)) if e2.size else 1.0)
    abstol = 4 * _EPS * span * 1e-3

    # interval j brackets eigenvalue j: count(lo) <= j < count(hi)
    lo = np.full(k, lo0)
    hi = np.full(k, hi0)
    fractions = np.arange(1, _MULTISECTION + 1) / (_MULTISECTION + 1)
    for _ in range(_MAX_SWEEPS):
        width = hi - lo
        active = width > 2 * _EPS * np.maximum(np.abs(lo), np.abs(hi)) + abstol
        if not active.any():
            break
        shifts = lo[:, None] + width[:, None] * fractions[None, :]
        counts = _sturm_counts(d, e2, shifts.ravel(), pivmin).reshape(shifts.shape)
        for j in np.flatnonzero(active):
            below = np.flatnonzero(counts[j] <= j)
            above = np.flatnonzero(counts[j] > j)
            new_lo = shifts[j, below[-1]] if below.size else lo[j]
            new_hi = shifts[j, above[0]] if above.size else hi[j]
            lo[j], hi[j] = new_lo, new_hi
    return 0.5 * (lo + hi)


def _inverse_iteration(d, e, shift, previous, tol=1e-13):
    n = d.size
    ab = np.zeros((3, n))
    ab[0, 1:] = e
    ab[2, :-1] = e
    scale = max(float(np.max(np.abs(d))), 1.0)
    sigma = shift + 10 * _EPS * scale
    ab[1] = d - sigma
    rng = np.random.default_rng(12345 + len(previous))
    x = rng.uniform(0.5, 1.5, n)
    x /= np.linalg.norm(x)
    for it in range(_MAX_INVERSE_ITERATIONS):
        y = solve_banded((1, 1), ab, x, check_finite=False)
        for v in previous:
            y -= np.dot(v, y) * v
        nrm = np.linalg.norm(y)
        if not np.isfinite(nrm) or nrm == 0:
            raise ConvergenceFailure("inverse iteration broke down")
        y /= nrm
        if np.dot(y, x) < 0:
            y = -y
        change = np.linalg.norm(y - x)
        x = y
        if change < tol * math.sqrt(n) and it >= 1:
            return x
    raise ConvergenceFailure(f"inverse iteration did not converge in {_MAX_INVERSE_ITERATIONS} steps")


def solve_eigenproblem(slp: SLProblem, k: int) -> EigenSolution:
    """Lowest ``k`` eigenpairs of A R = E B R."""
    diag, off, w = slp.matrices()
    n = diag.size
    if not 1 <= k < n:
        raise ValueError(f"k must be in [1, {n - 1}]")
    s = 1.0 / np.sqrt(w)
    d = diag * s * s
    e = off * s[:-1] * s[1:]
    values = _bisect_lowest(d, e, k)
    vectors = []
    for j in range(k):
        v = _inverse_iteration(d, e, values[j], vectors)
        vectors.append(v)
    full = np.zeros((k, n + 2))
    for j, v in enumerate(vectors):
        r = v * s
        if r[np.argmax(np.abs(r))] < 0:
            r = -r
        full[j, 1:-1] = r
    return EigenSolution(values, full, slp.grid)


def solve_radial(p: ModelParams, f: FieldConfig, m: int, consts: PhysicalConstants = NATURAL,
                 grid: RadialGrid | None = None, k: int = 3) -> EigenSolution:
    grid = grid if grid is not None else default_grid(p)
    return solve_eigenproblem(build_sl_problem(p, f, m, consts, grid), k)


def b_inner(slp: SLProblem, r1: np.ndarray, r2: np.ndarray) -> float:
    """Discrete weighted inner product sum_i w_i R1_i R2_i over interior nodes."""
    return float(np.sum(slp.weight[1:-1] * r1[1:-1] * r2[1:-1]))


def residual_norm(energy: float, R: np.ndarray, p: ModelParams, f: FieldConfig, m: int,
                  consts: PhysicalConstants, grid: RadialGrid) -> float:
    """max over interior nodes of |R'' + P R' + (Q0 + eps(E) f4) R|, divided by max |R|.

    Derivatives are second-order central differences.
    """
    R = np.asarray(R, dtype=float)
    peak = float(np.max(np.abs(R))) if R.size else 0.0
    if peak == 0.0:
        return 0.0
    h = grid.h
    rho = grid.nodes[1:-1]
    drift, q0, eps_coef = equation_coefficients(p, f, m, consts, rho)
    d2 = (R[2:] - 2.0 * R[1:-1] + R[:-2]) / h ** 2
    d1 = (R[2:] - R[:-2]) / (2.0 * h)
    res = d2 + drift * d1 + (q0 + energy * eps_coef) * R[1:-1]
    return float(np.max(np.abs(res)) / peak)


def equation_scale(energy: float, R: np.ndarray, p: ModelParams, f: FieldConfig, m: int,
                   consts: PhysicalConstants, grid: RadialGrid) -> float:
    """max over interior nodes of |(Q0 + eps(E) f4) R| / max |R|, the natural size of a residual."""
    R = np.asarray(R, dtype=float)
    peak = float(np.max(np.abs(R))) if R.size else 0.0
    if peak == 0.0:
        return 0.0
    _, q0, eps_coef = equation_coefficients(p, f, m, consts, grid.nodes[1:-1])
    return float(np.max(np.abs((q0 + energy * eps_coef) * R[1:-1])) / peak)


def count_nodes(R) -> int:
    """Strict sign changes between consecutive entries, ignoring |R| < 1e-12 max|R|."""
    R = np.asarray(R, dtype=float)
    if R.size == 0:
        return 0
    peak = np.max(np.abs(R))
    if peak == 0:
        return 0
    signs = np.sign(R[np.abs(R) >= 1e-12 * peak])
    return int(np.count_nonzero(signs[1:] != signs[:-1]))


def richardson_order(steps: Sequence[float], values: Sequence[float]) -> float:
    """Order p with v(h) = v* + C h^p fitted exactly through three (h, v) pairs.

    Negative p means the sequence diverges under refinement.
    """
    h1, h2, h3 = steps
    v1, v2, v3 = values
    num, den = v1 - v2, v2 - v3
    if den == 0 or num == 0 or num / den <= 0:
        raise NonMonotoneRefinement("refinement sequence is not monotone; no order can be fitted")
    target = num / den

    def g(pw):
        if abs(pw) < 1e-12:
            return math.log(h1 / h2) / math.log(h2 / h3) - target
        return (h1 ** pw - h2 ** pw) / (h2 ** pw - h3 ** pw) - target

    for lo, hi in ((1e-9, 30.0), (-30.0, -1e-9)):
        if g(lo) * g(hi) < 0:
            return brentq(g, lo, hi, xtol=1e-12)
    raise NonMonotoneRefinement(f"no order in [-30, 30] fits the observed ratio {target!r}")


def _check_doubling(resolutions: Sequence[int]):
    if len(resolutions) < 3:
        raise ValueError("need at least three resolutions")
    for a, b in zip(resolutions, resolutions[1:]):
        if not (b == 2 * a or b - 1 == 2 * (a - 1)):
            raise ValueError(f"resolutions must double, got {a} -> {b}")


def richardson_orders(solve_at: Callable[[int], np.ndarray], resolutions: Sequence[int],
                      steps: Callable[[int], float]) -> np.ndarray:
    """Orders per tracked level from the three finest resolutions.

    ``solve_at(n)`` returns eigenvalues at ``n`` points, ``steps(n)`` the spacing.
    """
    _check_doubling(resolutions)
    res = list(resolutions)[-3:]
    vals = np.array([solve_at(n) for n in res])
    hs = [steps(n) for n in res]
    return np.array([richardson_order(hs, vals[:, j]) for j in range(vals.shape[1])])


def convergence_study(p: ModelParams, f: FieldConfig, m: int, consts: PhysicalConstants,
                      resolutions: Sequence[int], levels: int = 3,
                      rho_min: float | None = None, rho_max: float | None = None) -> np.ndarray:
    """Richardson-estimated convergence order of the lowest ``levels`` eigenvalues."""
    _check_doubling(resolutions)

    def grid(n):
        return default_grid(p, n, rho_min, rho_max)

    return richardson_orders(
        lambda n: solve_radial(p, f, m, consts, grid(n), levels).eigenvalues,
        resolutions, lambda n: grid(n).h)
