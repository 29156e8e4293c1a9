"""Radial eigenfunctions as edge factors times a Jacobi polynomial in
z = 1 / (1 - q e^{-lambda rho}).

Under this map the radial equation becomes

    F'' + [-1/q - (1 - 1/q) z] / (z (1 - z)) F'
        + [A z^2 + B z + C] / (lambda^2 z^2 (1 - z)^2) F = 0,

    A = theta/q^2 + delta/q
    B = -2 theta/q^2 - delta/q - omega/q + eps(E)
    C = theta/q^2 + omega/q,

a Riemann equation with regular singular points z = 0, 1 and infinity. The
indicial equations are

    z = 0:        a^2 - (1 + 1/q) a + C/lambda^2 = 0
    z = 1:        b^2 = -eps(E)/lambda^2
    z -> inf:     s^2 - s/q + A/lambda^2 = 0       (F ~ z^s)

For q >= 1 the physical radii map onto z in (1, inf): rho -> inf is z = 1 and
the inner end (rho_s = ln q / lambda) is z = inf. Writing
F = z^a |1 - z|^b y(z) leaves a hypergeometric equation for y, which has the
polynomial solution y = P_n^(2a - 1 - 1/q, 2b)(1 - 2z) exactly when
a + b + n equals the regular exponent s_- at infinity. With a the smaller
root at z = 0 this fixes b = s_- - a - n > 0 and hence the energy.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import simpson

from .core import FieldConfig, ModelParams, PhysicalConstants, deformation_denominator
from .errors import (
    DivergentNorm,
    InvalidQ,
    NonRealCoefficient,
    OutOfDomain,
    ResidualTooLarge,
)
from .nu import NATURAL, AuxCoefficients, EnergyLevel, NuCoefficients, compute_aux, compute_c_table, compute_xi
from .oracle import RadialGrid, equation_scale, residual_norm

# default certification threshold, relative to the potential-term size
DEFAULT_RESIDUAL_RTOL = 2e-2


@dataclass(frozen=True)
class ZMap:
    lam: float
    q: float

    def to_z(self, rho):
        d = np.asarray(deformation_denominator(rho, self.lam, self.q))
        z = 1.0 / d
        return float(z) if z.ndim == 0 else z

    def to_rho(self, z):
        z = np.asarray(z, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = ((z - 1.0) / z) / self.q
        if np.any(~(ratio > 0)):
            raise OutOfDomain("z lies outside the image of rho > rho_s")
        rho = -np.log(ratio) / self.lam
        return float(rho) if rho.ndim == 0 else rho


def map_rho_to_z(rho, p: ModelParams):
    return ZMap(p.lam, p.q).to_z(rho)


def map_z_to_rho(z, p: ModelParams):
    return ZMap(p.lam, p.q).to_rho(z)


def _jacobi_sum(n: int, alpha: float, beta: float, x: np.ndarray) -> np.ndarray:
    # sum_s C(n+alpha, n-s) C(n+beta, s) ((x-1)/2)^s ((x+1)/2)^(n-s)
    def binom(top, k):
        out = 1.0
        for i in range(1, k + 1):
            out *= (top - k + i) / i
        return out

    xm, xp = (x - 1.0) / 2.0, (x + 1.0) / 2.0
    total = np.zeros_like(x)
    for s in range(n + 1):
        total += binom(n + alpha, n - s) * binom(n + beta, s) * xm ** s * xp ** (n - s)
    return total


def jacobi_polynomial(n: int, alpha: float, beta: float, x):
    """P_n^(alpha, beta)(x) by the three-term recurrence.

    Defined for every real alpha, beta and x (also outside [-1, 1]). When the
    recurrence hits a zero leading coefficient (alpha + beta a small negative
    integer) the explicit binomial sum is used instead.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    xa = np.asarray(x, dtype=float)
    scalar = xa.ndim == 0
    xa = np.atleast_1d(xa)
    ab = alpha + beta
    p_prev = np.ones_like(xa)
    if n == 0:
        out = p_prev
    else:
        p_cur = (alpha + 1.0) + (ab + 2.0) * (xa - 1.0) / 2.0
        for k in range(2, n + 1):
            a1 = 2.0 * k * (k + ab) * (2.0 * k + ab - 2.0)
            if a1 == 0.0:
                p_cur = _jacobi_sum(n, alpha, beta, xa)
                break
            a2 = (2.0 * k + ab - 1.0) * ((2.0 * k + ab) * (2.0 * k + ab - 2.0) * xa + alpha ** 2 - beta ** 2)
            a3 = 2.0 * (k + alpha - 1.0) * (k + beta - 1.0) * (2.0 * k + ab)
            p_prev, p_cur = p_cur, (a2 * p_cur - a3 * p_prev) / a1
        out = p_cur
    return float(out[0]) if scalar else out


@dataclass(frozen=True)
class IndicialExponents:
    """Edge exponents: ``a0`` at z = 0, ``a1`` at z = 1."""

    a0: float
    a1: float


def indicial_exponents(nu: NuCoefficients, q: float) -> IndicialExponents:
    """Exponents read off the c-table: a0 = sqrt(xi0), a1 = 1/(2q) + sqrt(c9)."""
    if nu.xi0 < 0:
        raise NonRealCoefficient("sqrt(xi0)", nu.xi0)
    if nu.c9 < 0:
        raise NonRealCoefficient("sqrt(c9)", nu.c9)
    return IndicialExponents(math.sqrt(nu.xi0), 1.0 / (2.0 * q) + math.sqrt(nu.c9))


@dataclass(frozen=True)
class OdeExponents:
    """Roots of the three indicial equations of the transformed radial equation.

    ``at_zero`` and ``at_infinity`` are (smaller, larger) pairs; ``at_one`` is
    the decaying root sqrt(-eps(E))/lambda, or None if no energy was given.
    """

    at_zero: tuple[float, float]
    at_infinity: tuple[float, float]
    at_one: float | None


def _roots(b: float, c: float, which: str) -> tuple[float, float]:
    # x^2 + b x + c = 0
    disc = b * b - 4.0 * c
    if disc < 0:
        raise NonRealCoefficient(which, disc)
    r = math.sqrt(disc)
    return (-b - r) / 2.0, (-b + r) / 2.0


def ode_exponents(aux: AuxCoefficients, q: float, lam: float,
                  energy: float | None = None) -> OdeExponents:
    if q == 0:
        raise InvalidQ("q = 0 collapses the z substitution")
    l2 = lam * lam
    big_a = aux.theta / q ** 2 + aux.delta / q
    big_c = aux.theta / q ** 2 + aux.omega / q
    zero = _roots(-(1.0 + 1.0 / q), big_c / l2, "indicial discriminant at z=0")
    # a complex pair here is the inverse-square collapse at the inner edge
    inf = _roots(-1.0 / q, big_a / l2, "indicial discriminant at z=infinity")
    one = None
    if energy is not None:
        eps = aux.epsilon_of(energy)
        if eps > 0:
            raise NonRealCoefficient("sqrt(-eps(E))", -eps)
        one = math.sqrt(-eps) / lam
    return OdeExponents(zero, inf, one)


def inner_edge_collapse(p: ModelParams, f: FieldConfig, m: int,
                        consts: PhysicalConstants = NATURAL) -> bool:
    """True when the inner end is singular and its exponents are complex.

    Then the inverse-square attraction near rho_s makes the spectrum unbounded
    below, and finite-difference eigenvalues drift with the grid instead of
    converging.
    """
    if p.q < 1:
        return False
    try:
        ode_exponents(compute_aux(p, f, m, consts), p.q, p.lam)
    except NonRealCoefficient:
        return True
    return False


def _require_singular_inner_edge(q: float):
    if q < 1:
        raise InvalidQ("the polynomial reduction needs q >= 1, so that the inner end of the domain "
                       "is the singular point z = infinity")


def terminating_energy(n: int, m: int, p: ModelParams, f: FieldConfig,
                       consts: PhysicalConstants = NATURAL) -> EnergyLevel:
    """Energy at which the Jacobi factor of degree n terminates (source ``indicial``).

    Invalid (not raised) when b = s_- - a - n is not positive; raises
    NonRealCoefficient when an indicial pair is complex.
    """
    _require_singular_inner_edge(p.q)
    aux = compute_aux(p, f, m, consts)
    ex = ode_exponents(aux, p.q, p.lam)
    b = ex.at_infinity[0] - ex.at_zero[0] - n
    if not b > 0:
        return EnergyLevel(n, m, math.nan, None, False, "indicial")
    energy = -(p.lam * b) ** 2 / aux.mass_factor
    return EnergyLevel(n, m, energy, None, True, "indicial")


@dataclass(frozen=True)
class WavefunctionSample:
    grid: RadialGrid
    values: np.ndarray
    norm_constant: float
    level: EnergyLevel
    residual: float = math.nan


def _ode_values(level: EnergyLevel, p: ModelParams, aux: AuxCoefficients, z: np.ndarray) -> np.ndarray:
    _require_singular_inner_edge(p.q)
    ex = ode_exponents(aux, p.q, p.lam, level.value)
    a, b = ex.at_zero[0], ex.at_one
    alpha, beta = 2.0 * a - 1.0 - 1.0 / p.q, 2.0 * b
    return z ** a * np.abs(1.0 - z) ** b * jacobi_polynomial(level.n, alpha, beta, 1.0 - 2.0 * z)


def _tabulated_values(level: EnergyLevel, p: ModelParams, aux: AuxCoefficients, z: np.ndarray) -> np.ndarray:
    nu = compute_c_table(compute_xi(aux, p.q, p.lam, level.value), p.q)
    ex = indicial_exponents(nu, p.q)
    alpha, beta = 2.0 * ex.a0, 2.0 * ex.a1 - 1.0 / p.q
    return (np.abs(z) ** ex.a0 * np.abs(1.0 - z) ** ex.a1
            * jacobi_polynomial(level.n, alpha, beta, 1.0 - 2.0 * z))


def assemble_wavefunction(level: EnergyLevel, p: ModelParams, f: FieldConfig,
                          consts: PhysicalConstants, grid: RadialGrid, *,
                          tol: float | None = None, exponents: str = "ode") -> WavefunctionSample:
    """Sample, normalize and certify the level's radial function on ``grid``.

    ``exponents="ode"`` uses the indicial roots of the transformed radial
    equation; ``"tabulated"`` uses a0, a1 from the c-table. Either way the
    normalized sample must satisfy the radial equation: ResidualTooLarge is
    raised when ``residual_norm`` exceeds ``tol``. The default tolerance is
    ``DEFAULT_RESIDUAL_RTOL`` times the size of the potential term, see
    ``oracle.equation_scale``.
    """
    if not level.valid:
        raise ValueError("cannot assemble a wave function for an invalid level")
    aux = compute_aux(p, f, level.m, consts)
    z = np.asarray(map_rho_to_z(grid.nodes, p))
    if exponents == "ode":
        values = _ode_values(level, p, aux, z)
    elif exponents == "tabulated":
        values = _tabulated_values(level, p, aux, z)
    else:
        raise ValueError(f"unknown exponent source {exponents!r}")
    if not np.all(np.isfinite(values)):
        raise DivergentNorm("wave function overflowed on the grid")
    sample = normalize(WavefunctionSample(grid, values, 1.0, level))
    res = residual_norm(level.value, sample.values, p, f, level.m, consts, grid)
    if tol is None:
        tol = DEFAULT_RESIDUAL_RTOL * equation_scale(level.value, sample.values, p, f, level.m, consts, grid)
    if not res <= tol:
        raise ResidualTooLarge(res, tol)
    return replace(sample, residual=res)


def norm_integral(sample: WavefunctionSample) -> float:
    """Composite Simpson estimate of the integral of R^2 rho d rho."""
    return float(simpson(sample.values ** 2 * sample.grid.nodes, x=sample.grid.nodes))


def normalize(sample: WavefunctionSample) -> WavefunctionSample:
    """Scale so the planar norm (measure rho d rho) is one; ``norm_constant`` tracks the factor."""
    total = norm_integral(sample)
    if not (total > 0 and math.isfinite(total)):
        raise DivergentNorm(f"norm integral is {total!r}")
    scale = 1.0 / math.sqrt(total)
    return replace(sample, values=sample.values * scale, norm_constant=sample.norm_constant * scale)
