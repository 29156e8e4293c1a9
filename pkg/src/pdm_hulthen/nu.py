"""Nikiforov-Uvarov algebra for the radial equation.

Every intermediate symbol is evaluated exactly as tabulated in the reference
NU derivation: the auxiliary coefficients theta, delta, omega, epsilon(E); the
xi identifications and the thirteen c-constants; the W-constants and the
closed-form energy with both signs. Energies are obtained two ways:

* ``energy_closed_form`` evaluates the tabulated closed form (flagged invalid,
  never raised, when its discriminant is negative);
* ``energy_from_quantization`` root-finds the parametric NU quantization
  condition assembled from the c-table, which is linear in E through xi1.

Neither route is corrected here. Disagreements with the finite-difference
oracle are reported as data by ``pdm_hulthen.cli verify``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.optimize import brentq

from .core import FieldConfig, ModelParams, PhysicalConstants
from .errors import InvalidQ, NonRealCoefficient, NonRealOnBracket, NoRootInBracket

NATURAL = PhysicalConstants()

BRANCHES = ("plus", "minus")


@dataclass(frozen=True)
class AuxCoefficients:
    """theta, delta, omega and the mass factor 2 M0 / hbar^2 (so that epsilon(E) = factor * E)."""

    theta: float
    delta: float
    omega: float
    mass_factor: float

    def epsilon_of(self, energy):
        return self.mass_factor * energy


def _coupling(consts: PhysicalConstants) -> float:
    return consts.e_charge / (consts.hbar * consts.c_light)


def compute_aux(p: ModelParams, f: FieldConfig, m: int,
                consts: PhysicalConstants = NATURAL) -> AuxCoefficients:
    g = _coupling(consts)
    lam, b, phi = p.lam, f.b0, f.phi_ab
    theta = (-(m * lam) ** 2
             - 2.0 * m * g * b * lam
             - (g * b) ** 2
             - g * g * b * lam * phi / math.pi
             - (g * lam * phi / (2.0 * math.pi)) ** 2)
    delta = 2.0 * p.m0 * (p.v0 - p.v1 * lam) / consts.hbar ** 2
    omega = g * m * phi / math.pi
    return AuxCoefficients(theta=theta, delta=delta, omega=omega,
                           mass_factor=2.0 * p.m0 / consts.hbar ** 2)


def theta_identity_check(p: ModelParams, f: FieldConfig, m: int,
                         consts: PhysicalConstants = NATURAL) -> float:
    """|theta + (m lambda + g B0 + g lambda Phi / 2 pi)^2 - lambda^2 omega| with g = e / (hbar c).

    The completed square must reproduce theta to rounding, i.e. the result
    stays below 1e-12 * max(1, |theta|).
    """
    aux = compute_aux(p, f, m, consts)
    g = _coupling(consts)
    s = m * p.lam + g * f.b0 + g * p.lam * f.phi_ab / (2.0 * math.pi)
    return abs(aux.theta - (-s * s + p.lam ** 2 * aux.omega))


class Xi(NamedTuple):
    xi0: float
    xi1: float
    xi2: float


def _check_q(q: float):
    if q == 0:
        raise InvalidQ("q = 0 collapses the z substitution")


def compute_xi(aux: AuxCoefficients, q: float, lam: float, energy: float) -> Xi:
    _check_q(q)
    s = 1.0 / (q * lam * lam)
    xi2 = -(aux.theta - aux.delta) * s
    xi1 = (-2.0 * aux.theta - aux.delta - aux.omega + aux.epsilon_of(energy)) * s
    xi0 = -(aux.theta + aux.omega) * s
    return Xi(xi0, xi1, xi2)


@dataclass(frozen=True)
class NuCoefficients:
    xi0: float
    xi1: float
    xi2: float
    c1: float
    c2: float
    c3: float
    c4: float
    c5: float
    c6: float
    c7: float
    c8: float
    c9: float
    c10: float
    c11: float
    c12: float
    c13: float


def compute_c_table(xi: Xi, q: float) -> NuCoefficients:
    _check_q(q)
    xi0, xi1, xi2 = xi
    quarter = 1.0 / (4.0 * q * q)
    c9 = quarter + xi2 - xi1 + xi0
    if xi0 < 0:
        raise NonRealCoefficient("sqrt(xi0)", xi0)
    if c9 < 0:
        raise NonRealCoefficient("sqrt(c9)", c9)
    r0, r9 = math.sqrt(xi0), math.sqrt(c9)
    return NuCoefficients(
        xi0=xi0, xi1=xi1, xi2=xi2,
        c1=1.0,
        c2=2.0 - 1.0 / q,
        c3=1.0,
        c4=0.0,
        c5=-1.0 / (2.0 * q),
        c6=quarter + xi2,
        c7=-xi1,
        c8=xi0,
        c9=c9,
        c10=1.0 - 2.0 * r0,
        c11=2.0 + 2.0 * r9 - 2.0 * r0,
        c12=-r0,
        c13=-1.0 / (2.0 * q) - r9 + r0,
    )


@dataclass(frozen=True)
class WCoefficients:
    w1: float
    w2: float
    w3: float
    w4: float


def compute_w(aux: AuxCoefficients, q: float, lam: float) -> WCoefficients:
    _check_q(q)
    s = 1.0 / (q * lam * lam)
    arg = (-aux.theta - aux.omega) * s
    if arg < 0:
        raise NonRealCoefficient("sqrt((-theta - omega) / (q lambda^2))", arg)
    r = math.sqrt(arg)
    return WCoefficients(
        w1=1.0 - 2.0 * r,
        w2=2.0 * aux.delta * s + 1.0 / (4.0 * q * q),
        w3=aux.mass_factor * s,
        w4=-r + 1.0 / (2.0 * q) + (aux.delta - aux.omega) * s,
    )


@dataclass(frozen=True)
class EnergyLevel:
    """One eigenvalue with its provenance.

    ``source`` is one of closed_form, nu_root, oracle, indicial. ``branch`` is
    plus/minus for the closed form, nu_root for the quantization root and None
    otherwise. Invalid levels carry ``value = nan``.
    """

    n: int
    m: int
    value: float
    branch: str | None
    valid: bool
    source: str


def closed_form_value(w: WCoefficients, n: int, branch: str) -> float:
    """Tabulated closed-form energy for one sign; nan when the discriminant is negative."""
    if branch not in BRANCHES:
        raise ValueError(f"branch must be one of {BRANCHES}, got {branch!r}")
    k = n * n + w.w1 * n + w.w4
    l2 = (w.w1 + 2 * n) ** 2
    lead = (-l2 + 2.0 * k) / (2.0 * w.w3)
    disc = (l2 - 2.0 * k) / (4.0 * w.w3) - (k * k - w.w2 * l2) / w.w3 ** 2
    if not (disc >= 0 and math.isfinite(disc)):
        return math.nan
    root = math.sqrt(disc)
    return lead + root if branch == "plus" else lead - root


def energy_closed_form(n: int, m: int, branch: str, p: ModelParams, f: FieldConfig,
                       consts: PhysicalConstants = NATURAL) -> EnergyLevel:
    """Closed-form energy, one sign. Raises NonRealCoefficient when W1 is non-real."""
    w = compute_w(compute_aux(p, f, m, consts), p.q, p.lam)
    value = closed_form_value(w, n, branch)
    return EnergyLevel(n, m, value, branch, math.isfinite(value), "closed_form")


def closed_form_levels(n: int, m: int, p: ModelParams, f: FieldConfig,
                       consts: PhysicalConstants = NATURAL) -> dict[str, EnergyLevel]:
    """Both signs, with a non-real W1 turned into invalid levels instead of an exception."""
    try:
        w = compute_w(compute_aux(p, f, m, consts), p.q, p.lam)
    except NonRealCoefficient:
        return {b: EnergyLevel(n, m, math.nan, b, False, "closed_form") for b in BRANCHES}
    out = {}
    for b in BRANCHES:
        value = closed_form_value(w, n, b)
        out[b] = EnergyLevel(n, m, value, b, math.isfinite(value), "closed_form")
    return out


def _residual(aux: AuxCoefficients, q: float, lam: float, n: int, energy: float) -> float:
    c = compute_c_table(compute_xi(aux, q, lam, energy), q)
    return (c.c2 * n
            - (2 * n + 1) * c.c5
            + (2 * n + 1) * (math.sqrt(c.c9) + c.c3 * math.sqrt(c.c8))
            + n * (n - 1) * c.c3
            + c.c7
            + 2.0 * c.c3 * c.c8
            + 2.0 * math.sqrt(c.c8 * c.c9))


def nu_quantization_residual(energy: float, n: int, m: int, p: ModelParams, f: FieldConfig,
                             consts: PhysicalConstants = NATURAL) -> float:
    """Parametric NU energy condition evaluated on the c-table at trial energy E.

    Zero at an eigenvalue. Raises NonRealCoefficient where sqrt(xi0) or
    sqrt(c9) is non-real.
    """
    return _residual(compute_aux(p, f, m, consts), p.q, p.lam, n, energy)


def default_bracket(p: ModelParams, consts: PhysicalConstants = NATURAL) -> tuple[float, float]:
    lo = -50.0 * consts.hbar ** 2 * p.lam ** 2 / (2.0 * p.m0) * max(1.0, abs(p.q))
    return lo, -1e-8


def energy_from_quantization(n: int, m: int, p: ModelParams, f: FieldConfig,
                             consts: PhysicalConstants = NATURAL,
                             bracket: tuple[float, float] | None = None,
                             tol: float = 1e-12, scan_points: int = 400) -> EnergyLevel:
    """Root of ``nu_quantization_residual`` in E.

    The bracket is scanned at ``scan_points`` energies; points where the
    c-table is non-real split the scan. The lowest sign change is refined by
    Brent's method (at most 200 iterations).
    """
    _check_q(p.q)
    aux = compute_aux(p, f, m, consts)
    lo, hi = bracket if bracket is not None else default_bracket(p, consts)
    if not hi > lo:
        raise ValueError(f"empty bracket ({lo!r}, {hi!r})")

    def res(e):
        try:
            return _residual(aux, p.q, p.lam, n, e)
        except NonRealCoefficient:
            return math.nan

    grid = np.linspace(lo, hi, scan_points)
    vals = np.array([res(e) for e in grid])
    finite = np.isfinite(vals)
    if not finite.any():
        raise NonRealOnBracket(f"c-table non-real on the whole bracket [{lo:g}, {hi:g}]")
    for i in range(scan_points):
        if finite[i] and vals[i] == 0.0:
            return EnergyLevel(n, m, float(grid[i]), "nu_root", True, "nu_root")
        if i + 1 < scan_points and finite[i] and finite[i + 1] and vals[i] * vals[i + 1] < 0:
            scale = max(1.0, abs(grid[i]), abs(grid[i + 1]))
            root = brentq(res, grid[i], grid[i + 1], xtol=tol * scale, maxiter=200)
            return EnergyLevel(n, m, float(root), "nu_root", True, "nu_root")
    raise NoRootInBracket(f"no sign change of the n={n} condition on [{lo:g}, {hi:g}]")


@dataclass(frozen=True)
class SpectrumRow:
    n: int
    plus: EnergyLevel
    minus: EnergyLevel
    root: EnergyLevel


@dataclass(frozen=True)
class SpectrumTable:
    m: int
    rows: tuple[SpectrumRow, ...] = field(default_factory=tuple)

    def levels(self, column: str = "nu_root") -> list[EnergyLevel]:
        attr = {"plus": "plus", "minus": "minus", "nu_root": "root"}[column]
        return [getattr(r, attr) for r in self.rows]

    def energies(self, column: str = "nu_root") -> list[float]:
        return [lv.value for lv in self.levels(column) if lv.valid]

    def any_valid(self) -> bool:
        return any(lv.valid for r in self.rows for lv in (r.plus, r.minus, r.root))


def enumerate_bound_states(m: int, p: ModelParams, f: FieldConfig,
                           consts: PhysicalConstants = NATURAL, n_max: int = 0,
                           bracket: tuple[float, float] | None = None) -> SpectrumTable:
    """Closed-form (both signs) and quantization-root levels for n = 0..n_max.

    Nothing is dropped: failed levels are kept with ``valid=False``.
    """
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    rows = []
    for n in range(n_max + 1):
        cf = closed_form_levels(n, m, p, f, consts)
        try:
            root = energy_from_quantization(n, m, p, f, consts, bracket=bracket)
        except (NoRootInBracket, NonRealOnBracket):
            root = EnergyLevel(n, m, math.nan, "nu_root", False, "nu_root")
        rows.append(SpectrumRow(n, cf["plus"], cf["minus"], root))
    return SpectrumTable(m, tuple(rows))
