"""Physical model: Hulthen-plus-Coulomb potential, exponential position-dependent
mass, azimuthal vector potential, and the exponential surrogate for 1/rho.

All evaluators accept a scalar or an array of radii and return the same shape.
They are pure functions of their arguments.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import OutOfDomain, SingularPoint

# |1 - q exp(-lambda rho)| below this (relative to the terms) counts as singular
SINGULAR_RTOL = 1e-12


@dataclass(frozen=True)
class PhysicalConstants:
    """hbar, e, c and k_B. Natural units (all ones) by default."""

    hbar: float = 1.0
    e_charge: float = 1.0
    c_light: float = 1.0
    k_boltzmann: float = 1.0

    def __post_init__(self):
        for name in ("hbar", "e_charge", "c_light", "k_boltzmann"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ValueError(f"{name} must be positive and finite, got {value!r}")


@dataclass(frozen=True)
class ModelParams:
    """Potential and mass parameters.

    ``lam`` is the screening/mass constant lambda. ``q = 0`` is accepted here
    (plain exponential well, constant mass) but rejected by the NU algebra and
    the eigensolver, which both divide by q.
    """

    v0: float
    v1: float
    lam: float
    q: float
    m0: float

    def __post_init__(self):
        if not self.v0 >= 0:
            raise ValueError(f"v0 must be >= 0, got {self.v0!r}")
        if not self.lam > 0:
            raise ValueError(f"lambda must be > 0, got {self.lam!r}")
        if not self.m0 > 0:
            raise ValueError(f"m0 must be > 0, got {self.m0!r}")
        for name in ("v0", "v1", "lam", "q", "m0"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")


@dataclass(frozen=True)
class FieldConfig:
    """Uniform-like magnetic field strength ``b0`` and Aharonov-Bohm flux ``phi_ab``."""

    b0: float = 0.0
    phi_ab: float = 0.0

    def __post_init__(self):
        if not self.b0 >= 0:
            raise ValueError(f"b0 must be >= 0, got {self.b0!r}")
        if not math.isfinite(self.phi_ab):
            raise ValueError("phi_ab must be finite")


def rho_singularity(p: ModelParams) -> float:
    """Radius where 1 - q exp(-lambda rho) = 0, or 0 when there is none for rho > 0."""
    if p.q > 1:
        return math.log(p.q) / p.lam
    return 0.0


@dataclass(frozen=True)
class DomainSpec:
    """Closed interval [rho_min, rho_max] on which the model is nonsingular."""

    rho_min: float
    rho_max: float
    rho_singularity: float = 0.0

    def __post_init__(self):
        if not self.rho_min > 0:
            raise OutOfDomain(f"rho_min must be > 0, got {self.rho_min!r}")
        if not self.rho_min > self.rho_singularity:
            raise OutOfDomain(
                f"rho_min={self.rho_min!r} must exceed the singular radius {self.rho_singularity!r}"
            )
        if not self.rho_max > self.rho_min:
            raise OutOfDomain(f"rho_max={self.rho_max!r} must exceed rho_min={self.rho_min!r}")

    @classmethod
    def for_params(cls, p: ModelParams, rho_min: float | None = None,
                   rho_max: float | None = None) -> "DomainSpec":
        """Default domain: [max(rho_s + 1e-3/lambda, 1e-4/lambda), 60/lambda]."""
        rs = rho_singularity(p)
        if rho_min is None:
            rho_min = max(rs + 1e-3 / p.lam, 1e-4 / p.lam)
        if rho_max is None:
            rho_max = 60.0 / p.lam
        return cls(rho_min=float(rho_min), rho_max=float(rho_max), rho_singularity=rs)

    def contains(self, rho) -> bool:
        rho = np.asarray(rho, dtype=float)
        return bool(np.all((rho >= self.rho_min) & (rho <= self.rho_max)))


def _out(values: np.ndarray, scalar: bool):
    return float(values) if scalar else values


def deformation_denominator(rho, lam: float, q: float):
    """1 - q exp(-lambda rho), raising SingularPoint where it vanishes."""
    r = np.asarray(rho, dtype=float)
    qe = q * np.exp(-lam * r)
    if q > 0:
        # expm1 keeps full relative precision next to the singular radius
        d = -np.expm1(math.log(q) - lam * r)
    else:
        d = 1.0 - qe
    if np.any(np.abs(d) <= SINGULAR_RTOL * np.maximum(1.0, np.abs(qe))):
        raise SingularPoint(f"1 - q exp(-lambda rho) vanishes for q={q!r}, lambda={lam!r}")
    return _out(d, r.ndim == 0)


def _require_positive_rho(r: np.ndarray):
    if np.any(r <= 0):
        raise OutOfDomain("rho must be > 0")


def potential_value(rho, p: ModelParams):
    """V(rho) = -V0 e^{-lambda rho} / (1 - q e^{-lambda rho}) + V1 / rho."""
    r = np.asarray(rho, dtype=float)
    _require_positive_rho(r)
    d = np.asarray(deformation_denominator(r, p.lam, p.q))
    v = -p.v0 * np.exp(-p.lam * r) / d + p.v1 / r
    return _out(v, r.ndim == 0)


def mass_value(rho, p: ModelParams):
    """M(rho) = M0 / (1 - q e^{-lambda rho}); tends to M0 as rho grows."""
    r = np.asarray(rho, dtype=float)
    d = np.asarray(deformation_denominator(r, p.lam, p.q))
    return _out(p.m0 / d, r.ndim == 0)


def vector_potential_phi(rho, f: FieldConfig, p: ModelParams):
    """Azimuthal component A_phi = B0 e^{-lambda rho}/(1 - q e^{-lambda rho}) + Phi_AB/(2 pi rho)."""
    r = np.asarray(rho, dtype=float)
    _require_positive_rho(r)
    d = np.asarray(deformation_denominator(r, p.lam, p.q))
    a = f.b0 * np.exp(-p.lam * r) / d + f.phi_ab / (2.0 * np.pi * r)
    return _out(a, r.ndim == 0)


def greene_aldrich_surrogate(rho, lam: float, q: float):
    """lambda e^{-lambda rho} / (1 - q e^{-lambda rho}), the exponential stand-in for 1/rho."""
    r = np.asarray(rho, dtype=float)
    d = np.asarray(deformation_denominator(r, lam, q))
    return _out(lam * np.exp(-lam * r) / d, r.ndim == 0)


def classic_surrogate(rho, lam: float):
    """Undeformed Greene-Aldrich form lambda / (e^{lambda rho} - 1), kept for comparison."""
    r = np.asarray(rho, dtype=float)
    _require_positive_rho(r)
    return _out(lam / np.expm1(lam * r), r.ndim == 0)


def surrogate_relative_error(rho, lam: float, q: float, mode: str = "deformed"):
    """|surrogate - 1/rho| * rho.

    ``mode="classic"`` evaluates the undeformed form instead of the q-deformed one.
    """
    r = np.asarray(rho, dtype=float)
    _require_positive_rho(r)
    if mode == "deformed":
        s = np.asarray(greene_aldrich_surrogate(r, lam, q))
    elif mode == "classic":
        s = np.asarray(classic_surrogate(r, lam))
    else:
        raise ValueError(f"unknown surrogate mode {mode!r}")
    return _out(np.abs(s * r - 1.0), r.ndim == 0)
