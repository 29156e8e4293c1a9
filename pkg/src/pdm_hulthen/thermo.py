"""Canonical-ensemble thermodynamics over a finite bound spectrum.

Z = sum_n exp(-beta E_n) over the valid levels only (the continuum is not
included). Derived quantities use central differences of ln Z in beta:

    U = -d lnZ / d beta,   F = -lnZ / beta,   S = k_B (lnZ + beta U),
    C = k_B beta^2 d^2 lnZ / d beta^2.

The differences are evaluated without cancellation. With Boltzmann weights p_n
at beta and their mean energy E_bar,

    lnZ(beta +- d) - lnZ(beta) = -+ d E_bar + log1p(sum_n p_n expm1(-+ d (E_n - E_bar))),

which is an exact rewriting, so the stencil is unchanged but its rounding error
no longer grows like 1/d^2. One-level spectra give U = E_0 and C = 0 exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import EmptySpectrum, StepTooLarge
from .nu import EnergyLevel, SpectrumTable


@dataclass(frozen=True)
class ThermoResult:
    """``z_value`` is inf when Z overflows a double; ``log_z`` is always finite."""

    beta: float
    z_value: float
    free_energy: float
    internal_energy: float
    entropy: float
    heat_capacity: float
    log_z: float
    k_boltzmann: float = 1.0

    @property
    def temperature(self) -> float:
        return 1.0 / (self.k_boltzmann * self.beta)

    def identity_residual(self) -> float:
        """|F - (U - T S)| relative to max(1, |F|)."""
        lhs = self.free_energy
        rhs = self.internal_energy - self.temperature * self.entropy
        return abs(lhs - rhs) / max(1.0, abs(lhs))


def spectrum_energies(levels, column: str = "nu_root") -> np.ndarray:
    """Valid energies from a SpectrumTable, EnergyLevel objects or plain floats."""
    if isinstance(levels, SpectrumTable):
        values = levels.energies(column)
    else:
        values = []
        for lv in levels:
            if isinstance(lv, EnergyLevel):
                if lv.valid:
                    values.append(lv.value)
            else:
                values.append(float(lv))
    energies = np.asarray([v for v in values if math.isfinite(v)], dtype=float)
    if energies.size == 0:
        raise EmptySpectrum("no valid level to sum over")
    return energies


def _shifted_log_sum(energies: np.ndarray, beta: float, e_min: float) -> float:
    return float(np.log(np.sum(np.exp(-beta * (energies - e_min)))))


def log_partition_function(levels: Iterable, beta: float) -> float:
    if not beta > 0:
        raise ValueError("beta must be > 0")
    e = spectrum_energies(levels)
    e_min = float(e.min())
    return -beta * e_min + _shifted_log_sum(e, beta, e_min)


def _exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


def partition_function(levels: Iterable, beta: float) -> float:
    return _exp(log_partition_function(levels, beta))


def thermo_quantities(levels: Iterable, beta: float, d_beta: float | None = None,
                      k_boltzmann: float = 1.0) -> ThermoResult:
    if not beta > 0:
        raise ValueError("beta must be > 0")
    if d_beta is None:
        d_beta = 1e-4 * beta
    if not 0 < d_beta < beta / 10:
        raise StepTooLarge(f"d_beta must lie in (0, beta/10), got {d_beta!r}")
    e = spectrum_energies(levels)
    e_min = float(e.min())
    w = np.exp(-beta * (e - e_min))
    prob = w / w.sum()
    e_bar = float(np.dot(prob, e))
    dev = e - e_bar
    h_plus = math.log1p(float(np.dot(prob, np.expm1(-d_beta * dev))))
    h_minus = math.log1p(float(np.dot(prob, np.expm1(d_beta * dev))))

    log_z = -beta * e_min + float(np.log(w.sum()))
    internal = e_bar - (h_plus - h_minus) / (2.0 * d_beta)
    curvature = (h_plus + h_minus) / d_beta ** 2
    free = -log_z / beta
    entropy = k_boltzmann * (log_z + beta * internal)
    heat = k_boltzmann * beta ** 2 * curvature
    return ThermoResult(beta, _exp(log_z), free, internal, entropy, heat, log_z, k_boltzmann)
