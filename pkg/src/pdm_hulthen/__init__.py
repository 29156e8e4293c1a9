"""Bound states, wave functions and thermodynamics of a position-dependent-mass
charged particle in a Hulthen-plus-Coulomb potential with magnetic and
Aharonov-Bohm flux fields."""

from .core import (
    DomainSpec,
    FieldConfig,
    ModelParams,
    PhysicalConstants,
    greene_aldrich_surrogate,
    mass_value,
    potential_value,
    rho_singularity,
    surrogate_relative_error,
    vector_potential_phi,
)
from .errors import PdmError
from .nu import (
    NATURAL,
    EnergyLevel,
    SpectrumTable,
    closed_form_levels,
    compute_aux,
    energy_from_quantization,
    enumerate_bound_states,
)
from .oracle import RadialGrid, default_grid, residual_norm, solve_radial
from .thermo import ThermoResult, partition_function, thermo_quantities
from .wavefunction import WavefunctionSample, assemble_wavefunction, terminating_energy

__all__ = [
    "DomainSpec",
    "EnergyLevel",
    "FieldConfig",
    "ModelParams",
    "NATURAL",
    "PdmError",
    "PhysicalConstants",
    "RadialGrid",
    "SpectrumTable",
    "ThermoResult",
    "WavefunctionSample",
    "assemble_wavefunction",
    "closed_form_levels",
    "compute_aux",
    "default_grid",
    "energy_from_quantization",
    "enumerate_bound_states",
    "greene_aldrich_surrogate",
    "mass_value",
    "partition_function",
    "potential_value",
    "residual_norm",
    "rho_singularity",
    "solve_radial",
    "surrogate_relative_error",
    "terminating_energy",
    "thermo_quantities",
    "vector_potential_phi",
]
