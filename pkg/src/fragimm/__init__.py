"""Simulation and numerical-validation laboratory for self-similar
fragmentation with Poissonian immigration."""

__version__ = "0.1.0"

from .families import (
    DislocationSpec,
    GateVerdict,
    HypothesisFlags,
    ImmigrationSpec,
    binary_uniform,
    brownian_immigration,
    brownian_nu,
    default_flags,
    discrete_finite,
    group_discrete,
    immigration_report,
    phi,
    single_exponential,
    single_powerlaw,
    stationarity_gate,
)
from .samples import MeasureEstimate, PointSample
from .tagged import (
    SubordinatorSpec,
    XiPath,
    intensity_estimate,
    sample_tagged_mass,
    sample_tagged_masses,
    subordinator_from,
)
from .particles import ParticleSystem, dust_time_eps, evolve, snapshot_measure

__all__ = [
    "DislocationSpec", "GateVerdict", "HypothesisFlags", "ImmigrationSpec",
    "MeasureEstimate", "ParticleSystem", "PointSample", "SubordinatorSpec",
    "XiPath", "binary_uniform", "brownian_immigration", "brownian_nu",
    "default_flags", "discrete_finite", "dust_time_eps", "evolve",
    "group_discrete", "immigration_report", "intensity_estimate", "phi",
    "sample_tagged_mass", "sample_tagged_masses", "single_exponential",
    "single_powerlaw", "snapshot_measure", "stationarity_gate",
    "subordinator_from",
]
