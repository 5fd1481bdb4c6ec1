"""Targeted Levy flights in one dimension.

Given a target density, ``reverse`` recovers the Langevin drift and the
Levy-Schroedinger semigroup potential that make it stationary. ``langevin``
and ``semigroup`` simulate the two processes; ``fpe`` evolves their densities
on a grid. ``cli`` ties the pieces together.
"""

from .catalog import TargetDensity, catalog_get, tabulated_target
from .fpe import SolveConfig, evolve_langevin_fpe, evolve_semigroup_fpe, stationarity_residual
from .fracops import OperatorConfig, TailModel, frac_laplacian, frac_laplacian_pv, frac_laplacian_spectral
from .grid import GridFunction
from .langevin import LangevinConfig, run_langevin_ensemble
from .reverse import (
    LangevinDriftReconstructor,
    SemigroupPotentialReconstructor,
    drift_from_target,
    reconstruct,
    semigroup_potential_from_target,
)
from .semigroup import SemigroupConfig, run_semigroup_ensemble
from .stable import RngStream, StableParams, sample_stable

__version__ = "0.1.0"

__all__ = [
    "GridFunction",
    "LangevinConfig",
    "LangevinDriftReconstructor",
    "OperatorConfig",
    "RngStream",
    "SemigroupConfig",
    "SemigroupPotentialReconstructor",
    "SolveConfig",
    "StableParams",
    "TailModel",
    "TargetDensity",
    "catalog_get",
    "drift_from_target",
    "evolve_langevin_fpe",
    "evolve_semigroup_fpe",
    "frac_laplacian",
    "frac_laplacian_pv",
    "frac_laplacian_spectral",
    "reconstruct",
    "run_langevin_ensemble",
    "run_semigroup_ensemble",
    "sample_stable",
    "semigroup_potential_from_target",
    "stationarity_residual",
    "tabulated_target",
]
