"""Wide-angle scanning excitation synthesis for finite antenna arrays with mutual coupling.

The package models a finite array through its scattering matrix and
embedded element patterns, evaluates reflected power and on-scan radiated
power density for any excitation, and searches phase-only (or magnitude
and phase) excitations that trade the two off with a steady-state
epsilon-dominance MOEA. Field-of-view comparisons against the linear-phase
baseline are built on top.
"""

from .array_model import (
    ArrayGeometry,
    ArrayModel,
    ElementPatternSet,
    ExcitationSet,
    PhysicsConstants,
    active_reflection,
    arl,
    direction_vector,
    input_power,
    power_density,
    reflected_excitations,
    reflected_power,
    reflected_power_fraction,
    total_excitations,
    total_radiated_power,
)
from .baseline import ScanGrid, std_weights
from .config import RunConfig, config_from_dict, load_config
from .fixtures import (
    SyntheticCouplingSpec,
    TouchstoneDocument,
    analytic_patterns,
    emit_pattern_grid,
    emit_touchstone,
    parse_pattern_grid,
    parse_touchstone,
    read_touchstone,
    synthetic_coupling,
)
from .moea import EpsilonMOEA, EpsilonSpec, MoeaConfig, ParetoArchive
from .synthesis import (
    FeasibilitySpec,
    FovSpec,
    beam_metrics,
    fov_report,
    select_tradeoff,
    sweep,
    synthesize_scan_angle,
)

__version__ = "0.1.0"

__all__ = [
    "active_reflection",
    "analytic_patterns",
    "arl",
    "ArrayGeometry",
    "ArrayModel",
    "beam_metrics",
    "config_from_dict",
    "direction_vector",
    "ElementPatternSet",
    "emit_pattern_grid",
    "emit_touchstone",
    "EpsilonMOEA",
    "EpsilonSpec",
    "ExcitationSet",
    "FeasibilitySpec",
    "fov_report",
    "FovSpec",
    "input_power",
    "load_config",
    "MoeaConfig",
    "ParetoArchive",
    "parse_pattern_grid",
    "parse_touchstone",
    "PhysicsConstants",
    "power_density",
    "read_touchstone",
    "reflected_excitations",
    "reflected_power",
    "reflected_power_fraction",
    "RunConfig",
    "ScanGrid",
    "select_tradeoff",
    "std_weights",
    "sweep",
    "synthesize_scan_angle",
    "synthetic_coupling",
    "SyntheticCouplingSpec",
    "total_excitations",
    "total_radiated_power",
    "TouchstoneDocument",
    "__version__",
]
