"""Axisymmetric boundary-integral simulation of charged viscous drops."""
from .diagnostics import (
    DiagnosticsRecord,
    PowerLawBlowUp,
    PowerLawFit,
    collapse_score,
    cone_angle,
    fit_power_law,
    rescale_profiles,
)
from .electrostatics import ChargeSolution, solve_charge
from .elliptic import complete_elliptic
from .evolution import FluidParams, SimConfig, SimState, StopReason, critical_charge, run, step
from .exceptions import ChargeDropError, InvalidParameterError
from .mesh import GeneratingCurve, RemeshPolicy, geometry, make_perturbed_sphere, remesh
from .stokes import solve_velocity

__all__ = [
    "ChargeDropError", "ChargeSolution", "DiagnosticsRecord", "FluidParams", "GeneratingCurve",
    "InvalidParameterError", "PowerLawBlowUp", "PowerLawFit", "RemeshPolicy", "SimConfig", "SimState",
    "StopReason", "collapse_score", "complete_elliptic", "cone_angle", "critical_charge",
    "fit_power_law", "geometry", "make_perturbed_sphere", "remesh", "rescale_profiles", "run",
    "solve_charge", "solve_velocity", "step",
]
__version__ = "0.1.0"
