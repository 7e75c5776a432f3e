"""Radial simulator and experiment harness for the nonlocal porous medium
equation u_t = Δu^m + χ u^α (M₀ − ∫u)."""
from .analytic import DomainError, Params, Regime, RegimeError, classify
from .grid import Grid, Profile, build_grid, mass
from .initdata import InitialDataSpec, Kind, realize
from .solver import Outcome, RunResult, StepControls, run

__all__ = [
    "DomainError",
    "Grid",
    "InitialDataSpec",
    "Kind",
    "Outcome",
    "Params",
    "Profile",
    "Regime",
    "RegimeError",
    "RunResult",
    "StepControls",
    "build_grid",
    "classify",
    "mass",
    "realize",
    "run",
]
__version__ = "0.1.0"
