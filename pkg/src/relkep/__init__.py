"""Periodic orbits of the planar relativistic Kepler problem.

Closed-form circular and rosette solutions, their action levels and Morse
indices, a Dormand-Prince integrator and a direct minimizer of the discrete
action over loops with prescribed winding number.
"""

__version__ = "0.1.0"

from .circular import CircularOrbit, circular_action, circular_orbit, solve_angular_momentum
from .core import (
    CollisionError,
    DomainError,
    EnergyMomentum,
    NoSuchOrbitError,
    PhysicalParams,
    ProblemSpec,
    ResolutionError,
    in_sigma,
    kinetic_density,
    momentum_map,
    momentum_map_inv,
)
from .dynamics import CartState, integrate, periodicity_residual
from .loops import Loop, discrete_action, discrete_action_gradient, winding_number
from .morse import MorseReport, conley_zehnder_formula, morse_index
from .rosette import (
    RosetteOrbit,
    action_spectrum,
    classify,
    rosette_action,
    rosette_orbit,
    sample_loop,
)
from .varsolver import (
    MinimizeOptions,
    MinimizeReport,
    convergence_study,
    harmonic_forcing,
    minimize,
    suggest_nodes,
)

__all__ = [
    "CartState", "CircularOrbit", "CollisionError", "DomainError", "EnergyMomentum", "Loop",
    "MinimizeOptions", "MinimizeReport", "MorseReport", "NoSuchOrbitError", "PhysicalParams",
    "ProblemSpec", "ResolutionError", "RosetteOrbit", "action_spectrum", "circular_action",
    "circular_orbit", "classify", "conley_zehnder_formula", "convergence_study", "discrete_action",
    "discrete_action_gradient", "harmonic_forcing", "in_sigma", "integrate", "kinetic_density",
    "minimize", "momentum_map", "momentum_map_inv", "morse_index", "periodicity_residual",
    "rosette_action", "rosette_orbit", "sample_loop", "solve_angular_momentum", "suggest_nodes",
    "winding_number",
]
