"""Stationary chemotaxis-consumption states with Robin boundary conditions.

The signal ``c`` solves ``Lap c = alpha c e^c`` with ``dc/dnu = (gamma - c) g``
and the bacteria follow ``n = alpha e^c``; ``alpha`` is chosen so that ``n``
carries a prescribed total mass.
"""

from .domain import Interval, RadialBall, Rectangle, Grid, build_grid, integrate, boundary_data
from .errors import (
    BracketError,
    ChemoSteadyError,
    ConfigurationError,
    DiscretizationError,
    NonConvergenceError,
    NumericalFailure,
    SingularOperatorError,
)
from .robin import RobinOperator, assemble, solve
from .scalar import ScalarSolveConfig, ScalarSolution, picard_step, solve_scalar
from .mass import (
    SteadyState,
    barrier,
    dmass_dalpha,
    invert_mass,
    mass_of_alpha,
    steady_state,
    steady_state_from_alpha,
)
from .oracle import OracleProfile, position_of, solve_oracle
from .diagnostics import CheckReport, CheckResult, run_all

__version__ = "0.1.0"

__all__ = [
    "Interval",
    "RadialBall",
    "Rectangle",
    "Grid",
    "build_grid",
    "integrate",
    "boundary_data",
    "BracketError",
    "ChemoSteadyError",
    "ConfigurationError",
    "DiscretizationError",
    "NonConvergenceError",
    "NumericalFailure",
    "SingularOperatorError",
    "RobinOperator",
    "assemble",
    "solve",
    "ScalarSolveConfig",
    "ScalarSolution",
    "picard_step",
    "solve_scalar",
    "SteadyState",
    "barrier",
    "dmass_dalpha",
    "invert_mass",
    "mass_of_alpha",
    "steady_state",
    "steady_state_from_alpha",
    "OracleProfile",
    "position_of",
    "solve_oracle",
    "CheckReport",
    "CheckResult",
    "run_all",
]
