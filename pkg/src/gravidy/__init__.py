"""Implicit gradient-flow solvers on constrained domains, with baselines.

Four geometries, one discretization: reparameterize the constraint away,
take a backward-Euler step in the parameter variable, and solve the
resulting nonlinear system exactly.  The step is unconditionally stable, so
the step size is set by accuracy, not by a stability bound.
"""

__version__ = "0.1.0"

from .core import (
    EXP_CLAMP,
    LeastSquaresProblem,
    Objective,
    QuadraticObjective,
    ReparamMap,
    SolverConfig,
    StiefelQuadraticProblem,
    Trace,
)
from .diagnostics import (
    ConvergenceReport,
    estimate_contraction,
    kkt_residual,
    make_report,
    stiefel_kkt,
    verify_descent,
)
from .pos_box import solve_box, solve_pos
from .projections import Projection
from .simplex import solve_simplex
from .stiefel import solve_stiefel

__all__ = [
    "EXP_CLAMP",
    "LeastSquaresProblem",
    "Objective",
    "QuadraticObjective",
    "ReparamMap",
    "SolverConfig",
    "StiefelQuadraticProblem",
    "Trace",
    "ConvergenceReport",
    "estimate_contraction",
    "kkt_residual",
    "make_report",
    "stiefel_kkt",
    "verify_descent",
    "solve_box",
    "solve_pos",
    "Projection",
    "solve_simplex",
    "solve_stiefel",
    "__version__",
]
