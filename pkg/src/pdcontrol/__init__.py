"""Primal-dual solvers for control-constrained optimal control of linear PDEs."""
from .errors import (ConfigurationError, DiagnosticUnavailable, InvalidGridError,
                     InvalidOperatorError, InvalidParameterError, PDControlError, ShapeError,
                     SolverFailure, TrainingDiverged)
from .grid import Grid
from .pde import (EllipticProblem, SolutionOperator, assemble_elliptic, estimate_operator_norm,
                  make_elliptic_operator, make_parabolic_operator, solve_spd)
from .prox import BoxIndicator, L1Box, moreau_check, project_box, shrink
from .solver import (ExactSolution, ProblemInstance, SolveReport, StepRule, StepSizeWarning,
                     kkt_residual, solve, step_size_bound, validate_step_sizes)

__version__ = "0.1.0"
