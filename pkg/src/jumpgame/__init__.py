"""Numerical Isaacs equations for zero-sum jump-diffusion games.

The package builds game problems from a preset registry, discretises the Lévy
measure, solves the terminal-value problem with a monotone explicit scheme,
simulates the controlled dynamics and cross-checks the solution through the
dynamic programming principle, piecewise-constant strategies and a
verification sandwich.
"""

from .analysis import (Partition, VerificationReport, dpp_residual, refinement_error,
                       semigroup_step, value_pi, verify_pair, vpi_convergence)
from .errors import ArityError, CFLViolation, ConfigError, QuadratureError, UnknownPresetError
from .grid import SpatialGrid
from .hamiltonian import (GridField, Jet, SmoothField, h_minus, h_plus, isaacs_gap,
                          local_operator, nonlocal_hessian_oracle, nonlocal_operator)
from .levy import (JumpEvent, JumpQuadrature, LevyMeasureSpec, build_quadrature,
                   compensator_drift, sample_jumps)
from .model import (PRESETS, AssumptionReport, CoefficientSample, GameProblem, audit_assumptions,
                    build_problem, eval_coefficients)
from .simulator import (ControlledPath, FeedbackPolicy, McEstimate, estimate_payoff,
                        feedback_from_grid, moment_scaling_check, simulate_path, simulate_paths)
from .solver import (SchemeConfig, ValueGrid, cfl_timestep, comparison_check, regularity_report,
                     solve_terminal_value, step_backward, with_choice)

__version__ = "0.1.0"
