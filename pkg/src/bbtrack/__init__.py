"""Velocity-tracking control lab for 2D incompressible Navier-Stokes flows.

Staggered-grid fields and solvers, the tracking objective with its first and
second variations, conditional and projected gradient solvers, perturbation
experiments, and a finite-dimensional subregularity toolkit.
"""

from .control import (Control, ControlBounds, ObjectiveContext, eval_J, extract_bang_bang, gradient,
                      hessian_quadratic, stationarity_residual)
from .errors import *  # noqa: F401,F403
from .fieldio import read_field, write_field
from .fields import divergence, leray_project, norm, trilinear_b
from .grid import ForceSeries, Grid, ScalarField, StaggeredField, Trajectory
from .instances import overshoot_instance, recoverable_instance, vortex_control
from .ns import NsConfig, solve_ns, solve_ns_perturbed
from .optimizer import OptimizerConfig, SolveReport, continuation_path, solve
from .oseen import (LinearizationPoint, ls_l1_diagnostic, shrinking_support_family, solve_adjoint, solve_oseen,
                    solve_second_linearized)
from .stability import (PerturbationSpec, RateFit, curvature_probe, gap_diagnostics, growth_exponent_probe,
                        make_perturbation, rate_experiment)
from .subreg import (BoxProblem, check_growth, check_subregularity, ekeland_point, normal_cone_residual,
                     solve_perturbed_vi, theorem_roundtrip)

__version__ = "0.1.0"
