"""Reaction-diffusion with a memory source, power absorption and a nonlocal boundary flux.

    u_t = Lap u + a int_0^t u^q dtau - b u^m        in Omega x (0, T)
    du/dnu = int_Omega k(x, y, t) u^l(y, t) dy      on the boundary
"""
from .classifier import RegimeVerdict, classify, large_data_threshold
from .core import InitialData, Parameters, check_compatibility, validate_parameters
from .expr import parse_expression
from .functionals import compute_functionals, kernel_condition_flags, verify_holder_chain
from .geometry import Domain, build_domain, principal_eigenpair
from .kernel import KernelSpec
from .solver import Problem, SolverOptions, detect_blowup, simulate, step
from .supersolution import (
    build_boundary_layer,
    build_exponential,
    compare_trajectories,
    residual_field,
)

__version__ = "0.1.0"

__all__ = [
    "Domain", "InitialData", "KernelSpec", "Parameters", "Problem", "RegimeVerdict", "SolverOptions",
    "build_boundary_layer", "build_domain", "build_exponential", "check_compatibility", "classify",
    "compare_trajectories", "compute_functionals", "detect_blowup", "kernel_condition_flags",
    "large_data_threshold", "parse_expression", "principal_eigenpair", "residual_field", "simulate",
    "step", "validate_parameters", "verify_holder_chain",
]
