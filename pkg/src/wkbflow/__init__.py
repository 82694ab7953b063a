"""Exact WKB solutions of ``h^2 y'' = Q(x) y`` for polynomial ``Q``.

The package builds the Stokes geometry of ``Q``, the path flow
``y' = 1/sqrt(Q(y))``, the convergent iteration for the correction ``g``
and the true solutions ``U_+`` and ``U_-`` on Stokes domains, together
with the checks that certify them numerically.
"""
from .errors import (BranchError, ConfigError, FlowError, GateError, NumericalError, QuadratureError,
                     RegionError, RootFindingError, UnsupportedGeometryError, WKBError)
from .kernels import BACKEND
from .polynomial import (ComplexPolynomial, RationalFunction, TurningPoint, find_turning_points)
from .branch import BranchedPath, action, continue_sqrt
from .flow import FlowTrajectory, advance, trace_backward, trace_forward
from .series import ForcingTerm, forcing, riccati_coefficients, theta
from .solver import IterationState, build_grid, catalan, iterate, verify_kernel_ode
from .stokes import (ProbeGrid, RegionParams, StokesCurve, StokesDomain, StokesGeometry, analyze,
                     classify_domains, trace_stokes_curves)
from .solutions import (ExtensionRegion, WKBSolution, asymptotic_match, build_extension, build_solution,
                        extend_adjoining, residual, wronskian)

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "BranchError", "BranchedPath", "ComplexPolynomial", "ConfigError", "ExtensionRegion",
    "FlowError", "FlowTrajectory", "ForcingTerm", "GateError", "IterationState", "NumericalError",
    "ProbeGrid", "QuadratureError", "RationalFunction", "RegionError", "RegionParams", "RootFindingError",
    "StokesCurve", "StokesDomain", "StokesGeometry", "TurningPoint", "UnsupportedGeometryError",
    "WKBError", "WKBSolution", "action", "advance", "analyze", "asymptotic_match", "build_extension",
    "build_grid", "build_solution", "catalan", "classify_domains", "continue_sqrt", "extend_adjoining",
    "find_turning_points", "forcing", "iterate", "residual", "riccati_coefficients", "theta",
    "trace_backward", "trace_forward", "trace_stokes_curves", "verify_kernel_ode", "wronskian",
]
