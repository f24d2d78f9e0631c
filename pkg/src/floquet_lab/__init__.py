"""Floquet-Bloch toolkit for second-order periodic elliptic operators.

Computes Lambda(xi), its zero surface Xi and the positive Bloch solutions
on it, and synthesises solutions u(x) = <mu, u_xi(x)> from finite-order
distributions mu on Xi.
"""

from .errors import (
    ConfigError,
    ConvergenceError,
    DegenerateEigenvalueError,
    ExprError,
    FloquetError,
    HypothesisError,
    MeasureError,
    PositivityError,
)
from .expr import parse_expr
from .floquet import CellField, FloquetImage, floquet_forward, floquet_inverse, plancherel_check
from .geometry import (
    IndicatorFn,
    XiSurface,
    indicator,
    lambda0_sign_report,
    lambda_at,
    lambda_gradient,
    lambda_hessian,
    maximize_lambda,
    trace_xi,
    tube_exclusivity_check,
)
from .operator import (
    PeriodicCoefficients,
    TorusGrid,
    apply_on_box,
    assemble,
    build_grid,
    formal_adjoint,
    make_coefficients,
)
from .spectral import (
    BandStructure,
    PrincipalEigenpair,
    band_functions,
    dual_dispersion_check,
    fermi_membership,
    principal_eigenpair,
)
from .synthesis import (
    BlochFamily,
    MeasureOnXi,
    SynthesizedSolution,
    bloch_eval,
    derivative_atom_eval,
    envelope_fit,
    make_measure,
    ode_completeness_1d,
    positivity_check,
    residual_norm,
    synthesize,
)

__version__ = "0.1.0"

__all__ = [
    "CellField",
    "FloquetImage",
    "floquet_forward",
    "floquet_inverse",
    "plancherel_check",
    "BandStructure",
    "BlochFamily",
    "ConfigError",
    "ConvergenceError",
    "DegenerateEigenvalueError",
    "ExprError",
    "FloquetError",
    "HypothesisError",
    "IndicatorFn",
    "MeasureError",
    "MeasureOnXi",
    "PeriodicCoefficients",
    "PositivityError",
    "PrincipalEigenpair",
    "SynthesizedSolution",
    "TorusGrid",
    "XiSurface",
    "apply_on_box",
    "assemble",
    "band_functions",
    "bloch_eval",
    "build_grid",
    "derivative_atom_eval",
    "dual_dispersion_check",
    "envelope_fit",
    "fermi_membership",
    "formal_adjoint",
    "indicator",
    "lambda0_sign_report",
    "lambda_at",
    "lambda_gradient",
    "lambda_hessian",
    "make_coefficients",
    "make_measure",
    "maximize_lambda",
    "ode_completeness_1d",
    "parse_expr",
    "positivity_check",
    "principal_eigenpair",
    "residual_norm",
    "synthesize",
    "trace_xi",
    "tube_exclusivity_check",
]
