"""Intrinsic volumes of three-dimensional ellipsoids and their inversion."""
from .inverse import InversionReport, InversionSpec, Status, feasible, invert
from .quadrature import NonConvergence, QuadratureResult, QuadratureSpec, integrate_line
from .volumes import (
    IntrinsicVolumes,
    Jacobian3,
    LogSemiaxes,
    Semiaxes,
    forward,
    g_value,
    jacobian,
    jacobian_log,
    v1,
    v2,
    v3,
)

__version__ = "0.1.0"

__all__ = [
    "InversionReport", "InversionSpec", "Status", "feasible", "invert",
    "NonConvergence", "QuadratureResult", "QuadratureSpec", "integrate_line",
    "IntrinsicVolumes", "Jacobian3", "LogSemiaxes", "Semiaxes",
    "forward", "g_value", "jacobian", "jacobian_log", "v1", "v2", "v3",
]
