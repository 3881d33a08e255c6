"""Casimir energies of semi-infinite perfectly conducting planes.

Two engines are provided: an exact determinant in the parabolic-cylinder
basis and a multiple-reflection expansion in the wedge basis, together with
closed-form one- and two-reflection results and first-reflection thermal
corrections.
"""
__version__ = "0.1.0"

from .geometry import (EnergyResult, GeometryError, HalfPlaneVsPlaneConfig, Polarization,  # noqa: E402
                       SpectralPoint, TruncationSpec, TwoHalfPlaneConfig)
from .numerics import IntegralValue, QuadratureSpec  # noqa: E402
from .series import ReflectionSeries  # noqa: E402

__all__ = [
    "EnergyResult",
    "GeometryError",
    "HalfPlaneVsPlaneConfig",
    "IntegralValue",
    "Polarization",
    "QuadratureSpec",
    "ReflectionSeries",
    "SpectralPoint",
    "TruncationSpec",
    "TwoHalfPlaneConfig",
]
