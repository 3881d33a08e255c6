"""Configuration and result types shared by the two scattering engines."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

__all__ = [
    "GeometryError",
    "Polarization",
    "SpectralPoint",
    "TwoHalfPlaneConfig",
    "HalfPlaneVsPlaneConfig",
    "TruncationSpec",
    "EnergyResult",
]


class GeometryError(ValueError):
    """A configuration violates a physical invariant.

    ``invariant`` holds the violated condition as text, e.g. ``"d_y > 0"``.
    """

    def __init__(self, invariant: str, detail: str = ""):
        self.invariant = invariant
        msg = f"invariant violated: {invariant}"
        super().__init__(f"{msg} ({detail})" if detail else msg)


class Polarization(enum.Enum):
    DIRICHLET = "D"
    NEUMANN = "N"

    @property
    def sign(self) -> int:
        """-1 for Dirichlet, +1 for Neumann."""
        return -1 if self is Polarization.DIRICHLET else 1

    @classmethod
    def parse(cls, value) -> "Polarization":
        if isinstance(value, cls):
            return value
        key = str(value).strip().upper()
        for pol in cls:
            if key in (pol.value, pol.name):
                return pol
        raise ValueError(f"unknown polarization {value!r}")


def _finite(name, value):
    if not math.isfinite(value):
        raise GeometryError(f"{name} finite", f"got {value}")


@dataclass(frozen=True)
class SpectralPoint:
    """Radial imaginary wave number ``q = sqrt(kappa**2 + k_z**2)``."""

    q: float

    def __post_init__(self):
        if not self.q >= 0 or not math.isfinite(self.q):
            raise GeometryError("q >= 0", f"got q={self.q}")


@dataclass(frozen=True)
class TwoHalfPlaneConfig:
    """Two half-planes with parallel edges.

    The edge of the upper half-plane sits at ``(d_x, d_y)`` relative to the
    lower one. ``theta`` and ``theta_bar`` are the rotations of the upper and
    lower half-planes away from the y axis. ``theta = theta_bar = pi/2`` is
    the overlapping-plates arrangement, where a positive ``d_x`` is the
    overlap width.
    """

    d_y: float
    d_x: float = 0.0
    theta: float = math.pi / 2
    theta_bar: float = math.pi / 2

    def __post_init__(self):
        for name in ("d_y", "d_x", "theta", "theta_bar"):
            _finite(name, getattr(self, name))
        if not self.d_y > 0:
            raise GeometryError("d_y > 0", f"got d_y={self.d_y}")

    @property
    def ratio(self) -> float:
        return self.d_x / self.d_y

    def scaled(self, s: float) -> "TwoHalfPlaneConfig":
        return replace(self, d_x=s * self.d_x, d_y=s * self.d_y)

    def rotated(self, gamma: float) -> "TwoHalfPlaneConfig":
        """The same physical arrangement turned rigidly by ``gamma``.

        The edge offset rotates and both tilt angles shift by ``gamma``.
        """
        c, s = math.cos(gamma), math.sin(gamma)
        return TwoHalfPlaneConfig(d_y=self.d_y * c + self.d_x * s,
                                  d_x=self.d_x * c - self.d_y * s,
                                  theta=self.theta + gamma,
                                  theta_bar=self.theta_bar + gamma)


@dataclass(frozen=True)
class HalfPlaneVsPlaneConfig:
    """A half-plane whose edge is a distance ``d`` from an infinite plane.

    ``theta`` is the angle between the half-plane and the plane normal, so
    ``theta = 0`` is perpendicular and ``theta -> pi/2`` is parallel.
    """

    d: float
    theta: float = 0.0

    def __post_init__(self):
        _finite("d", self.d)
        _finite("theta", self.theta)
        if not self.d > 0:
            raise GeometryError("d > 0", f"got d={self.d}")
        if not 0.0 <= self.theta <= math.pi / 2:
            raise GeometryError("0 <= theta <= pi/2", f"got theta={self.theta}")

    def scaled(self, s: float) -> "HalfPlaneVsPlaneConfig":
        return replace(self, d=s * self.d)


@dataclass(frozen=True)
class TruncationSpec:
    """Channel cutoffs and the relative tolerance used for cutoff doubling.

    ``nu_max`` is the base parabolic channel cutoff. The exact engine works
    with ``nu_max``, ``2 nu_max`` and ``4 nu_max`` and doubles the base up to
    ``max_doublings`` times. ``lambda_max`` and ``lambda_nodes`` define the
    Gauss-Legendre grid of the wedge index.
    """

    nu_max: int = 24
    lambda_max: float = 40.0 / math.pi
    convergence_tol: float = 1e-4
    lambda_nodes: int = 64
    max_doublings: int = 2

    def __post_init__(self):
        if self.nu_max < 2:
            raise ValueError("TruncationSpec requires nu_max >= 2")
        if not self.convergence_tol > 0:
            raise ValueError("TruncationSpec requires convergence_tol > 0")
        if not self.lambda_max > 0 or self.lambda_nodes < 4:
            raise ValueError("TruncationSpec requires lambda_max > 0 and lambda_nodes >= 4")
        if self.max_doublings < 0:
            raise ValueError("TruncationSpec requires max_doublings >= 0")

    def as_dict(self) -> dict:
        return {"nu_max": self.nu_max, "lambda_max": self.lambda_max,
                "convergence_tol": self.convergence_tol,
                "lambda_nodes": self.lambda_nodes, "max_doublings": self.max_doublings}


@dataclass(frozen=True)
class EnergyResult:
    """Energy per unit length divided by hbar*c, in inverse squared length units.

    ``method`` is one of ``"exact-parabolic"``, ``"reflection:<n>"``, ``"pfa"``
    or ``"closed-form"``. ``diagnostics`` carries free-form convergence data.
    """

    value: float
    error_estimate: float = 0.0
    method: str = "closed-form"
    converged: bool = True
    truncation_used: TruncationSpec | None = None
    diagnostics: dict = field(default_factory=dict, compare=False)

    def as_dict(self) -> dict:
        return {"value": self.value, "error_estimate": self.error_estimate,
                "method": self.method, "converged": self.converged,
                "truncation_used": self.truncation_used.as_dict() if self.truncation_used else None,
                "diagnostics": self.diagnostics}
