r"""Physics outputs built on the two engines.

Energies are ``E / (hbar c L)`` in inverse squared units of the input lengths.
The tilt coefficient is :math:`c(\theta) = -\hat E\cos\theta\, d^2`.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import parabolic, wedge
from .geometry import (EnergyResult, GeometryError, HalfPlaneVsPlaneConfig, TruncationSpec,
                       TwoHalfPlaneConfig)
from .numerics import QuadratureSpec

__all__ = [
    "Estimate",
    "CurveRow",
    "CurveTable",
    "AsymptoteFit",
    "pfa_energy",
    "overlap_energy",
    "overlap_curve",
    "tilt_curve",
    "asymptote_fit",
    "lateral_force",
    "babinet_residual",
    "c_of_theta",
    "exact_parallel_limit",
    "edge_coefficient",
    "edge_consistency_report",
    "C_PARALLEL",
]

C_PARALLEL = math.pi ** 2 / 720.0
_LEAD_FORCE = 1.0 / (8.0 * math.pi ** 2)


@dataclass(frozen=True)
class Estimate:
    """A derived scalar with its error estimate and provenance."""

    value: float
    error_estimate: float = 0.0
    method: str = "closed-form"
    converged: bool = True
    diagnostics: dict = field(default_factory=dict, compare=False)


@dataclass(frozen=True)
class CurveRow:
    abscissa: float
    energy: float
    error: float
    method: str
    converged: bool
    message: str = ""

    @property
    def failed(self) -> bool:
        return bool(self.message)


@dataclass(frozen=True)
class CurveTable:
    rows: tuple
    x_label: str = "d_x/d_y"
    y_label: str = "energy"

    def __post_init__(self):
        xs = [r.abscissa for r in self.rows]
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise ValueError("curve abscissae must be strictly increasing")
        if any(r.error < 0 for r in self.rows if not r.failed):
            raise ValueError("curve errors must be nonnegative")

    @property
    def abscissae(self) -> np.ndarray:
        return np.array([r.abscissa for r in self.rows])

    @property
    def energies(self) -> np.ndarray:
        return np.array([r.energy for r in self.rows])

    @property
    def failures(self) -> list:
        return [r for r in self.rows if r.failed]


@dataclass(frozen=True)
class AsymptoteFit:
    slope: float
    intercept: float
    window: tuple
    residual_rms: float
    points: int


def _threads() -> int:
    raw = os.environ.get("CASIMIR_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        n = os.cpu_count() or 1
    return max(1, n)


def _ordered_map(fn, items):
    items = list(items)
    workers = min(_threads(), max(len(items), 1))
    if workers == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def pfa_energy(d_x: float, d_y: float) -> EnergyResult:
    """Proximity-force estimate ``-pi^2 d_x / (720 d_y^3)`` for overlap ``d_x``."""
    if not d_y > 0:
        raise GeometryError("d_y > 0", f"got d_y={d_y}")
    if not d_x > 0:
        raise GeometryError("d_x > 0", "PFA needs a positive overlap")
    return EnergyResult(-C_PARALLEL * d_x / d_y ** 3, 0.0, "pfa")


def _reflection_order(method: str) -> int:
    try:
        n = int(method.split(":", 1)[1])
    except (IndexError, ValueError):
        raise ValueError(f"malformed method {method!r}; expected reflection:<n>") from None
    if n < 1:
        raise ValueError("reflection order must be >= 1")
    return n


def overlap_energy(d_x: float, d_y: float, method: str = "exact",
                   trunc: TruncationSpec | None = None,
                   quad: QuadratureSpec | None = None) -> EnergyResult:
    """Energy of two parallel overlapping half-planes by the requested engine.

    ``method`` is ``"exact"``, ``"pfa"``, or ``"reflection:<n>"`` (the sum of
    the first ``n`` reflections; ``n = 1`` is the closed form).
    """
    config = TwoHalfPlaneConfig(d_y=d_y, d_x=d_x)
    if method in ("exact", "exact-parabolic"):
        return parabolic.exact_energy(config, trunc, quad)
    if method == "pfa":
        return pfa_energy(d_x, d_y)
    if method == "closed-form":
        return wedge.energy_first_reflection_overlap(d_x, d_y)
    if method.startswith("reflection:"):
        n = _reflection_order(method)
        if n == 1:
            res = wedge.energy_first_reflection_overlap(d_x, d_y)
            return EnergyResult(res.value, 0.0, method)
        series = parabolic.reflection_series(config, n, trunc, quad)
        return EnergyResult(series.partial_sums[-1], float(sum(series.errors)), method,
                            series.converged, trunc)
    raise ValueError(f"unknown method {method!r}")


def _row(x, fn, method):
    try:
        res = fn(x)
    except (GeometryError, ArithmeticError, ValueError) as exc:
        return CurveRow(x, math.nan, math.nan, method, False, str(exc) or type(exc).__name__)
    return CurveRow(x, res.value, res.error_estimate, res.method, res.converged)


def overlap_curve(d_y: float, abscissae: Sequence[float], method: str = "exact",
                  trunc: TruncationSpec | None = None,
                  quad: QuadratureSpec | None = None) -> CurveTable:
    """Energy versus ``d_x/d_y`` at fixed ``d_y``; one row per abscissa.

    Failing points are kept as rows with a message and NaN values. Rows are
    computed in parallel (``CASIMIR_THREADS`` caps the pool) and returned in
    input order.
    """
    if not d_y > 0:
        raise GeometryError("d_y > 0", f"got d_y={d_y}")
    xs = [float(x) for x in abscissae]
    rows = _ordered_map(
        lambda r: _row(r, lambda v: overlap_energy(v * d_y, d_y, method, trunc, quad), method), xs)
    return CurveTable(tuple(rows), "d_x/d_y", "E/(hbar c L)")


def tilt_curve(thetas: Sequence[float], method: str = "two-reflection",
               trunc: TruncationSpec | None = None,
               quad: QuadratureSpec | None = None) -> CurveTable:
    """``c(theta)`` for a half-plane facing a plane; the energy column holds c."""
    def one(theta):
        return c_of_theta(theta, method, trunc, quad)
    rows = _ordered_map(lambda th: _row(th, one, method), [float(t) for t in thetas])
    return CurveTable(tuple(rows), "theta", "c(theta)")


def asymptote_fit(table: CurveTable, window: tuple = (3.0, 6.0)) -> AsymptoteFit:
    """Least-squares line through the rows inside ``window``.

    The slope approaches ``-zeta(4)/(8 pi^2)`` per unit ``d_x/d_y`` for the
    exact curve and the intercept is the edge correction beyond PFA.
    """
    lo, hi = window
    if not lo < hi:
        raise ValueError("window must satisfy lo < hi")
    xs = np.array([r.abscissa for r in table.rows if not r.failed and lo <= r.abscissa <= hi])
    ys = np.array([r.energy for r in table.rows if not r.failed and lo <= r.abscissa <= hi])
    if xs.size < 4:
        raise ValueError(f"asymptote fit needs at least 4 rows in {window}, got {xs.size}")
    slope, intercept = np.polyfit(xs, ys, 1)
    rms = float(np.sqrt(np.mean((ys - (slope * xs + intercept)) ** 2)))
    return AsymptoteFit(float(slope), float(intercept), (lo, hi), rms, int(xs.size))


def _fd_derivative(energy, x, h):
    """Central difference with one Richardson step, ``(4 D(h) - D(2h)) / 3``."""
    e = {k: energy(x + k * h) for k in (-2, -1, 1, 2)}
    d1 = (e[1] - e[-1]) / (2 * h)
    d2 = (e[2] - e[-2]) / (4 * h)
    return (4 * d1 - d2) / 3, abs(d1 - d2) / 3


def lateral_force(config: TwoHalfPlaneConfig, method: str = "reflection:1",
                  differentiation: str = "analytic",
                  trunc: TruncationSpec | None = None,
                  quad: QuadratureSpec | None = None) -> Estimate:
    r"""Lateral force per length :math:`F_x = -\partial\hat E/\partial d_x`.

    With this sign the leading large-overlap force is ``+1/(8 pi^2 d_y^3)``.
    The closed form is differentiated analytically unless
    ``differentiation="finite-difference"``; the exact engine always uses a
    Richardson-extrapolated central difference with step ``1e-3 d_y``.
    """
    if not (math.isclose(config.theta, math.pi / 2) and math.isclose(config.theta_bar, math.pi / 2)):
        raise GeometryError("theta = theta_bar = pi/2", "lateral force is defined for parallel half-planes")
    d_y = config.d_y
    h = 1e-3 * d_y
    if method in ("reflection:1", "closed-form") and differentiation == "analytic":
        value = float(wedge.overlap_bracket_derivative(config.ratio)) / (24 * math.pi ** 3 * d_y ** 3)
        return Estimate(value, 0.0, "reflection:1")
    if method in ("reflection:1", "closed-form"):
        def energy(dx):
            return wedge.energy_first_reflection_overlap(dx, d_y).value
        deriv, err = _fd_derivative(energy, config.d_x, h)
        return Estimate(-deriv, err, "reflection:1", True)
    if method in ("exact", "exact-parabolic"):
        flags = []

        def energy(dx):
            res = parabolic.exact_energy(TwoHalfPlaneConfig(d_y, dx), trunc, quad)
            flags.append(res.converged)
            return res.value
        deriv, err = _fd_derivative(energy, config.d_x, h)
        ok = all(flags) and err <= 1e-2 * abs(deriv)
        return Estimate(-deriv, err, "exact-parabolic", ok)
    raise ValueError(f"unknown method {method!r}")


def babinet_residual(d_y: float, magnitudes: Sequence[float], form: str = "sum") -> list:
    r"""First-reflection check of the Babinet relation between the two sides.

    Beyond the PFA term, the force at overlap ``+a`` mirrors the force at
    gap ``-a``. ``form="sum"`` returns
    :math:`[F_x(a) - 1/(8\pi^2 d_y^3)] + F_x(-a)`, which vanishes identically
    since the corrections are equal and opposite. ``form="difference"``
    returns :math:`[F_x(a) - 1/(8\pi^2 d_y^3)] - F_x(-a)`, which only falls
    off like ``d_y^3/a^3``.
    """
    if form not in ("sum", "difference"):
        raise ValueError("form must be 'sum' or 'difference'")
    sign = 1.0 if form == "sum" else -1.0
    out = []
    for a in magnitudes:
        if not a > 0:
            raise GeometryError("|d_x| > 0", f"got {a}")
        plus = lateral_force(TwoHalfPlaneConfig(d_y, a)).value - _LEAD_FORCE / d_y ** 3
        minus = lateral_force(TwoHalfPlaneConfig(d_y, -a)).value
        out.append(plus + sign * minus)
    return out


def c_of_theta(theta: float, method: str = "two-reflection",
               trunc: TruncationSpec | None = None,
               quad: QuadratureSpec | None = None) -> Estimate:
    r"""Tilt coefficient :math:`c(\theta) = -\hat E \cos\theta\, d^2`.

    Methods: ``"exact"``, ``"two-reflection"`` and ``"reflection:1"``. At
    ``theta = pi/2`` the exact method returns the parallel-plate limit
    ``pi^2/1440``; :func:`exact_parallel_limit` reaches it numerically.
    """
    if not 0.0 <= theta <= math.pi / 2:
        raise GeometryError("0 <= theta <= pi/2", f"got theta={theta}")
    at_parallel = math.isclose(theta, math.pi / 2, rel_tol=0, abs_tol=1e-15)
    if method == "two-reflection":
        return Estimate(wedge.two_reflection_c(theta), 0.0, method)
    if method == "reflection:1":
        return Estimate(1.0 / (16.0 * math.pi ** 2), 0.0, method)
    if method in ("exact", "exact-parabolic"):
        if at_parallel:
            return Estimate(C_PARALLEL / 2.0, 0.0, "exact-parabolic",
                            diagnostics={"source": "parallel-plate limit"})
        res = parabolic.exact_energy(HalfPlaneVsPlaneConfig(1.0, theta), trunc, quad)
        cos = math.cos(theta)
        return Estimate(-res.value * cos, res.error_estimate * cos, "exact-parabolic",
                        res.converged, {"energy": res.as_dict()})
    raise ValueError(f"unknown method {method!r}")


def exact_parallel_limit(hs: Sequence[float] = (0.2, 0.1, 0.05),
                         trunc: TruncationSpec | None = None,
                         quad: QuadratureSpec | None = None) -> Estimate:
    """Numerical ``c(pi/2)`` from exact ``c(pi/2 - h)`` extrapolated to ``h = 0``.

    Near parallel ``c`` is linear in ``h`` with slope ``-c_edge``. The value
    is the line through the two smallest steps; with three or more steps
    the distance to a quadratic extrapolation is the error estimate.
    """
    hs = np.asarray(sorted(hs, reverse=True), dtype=float)
    if hs.size < 2 or np.any(hs <= 0):
        raise ValueError("need at least two positive steps")
    cs = [c_of_theta(math.pi / 2 - h, "exact", trunc, quad) for h in hs]
    values = np.array([c.value for c in cs])
    slope = (values[-2] - values[-1]) / (hs[-2] - hs[-1])
    value = values[-1] - slope * hs[-1]
    error = max(c.error_estimate for c in cs) * (1 + 2 * hs[-1] / (hs[-2] - hs[-1]))
    if hs.size >= 3:
        error += abs(value - np.polyfit(hs, values, 2)[-1])
    return Estimate(float(value), float(error), "exact-parabolic",
                    all(c.converged for c in cs),
                    {"h": hs.tolist(), "c": values.tolist(), "slope": float(slope)})


def edge_coefficient(method: str = "two-reflection", h: float = 0.05,
                     trunc: TruncationSpec | None = None,
                     quad: QuadratureSpec | None = None) -> Estimate:
    r"""Slope of :math:`c(\theta)` at the parallel configuration.

    One-sided differences ``D(h) = [c(pi/2) - c(pi/2 - h)]/h`` at ``h`` and
    ``h/2`` are combined as ``2 D(h/2) - D(h)``. The result is flagged when
    the extrapolation moves the estimate by more than a quarter of its value.
    """
    if not 0.0 < h <= 0.1:
        raise ValueError("h must lie in (0, 0.1]")
    top = c_of_theta(math.pi / 2, method, trunc, quad)
    lows = [c_of_theta(math.pi / 2 - s, method, trunc, quad) for s in (h, h / 2)]
    d_h = (top.value - lows[0].value) / h
    d_half = (top.value - lows[1].value) / (h / 2)
    value = 2 * d_half - d_h
    error = abs(value - d_half) + 2 * sum(c.error_estimate for c in lows) / h
    ok = all(c.converged for c in lows) and abs(value - d_half) <= 0.25 * abs(value)
    return Estimate(float(value), float(error), method, ok,
                    {"D(h)": d_h, "D(h/2)": d_half, "h": h})


def edge_consistency_report(fit: AsymptoteFit, c_edge: Estimate) -> dict:
    """Side-by-side numbers relating the overlap intercept and the tilt slope.

    The mapping between the two parameterizations is not fixed, so nothing
    is asserted; the ratio is reported for inspection.
    """
    doubled = 2.0 * c_edge.value
    return {"overlap_intercept": fit.intercept, "c_edge": c_edge.value,
            "twice_c_edge": doubled,
            "ratio": fit.intercept / doubled if doubled else math.nan}
