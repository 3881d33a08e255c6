r"""First-reflection free energies of a half-plane facing a plane at ``T > 0``.

Everything is expressed through :math:`x = d/\lambda_T` with
:math:`\lambda_T = \hbar c/(2\pi k_B T)`; the Matsubara wave numbers are then
:math:`\kappa_n d = n x`. Returned values are :math:`\mathcal F/(\hbar c L)`
in inverse squared units of ``d``, so ``F * d**2`` depends on ``x`` only.

Per polarization the first reflection gives, with
:math:`k = \sqrt{\kappa_n^2 + k_x^2 + k_z^2}`,

.. math::
    \frac{\mathcal F}{k_B T L} = -\frac{1}{8\pi^2}{\sum_n}'\int dk_x\,dk_z\,
    \frac{e^{-2dk}}{k}\left(\pm\frac{\sqrt{\kappa_n^2+k_z^2}}{k}
    + \frac{1}{\cos\theta}\right).

The ``1/cos(theta)`` part sums in closed form to
:math:`-\sec\theta\, x\coth x/(32\pi^2 d^2)` per polarization.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import ellipe

from .geometry import GeometryError, HalfPlaneVsPlaneConfig, Polarization
from .numerics import AccuracyWarning, QuadratureSpec, elliptic_e, integrate_decaying

__all__ = [
    "ThermalConfig",
    "ThermalResult",
    "LowTemperatureReport",
    "matsubara_free_energy",
    "em_free_energy_closed",
    "scalar_free_energy_elliptic",
    "scalar_zero_temperature",
    "low_temperature_fit",
]

_TERM_TOL = 1e-12
_INNER = QuadratureSpec(rel_tol=1e-13, abs_tol=0.0, max_refinements=300, map="exponential-tail")


@dataclass(frozen=True)
class ThermalConfig:
    """Temperature as ``ratio = d / lambda_T`` and a Matsubara cutoff."""

    ratio: float
    n_max: int = 20000

    def __post_init__(self):
        if not self.ratio >= 0 or not math.isfinite(self.ratio):
            raise GeometryError("ratio >= 0", f"got ratio={self.ratio}")
        if self.n_max < 1:
            raise ValueError("ThermalConfig requires n_max >= 1")


@dataclass(frozen=True)
class ThermalResult:
    value: float
    terms: int
    converged: bool = True
    parts: dict = field(default_factory=dict, compare=False)


def _check_theta(theta):
    if not 0.0 <= theta < math.pi / 2:
        raise GeometryError("0 <= theta < pi/2", f"got theta={theta}")


def _require_positive(ratio):
    if not ratio > 0:
        raise GeometryError("ratio > 0", f"got ratio={ratio}")


def _polarized_integral(kappa: float) -> float:
    r"""``int dk_x dk_z e^{-2k} sqrt(kappa^2 + k_z^2) / k^2`` at ``d = 1``.

    In polar coordinates of ``(k_x, k_z)`` the angular integral is
    ``4 k E(1 - kappa^2/k^2)``, leaving a single decaying integral in
    ``k - kappa``.
    """
    if kappa == 0.0:
        return 2.0

    def f(u):
        k = kappa + u
        return np.exp(-2.0 * u) * ellipe(1.0 - (kappa / k) ** 2)

    res = integrate_decaying(f, (0.0, math.inf), _INNER, scale=0.5)
    return 4.0 * math.exp(-2.0 * kappa) * res.value


def _plain_integral(kappa: float) -> float:
    """``int dk_x dk_z e^{-2k} / k = pi e^{-2 kappa}`` at ``d = 1``."""
    return math.pi * math.exp(-2.0 * kappa)


def matsubara_free_energy(config: HalfPlaneVsPlaneConfig, thermal: ThermalConfig,
                          pol) -> ThermalResult:
    """Direct Matsubara sum for one polarization at first reflection.

    The sum stops once a term is below ``1e-12`` of the running total; if
    ``thermal.n_max`` is reached first the result is flagged.
    """
    pol = Polarization.parse(pol)
    _check_theta(config.theta)
    x = thermal.ratio
    _require_positive(x)
    sec = 1.0 / math.cos(config.theta)
    sign = -pol.sign  # Dirichlet takes the upper sign
    polar_sum = plain_sum = 0.0
    converged = False
    n = 0
    for n in range(thermal.n_max + 1):
        weight = 0.5 if n == 0 else 1.0
        a = weight * _polarized_integral(n * x)
        b = weight * _plain_integral(n * x)
        polar_sum += a
        plain_sum += b
        if n > 0 and abs(a) + sec * b < _TERM_TOL * (abs(polar_sum) + sec * plain_sum):
            converged = True
            break
    prefactor = -x / (16.0 * math.pi ** 3) / config.d ** 2
    polar = prefactor * sign * polar_sum
    plain = prefactor * sec * plain_sum
    return ThermalResult(polar + plain, n + 1, converged,
                         {"polarized": polar, "secant": plain})


def em_free_energy_closed(config: HalfPlaneVsPlaneConfig, thermal: ThermalConfig) -> float:
    r"""Electromagnetic first-reflection free energy in closed form.

    .. math::
        \frac{\mathcal F}{\hbar c L} = -\frac{\sec\theta}{16\pi^2 d^2}\,
        x\coth x = -\frac{\sec\theta}{16\pi^2\lambda_T d}\coth\frac{d}{\lambda_T}

    This is the sum over both polarizations; its ``T -> 0`` limit is the
    first-reflection energy ``-sec(theta)/(16 pi^2 d^2)``.
    """
    _check_theta(config.theta)
    x = thermal.ratio
    _require_positive(x)
    x_coth = x / math.tanh(x) if x > 1e-8 else 1.0 + x * x / 3.0
    return -x_coth / (16.0 * math.pi ** 2 * math.cos(config.theta) * config.d ** 2)


def _csch2(z):
    e = np.exp(-2.0 * z)
    return 4.0 * e / (1.0 - e) ** 2


def scalar_free_energy_elliptic(d: float, thermal: ThermalConfig, pol) -> float:
    r"""Polarization-odd part of the scalar free energy.

    .. math::
        \frac{\mathcal F}{\hbar c L} = \mp\frac{x}{16\pi^3 d^2}\left[1 + x\int_1^\infty
        \frac{dt}{t}\,\mathrm{csch}^2(xt)\,E(1-t^2)\right]

    with ``E(m)`` in the parameter convention. Dirichlet takes the upper sign.
    """
    pol = Polarization.parse(pol)
    if not d > 0:
        raise GeometryError("d > 0", f"got d={d}")
    x = thermal.ratio
    _require_positive(x)
    e_vec = np.vectorize(elliptic_e, otypes=[float])

    def f(t):
        return _csch2(x * t) * e_vec(1.0 - t * t) / t

    with warnings.catch_warnings():
        warnings.simplefilter("error", AccuracyWarning)
        spec = QuadratureSpec(rel_tol=1e-11, abs_tol=0.0, max_refinements=300,
                              map="exponential-tail")
        j = integrate_decaying(f, (1.0, math.inf), spec, scale=0.5 / x).value
    return pol.sign * x * (1.0 + x * j) / (16.0 * math.pi ** 3 * d * d)


def scalar_zero_temperature(pol) -> float:
    """``T -> 0`` limit of :func:`scalar_free_energy_elliptic` times ``d**2``.

    Uses ``int_1^inf E(1 - t^2) / t^3 dt = pi^2 / 8``.
    """
    return Polarization.parse(pol).sign / (128.0 * math.pi)


@dataclass(frozen=True)
class LowTemperatureReport:
    em_coefficients: tuple
    em_condition: float
    scalar_x2: float
    scalar_slope: float
    scalar_r2: float
    ratios: tuple
    flagged: bool


def low_temperature_fit(d: float, ratios: Sequence[float], pol="D") -> LowTemperatureReport:
    r"""Small-``x`` expansion checks.

    The electromagnetic free energy normalized by its zero-temperature value
    is fitted to :math:`c_0 + c_2x^2 + c_4x^4`. For the scalar channel,
    :math:`\Delta(x) = F(x) - F(0)` is fitted to
    :math:`a x^2 + b x^3\ln x + c x^3`, and
    :math:`G(x) = [\Delta(x) - a x^2]/x^3` is regressed on :math:`\ln x`; a
    coefficient of determination near 1 shows the :math:`T^3\ln T` term.
    """
    xs = np.asarray(sorted(ratios, reverse=True), dtype=float)
    if xs.size < 5 or np.any(xs <= 0) or np.any(xs > 0.3):
        raise ValueError("need at least 5 ratios in (0, 0.3]")
    cfg = HalfPlaneVsPlaneConfig(d, 0.0)
    zero = -1.0 / (16.0 * math.pi ** 2 * d * d)
    em = np.array([em_free_energy_closed(cfg, ThermalConfig(x)) / zero for x in xs])
    basis = np.c_[np.ones_like(xs), xs ** 2, xs ** 4]
    coef = np.linalg.lstsq(basis, em, rcond=None)[0]
    cond = float(np.linalg.cond(basis))

    f0 = scalar_zero_temperature(pol) / (d * d)
    delta = np.array([scalar_free_energy_elliptic(d, ThermalConfig(x), pol) for x in xs]) - f0
    delta *= d * d
    basis_s = np.c_[xs ** 2, xs ** 3 * np.log(xs), xs ** 3]
    a = np.linalg.lstsq(basis_s, delta, rcond=None)[0][0]
    g = (delta - a * xs ** 2) / xs ** 3
    logs = np.log(xs)
    slope, intercept = np.polyfit(logs, g, 1)
    resid = g - (slope * logs + intercept)
    r2 = 1.0 - float(np.sum(resid ** 2) / np.sum((g - g.mean()) ** 2))
    flagged = cond > 1e10 or float(np.linalg.cond(basis_s)) > 1e12
    return LowTemperatureReport(tuple(float(c) for c in coef), cond, float(a), float(slope),
                                r2, tuple(xs.tolist()), flagged)
