r"""Half-plane as a wedge of zero opening angle.

The wedge basis is labelled by a continuous imaginary angular momentum
:math:`\lambda \ge 0` with :math:`T^{D/N}_\lambda = \mp 1/\cosh\pi\lambda`.
After :math:`k_x = q\sinh t` the translation kernel at :math:`d_x = 0` is

.. math::
    \mathcal U_{\lambda\lambda'} = 2\int_{-\infty}^{\infty} dt\,
    \cosh(\lambda(it+\theta))\cosh(\lambda'(it+\bar\theta))\, e^{-q d_y\cosh t},

with :math:`\sinh` in place of :math:`\cosh` for Neumann. Its imaginary part
is odd in :math:`t` and integrates to zero. A round trip is
:math:`\mathcal N = T\,\mathcal U\,T\,\mathcal U^{\mathsf T}` with the measure
:math:`d\lambda/2\pi` on every internal index.

The module also holds the closed-form one- and two-reflection energies.
"""
from __future__ import annotations

import math
import warnings

import numpy as np
from numpy.polynomial.legendre import leggauss

from .geometry import (EnergyResult, GeometryError, Polarization, SpectralPoint,
                       TruncationSpec, TwoHalfPlaneConfig)
from .numerics import AccuracyWarning, QuadratureSpec, integrate_decaying
from .series import ReflectionSeries

__all__ = [
    "t_wedge",
    "u_wedge",
    "u_wedge_matrix",
    "n_matrix_wedge",
    "trace_n_power_wedge",
    "energy_reflection_series",
    "energy_first_reflection_tilted",
    "energy_first_reflection_overlap",
    "overlap_bracket",
    "overlap_bracket_derivative",
    "energy_two_reflection_edge",
    "two_reflection_edge_terms",
    "two_reflection_c",
]

_SWITCH = 1e-4
DEFAULT_QUAD = QuadratureSpec(rel_tol=1e-7, abs_tol=0.0, max_refinements=200,
                              map="exponential-tail")


def t_wedge(lam, pol) -> float | np.ndarray:
    """Wedge T-matrix: -1/cosh(pi lam) for Dirichlet, +1/cosh(pi lam) for Neumann."""
    pol = Polarization.parse(pol)
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < 0):
        raise ValueError("lambda must be nonnegative")
    out = pol.sign / np.cosh(math.pi * lam)
    return float(out) if out.ndim == 0 else out


def _kernel(pol):
    return np.cosh if Polarization.parse(pol) is Polarization.DIRICHLET else np.sinh


def _check_dy(d_y):
    if not d_y > 0:
        raise GeometryError("d_y > 0", f"got d_y={d_y}")


def u_wedge(lam: float, lam_prime: float, point: SpectralPoint, d_y: float, theta: float,
            theta_bar: float, pol, quad: QuadratureSpec | None = None) -> float:
    """Translation kernel element by adaptive quadrature over ``t``."""
    _check_dy(d_y)
    if point.q <= 0:
        raise GeometryError("q > 0", f"got q={point.q}")
    f = _kernel(pol)
    a = point.q * d_y
    quad = quad or QuadratureSpec(rel_tol=1e-11, map="hyperbolic", max_refinements=400)

    def integrand(t):
        return 2.0 * np.real(f(lam * (1j * t + theta)) * f(lam_prime * (1j * t + theta_bar))) \
            * np.exp(-a * np.cosh(t))

    return float(integrate_decaying(integrand, (-math.inf, math.inf), quad).value)


def _t_grid(a: float, lam_top: float):
    t_max = math.acosh(40.0 / a + 1.0)
    step = min(0.1, 2.0 / max(lam_top, 1e-12))
    n = max(int(math.ceil(t_max / step)), 4)
    t = np.linspace(-t_max, t_max, 2 * n + 1)
    return t, t[1] - t[0]


def _kernel_pair(lam, a, theta, theta_bar):
    """Dirichlet and Neumann kernels sharing the trigonometric products.

    With ``cosh(lam (i t + th)) = cosh(lam th) cos(lam t) + i sinh(lam th) sin(lam t)``
    the real part of the product reduces to two real matrix products.
    """
    t, dt = _t_grid(a, float(lam.max(initial=0.0)))
    weight = 2.0 * np.exp(-a * np.cosh(t)) * dt
    phase = np.outer(lam, t)
    cos, sin = np.cos(phase), np.sin(phase)
    cc = cos @ (weight[:, None] * cos.T)
    ss = sin @ (weight[:, None] * sin.T)
    ch1, sh1 = np.cosh(lam * theta), np.sinh(lam * theta)
    ch2, sh2 = np.cosh(lam * theta_bar), np.sinh(lam * theta_bar)
    dirichlet = np.outer(ch1, ch2) * cc - np.outer(sh1, sh2) * ss
    neumann = np.outer(sh1, sh2) * cc - np.outer(ch1, ch2) * ss
    return {Polarization.DIRICHLET: dirichlet, Polarization.NEUMANN: neumann}


def u_wedge_matrix(lam: np.ndarray, point: SpectralPoint, d_y: float, theta: float,
                   theta_bar: float, pol) -> np.ndarray:
    """Kernel on a grid of wedge indices by the trapezoidal rule in ``t``.

    The integrand is analytic in a strip around the real axis and decays
    doubly exponentially, so the trapezoidal rule converges geometrically.
    """
    _check_dy(d_y)
    if point.q <= 0:
        raise GeometryError("q > 0", f"got q={point.q}")
    lam = np.asarray(lam, dtype=float)
    return _kernel_pair(lam, point.q * d_y, theta, theta_bar)[Polarization.parse(pol)]


def _lambda_grid(lambda_max: float, nodes: int):
    x, w = leggauss(nodes)
    lam = 0.5 * (x + 1.0) * lambda_max
    return lam, w * 0.5 * lambda_max / (2.0 * math.pi)


def _round_trips(config, point, lambda_max, nodes):
    if config.d_x != 0.0:
        raise GeometryError("d_x = 0", "the wedge engine is restricted to d_x = 0")
    lam, w = _lambda_grid(lambda_max, nodes)
    kernels = _kernel_pair(lam, point.q * config.d_y, config.theta, config.theta_bar)
    out = {}
    for pol, u in kernels.items():
        tw = t_wedge(lam, pol) * w
        out[pol] = (tw[:, None] * u) @ (tw[:, None] * u.T)
    return out


def n_matrix_wedge(config: TwoHalfPlaneConfig, point: SpectralPoint, pol,
                   lambda_max: float, nodes: int) -> np.ndarray:
    """Discretized round-trip operator on a Gauss-Legendre grid in lambda.

    Quadrature weights are folded in, so ``tr N^n`` of the returned matrix
    approximates the trace of the continuous operator.
    """
    if point.q <= 0:
        raise GeometryError("q > 0", f"got q={point.q}")
    return _round_trips(config, point, lambda_max, nodes)[Polarization.parse(pol)]


def _traces(matrix, n_max):
    out = np.empty(n_max)
    power = np.eye(matrix.shape[0])
    for n in range(n_max):
        power = power @ matrix
        out[n] = np.trace(power)
    return out


def trace_n_power_wedge(config: TwoHalfPlaneConfig, point: SpectralPoint, n: int, pol,
                        trunc: TruncationSpec | None = None) -> float:
    """``tr N^n`` at one spectral point in the wedge basis."""
    if n < 1:
        raise ValueError("order n must be >= 1")
    trunc = trunc or TruncationSpec()
    if point.q == 0:
        raise GeometryError("q > 0", "the kernel is singular at q = 0")
    mat = n_matrix_wedge(config, point, pol, trunc.lambda_max, trunc.lambda_nodes)
    return float(_traces(mat, n)[-1])


def energy_reflection_series(config: TwoHalfPlaneConfig, n_max: int,
                             trunc: TruncationSpec | None = None,
                             quad: QuadratureSpec | None = None) -> ReflectionSeries:
    r"""Per-order energies from wedge-basis traces.

    .. math::
        \frac{\mathcal E_n}{\hbar c L} = -\frac{1}{4\pi}\int_0^\infty q\,dq\,
        \frac{1}{n}\left[\operatorname{tr}\mathcal N_D^n + \operatorname{tr}\mathcal N_N^n\right]

    The lambda truncation is checked by repeating every spectral point with
    ``lambda_max`` and the node count doubled; the series is flagged as not
    converged if any order moves by more than ``convergence_tol`` relative.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    if config.d_x != 0.0:
        raise GeometryError("d_x = 0", "the wedge engine is restricted to d_x = 0")
    trunc = trunc or TruncationSpec()
    quad = quad or DEFAULT_QUAD
    grids = ((trunc.lambda_max, trunc.lambda_nodes), (2 * trunc.lambda_max, 2 * trunc.lambda_nodes))
    scale = np.arange(1, n_max + 1)

    def integrand(qs):
        rows = np.zeros((len(qs), 2, 2, n_max))
        for i, q in enumerate(qs):
            if q == 0.0:
                continue
            point = SpectralPoint(float(q))
            for g, (lmax, nodes) in enumerate(grids):
                mats = _round_trips(config, point, lmax, nodes)
                for p, pol in enumerate(Polarization):
                    rows[i, g, p] = -q * _traces(mats[pol], n_max) / scale
        return rows

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", AccuracyWarning)
        res = integrate_decaying(integrand, (0.0, math.inf), quad, scale=0.5 / config.d_y)
    vals = np.asarray(res.value) / (4.0 * math.pi)
    coarse, fine = vals[0], vals[1]
    total_coarse, total_fine = coarse.sum(axis=0), fine.sum(axis=0)
    lam_err = np.abs(total_fine - total_coarse)
    errors = lam_err + res.error_estimate / (4.0 * math.pi)
    ok = (not caught) and bool(np.all(lam_err <= trunc.convergence_tol * np.abs(total_fine)))
    return ReflectionSeries.from_polarized(fine[0], fine[1], errors, converged=ok)


def _check_open_angle(name, value):
    if not 0.0 < value < math.pi:
        raise GeometryError(f"0 < {name} < pi", f"got {name}={value}")


def _x_csc2(x):
    return x / math.sin(x) ** 2


def energy_first_reflection_tilted(d_y: float, theta: float, theta_bar: float) -> EnergyResult:
    r"""First-reflection energy of two tilted half-planes at ``d_x = 0``.

    .. math::
        \frac{\mathcal E}{\hbar c L} = -\frac{1}{64\pi^3 d_y^2}\Big[\frac83
        + 4\csc\theta\csc\bar\theta
        + 4(\theta\csc^2\theta - \bar\theta\csc^2\bar\theta)\csc(\theta-\bar\theta)\Big]

    For ``|theta - theta_bar| < 1e-4`` the difference quotient is replaced by
    the derivative of ``x csc^2 x`` at the midpoint.
    """
    _check_dy(d_y)
    _check_open_angle("theta", theta)
    _check_open_angle("theta_bar", theta_bar)
    delta = theta - theta_bar
    if abs(delta) < _SWITCH:
        m = 0.5 * (theta + theta_bar)
        csc2 = 1.0 / math.sin(m) ** 2
        quotient = csc2 - 2.0 * m * csc2 / math.tan(m)
    else:
        quotient = (_x_csc2(theta) - _x_csc2(theta_bar)) / math.sin(delta)
    bracket = 8.0 / 3.0 + 4.0 / (math.sin(theta) * math.sin(theta_bar)) + 4.0 * quotient
    return EnergyResult(-bracket / (64.0 * math.pi ** 3 * d_y ** 2), 0.0, "closed-form")


def overlap_bracket(r):
    """Bracket of the first-reflection overlap energy as a function of ``r = d_x/d_y``.

    The complex logarithm is written as ``atan2(1, -r)`` so the branch is
    right for either sign of ``r``.
    """
    r = np.asarray(r, dtype=float)
    return 1.0 / (1.0 + r * r) + 3.0 * (1.0 + r * np.arctan2(1.0, -r))


def overlap_bracket_derivative(r):
    r = np.asarray(r, dtype=float)
    return -2.0 * r / (1.0 + r * r) ** 2 + 3.0 * (np.arctan2(1.0, -r) + r / (1.0 + r * r))


def energy_first_reflection_overlap(d_x: float, d_y: float) -> EnergyResult:
    """First-reflection energy of two parallel half-planes offset by ``d_x``."""
    _check_dy(d_y)
    if not math.isfinite(d_x):
        raise GeometryError("d_x finite", f"got d_x={d_x}")
    value = -float(overlap_bracket(d_x / d_y)) / (24.0 * math.pi ** 3 * d_y ** 2)
    return EnergyResult(value, 0.0, "closed-form")


def _edge_ratio(theta):
    # (2 theta - sin 2 theta) / sin^3 theta, with its series near 0
    if theta < 1e-3:
        return 4.0 / 3.0 + 0.4 * theta * theta
    return (2.0 * theta - math.sin(2.0 * theta)) / math.sin(theta) ** 3


def two_reflection_edge_terms(d: float, theta: float) -> tuple[float, float]:
    """First- and second-reflection energies of a half-plane facing a plane."""
    if not d > 0:
        raise GeometryError("d > 0", f"got d={d}")
    if not 0.0 <= theta < math.pi / 2:
        raise GeometryError("0 <= theta < pi/2", f"got theta={theta}")
    sec = 1.0 / math.cos(theta)
    first = -sec / (16.0 * math.pi ** 2 * d * d)
    second = -(4.0 / 3.0 + _edge_ratio(theta) * sec) / (256.0 * math.pi ** 3 * d * d)
    return first, second


def energy_two_reflection_edge(d: float, theta: float) -> EnergyResult:
    r"""Two-reflection energy of a half-plane at angle ``theta`` facing a plane.

    .. math::
        \frac{\mathcal E}{\hbar c L} = -\frac{\sec\theta}{16\pi^2 d^2}
        - \frac{1}{256\pi^3 d^2}\left(\frac43
        + \csc^3\theta\sec\theta\,(2\theta - \sin 2\theta)\right)
    """
    first, second = two_reflection_edge_terms(d, theta)
    return EnergyResult(first + second, 0.0, "closed-form")


def two_reflection_c(theta: float) -> float:
    """``c(theta) = -E cos(theta) d^2`` from the two-reflection formula, finite at pi/2."""
    if not 0.0 <= theta <= math.pi / 2:
        raise GeometryError("0 <= theta <= pi/2", f"got theta={theta}")
    return 1.0 / (16.0 * math.pi ** 2) + (4.0 * math.cos(theta) / 3.0 + _edge_ratio(theta)) \
        / (256.0 * math.pi ** 3)
