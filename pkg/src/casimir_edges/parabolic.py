r"""Half-plane as a zero-radius parabolic cylinder.

The scattering channels are integers :math:`\nu \ge 0`. Even channels carry
the Dirichlet polarization and odd channels the Neumann one, and the
translation matrix never mixes the two. After :math:`k_x = q\sinh t` (so
:math:`\phi = -it`) a single-channel factor is

.. math::
    g_\nu(\psi) = \frac{\tan^\nu(\psi/2)}{\cos(\psi/2)}, \qquad \psi = \theta - it,

and the translation element between two half-planes reads

.. math::
    \mathcal U_{\nu\nu'} = \frac{1}{\sqrt{8\pi\,\nu!\,\nu'!}} \int dt\,
    g_\nu(\theta - it)\, g_{\nu'}(\bar\theta - it)\,
    e^{-q d_y\cosh t + i q d_x \sinh t}.

With :math:`T_\nu = -\sqrt{2/\pi}\,\nu!` the factorials in
:math:`T_1\mathcal U_{12}T_2\mathcal U_{21}` reduce to the similarity
transform :math:`\mathrm{diag}(\sqrt{\nu!})`. All matrices here are returned
in that balanced form, which has the same determinant and traces and never
overflows.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .geometry import (EnergyResult, GeometryError, HalfPlaneVsPlaneConfig, Polarization,
                       SpectralPoint, TruncationSpec, TwoHalfPlaneConfig)
from .numerics import (AccuracyWarning, QuadratureSpec, integrate_decaying, log_det,
                       log_factorial, sinh_trapezoid)
from .series import ReflectionSeries

__all__ = [
    "NonRealDeterminantError",
    "TruncationOverflowError",
    "t_parabolic_log",
    "u_parabolic",
    "u_parabolic_matrix",
    "n_matrix_two_halfplanes",
    "n_matrix_halfplane_plane",
    "logdet_integrand",
    "exact_energy",
    "truncated_energies",
    "reflection_series",
]

_T_SCALED = -math.sqrt(2.0 / math.pi)
_NORM = 1.0 / math.sqrt(8.0 * math.pi)
_SQRT_HALF_LOG_2_OVER_PI = 0.5 * math.log(2.0 / math.pi)

DEFAULT_QUAD = QuadratureSpec(rel_tol=1e-7, abs_tol=0.0, max_refinements=200,
                              map="exponential-tail")


class NonRealDeterminantError(ArithmeticError):
    """``log det(1 - N)`` has a non-negligible imaginary part."""

    def __init__(self, value: complex):
        self.value = value
        super().__init__(f"non-real determinant: log det = {value.real:.6e} "
                         f"{value.imag:+.6e}i")


class TruncationOverflowError(OverflowError):
    """Balanced matrix elements left the floating point range."""


def t_parabolic_log(nu: int) -> tuple[int, float]:
    """Sign and log-magnitude of the half-plane T-matrix element."""
    if nu < 0:
        raise ValueError("channel index must be nonnegative")
    return -1, _SQRT_HALF_LOG_2_OVER_PI + log_factorial(nu)


def _channels(nu_top: int, angle: float, t: np.ndarray) -> np.ndarray:
    """Rows ``g_nu(angle - i t)`` for ``nu = 0..nu_top``."""
    psi = 0.5 * (angle - 1j * t)
    ratio = np.tan(psi)
    out = np.empty((nu_top + 1, t.size), dtype=complex)
    out[0] = 1.0 / np.cos(psi)
    for k in range(1, nu_top + 1):
        out[k] = out[k - 1] * ratio
    return out


def _t_step(nu_top: int, ratio: float = 0.0) -> float:
    # Resolves the tan^nu phase winding; the d_x phase needs a finer grid.
    return min(2.0 / nu_top, 0.25 / (1.0 + abs(ratio)))


def _weight(q, config, t, dt):
    a = q * config.d_y
    return np.exp(-a * np.cosh(t) + 1j * q * config.d_x * np.sinh(t)) * dt * _NORM


def _blocks_balanced(matrix: np.ndarray):
    """Dirichlet (even) and Neumann (odd) parity blocks."""
    return matrix[0::2, 0::2], matrix[1::2, 1::2]


def _check_finite(*mats):
    for m in mats:
        if not np.all(np.isfinite(m)):
            raise TruncationOverflowError("truncation too aggressive: balanced N overflowed")


def u_parabolic_matrix(nu_top: int, point: SpectralPoint, config: TwoHalfPlaneConfig,
                       reverse: bool = False) -> np.ndarray:
    """Scaled translation matrix ``sqrt(nu! nu'!) U`` for channels ``0..nu_top``.

    ``reverse`` gives the return leg (body 2 to body 1): the offset and both
    angles flip sign and the row index belongs to the lower half-plane.
    Cross-parity elements are set to zero.
    """
    if point.q <= 0:
        raise GeometryError("q > 0", f"got q={point.q}")
    t, dt = sinh_trapezoid(point.q * config.d_y, _t_step(nu_top, config.ratio))
    w = _weight(point.q, config, t, dt)
    if reverse:
        left = _channels(nu_top, -config.theta_bar, t)
        right = _channels(nu_top, -config.theta, t)
        w = np.conj(w)
    else:
        left = _channels(nu_top, config.theta, t)
        right = _channels(nu_top, config.theta_bar, t)
    u = left @ (w[:, None] * right.T)
    parity = np.add.outer(np.arange(nu_top + 1), np.arange(nu_top + 1)) % 2
    u[parity == 1] = 0.0
    return u


def u_parabolic(nu: int, nu_prime: int, point: SpectralPoint, config: TwoHalfPlaneConfig,
                scaled: bool = False, quad: QuadratureSpec | None = None) -> complex:
    r"""One translation matrix element by adaptive quadrature in ``t``.

    Parameters
    ----------
    nu, nu_prime : int
        Channels of the upper and lower half-plane.
    scaled : bool
        If set, the :math:`1/\sqrt{\nu!\nu'!}` normalization is left out;
        it is absorbed into the T-matrices when N is assembled.

    Notes
    -----
    Only the literal integral is evaluated here; the parity restriction used
    when assembling N is applied by :func:`n_matrix_two_halfplanes`.
    """
    if nu < 0 or nu_prime < 0:
        raise ValueError("channel indices must be nonnegative")
    if point.q <= 0:
        raise GeometryError("q > 0", f"got q={point.q}")
    quad = quad or QuadratureSpec(rel_tol=1e-11, map="hyperbolic", max_refinements=400)
    q = point.q

    def integrand(t):
        psi1 = 0.5 * (config.theta - 1j * t)
        psi2 = 0.5 * (config.theta_bar - 1j * t)
        g = np.tan(psi1) ** nu / np.cos(psi1) * np.tan(psi2) ** nu_prime / np.cos(psi2)
        return g * np.exp(-q * config.d_y * np.cosh(t) + 1j * q * config.d_x * np.sinh(t))

    res = integrate_decaying(integrand, (-math.inf, math.inf), quad, scale=1.0)
    value = complex(res.value) * _NORM
    if not scaled:
        value *= math.exp(-0.5 * (log_factorial(nu) + log_factorial(nu_prime)))
    return value


def _two_halfplane_factors(point, config, nu_top):
    u12 = u_parabolic_matrix(nu_top, point, config)
    u21 = u_parabolic_matrix(nu_top, point, config, reverse=True)
    return [(_T_SCALED * a, _T_SCALED * b)
            for a, b in zip(_blocks_balanced(u12), _blocks_balanced(u21))]


def _two_halfplane_blocks(point, config, nu_top):
    blocks = [a @ b for a, b in _two_halfplane_factors(point, config, nu_top)]
    _check_finite(*blocks)
    return blocks


def _halfplane_plane_blocks(point, config, nu_top):
    a = 2.0 * point.q * config.d
    t, dt = sinh_trapezoid(a, _t_step(nu_top))
    w = np.exp(-a * np.cosh(t)) * dt * _NORM
    image = _channels(nu_top, config.theta, t) @ (w[:, None] * _channels(nu_top, -config.theta, t).T)
    even, odd = _blocks_balanced(image)
    # specular reflection off the plane: -1 for Dirichlet, +1 for Neumann
    blocks = [Polarization.DIRICHLET.sign * _T_SCALED * even,
              Polarization.NEUMANN.sign * _T_SCALED * odd]
    _check_finite(*blocks)
    return blocks


def _blocks(config, point, nu_top):
    if isinstance(config, TwoHalfPlaneConfig):
        return _two_halfplane_blocks(point, config, nu_top)
    if isinstance(config, HalfPlaneVsPlaneConfig):
        return _halfplane_plane_blocks(point, config, nu_top)
    raise TypeError(f"unsupported configuration {type(config).__name__}")


def _truncated_blocks(config, point, nus):
    """Parity blocks of N for every cutoff in ``nus`` from one kernel evaluation.

    Kernel elements do not depend on the cutoff, so lower cutoffs are leading
    sub-blocks of the factors; the channel sum inside a round trip is
    truncated at the same cutoff.
    """
    nu_top = max(nus)
    if isinstance(config, TwoHalfPlaneConfig):
        factors = _two_halfplane_factors(point, config, nu_top)
        out = []
        for nu in nus:
            sizes = (nu // 2 + 1, (nu + 1) // 2)
            out.append([a[:k, :k] @ b[:k, :k] for (a, b), k in zip(factors, sizes)])
    else:
        top = _blocks(config, point, nu_top)
        out = [_sub(top, nu) for nu in nus]
    for blocks in out:
        _check_finite(*blocks)
    return out


def _assemble(blocks, nu_top):
    n = np.zeros((nu_top + 1, nu_top + 1), dtype=complex)
    n[0::2, 0::2] = blocks[0]
    n[1::2, 1::2] = blocks[1]
    return n


def n_matrix_two_halfplanes(config: TwoHalfPlaneConfig, point: SpectralPoint,
                            trunc: TruncationSpec | None = None) -> np.ndarray:
    """Balanced round-trip matrix ``T1 U12 T2 U21`` for two half-planes.

    Row and column ``nu`` of the result equal those of N up to the factor
    ``sqrt(nu!/nu'!)``, so determinants and traces are unchanged.
    """
    trunc = trunc or TruncationSpec()
    return _assemble(_two_halfplane_blocks(point, config, trunc.nu_max), trunc.nu_max)


def n_matrix_halfplane_plane(config: HalfPlaneVsPlaneConfig, point: SpectralPoint,
                             trunc: TruncationSpec | None = None) -> np.ndarray:
    """Balanced round-trip matrix for a half-plane facing an infinite plane.

    The plane acts as a mirror: the wave leaving the half-plane returns as
    its image, picking up a factor -1 (Dirichlet) or +1 (Neumann) and the
    round-trip decay ``exp(-2 q d cosh t)``.
    """
    trunc = trunc or TruncationSpec()
    return _assemble(_halfplane_plane_blocks(point, config, trunc.nu_max), trunc.nu_max)


def _logdet_block(block) -> float:
    value = log_det(np.eye(block.shape[0]) - block)
    imag = math.remainder(value.imag, 2.0 * math.pi)
    if abs(imag) > 1e-8 * max(1.0, abs(value.real)):
        raise NonRealDeterminantError(complex(value.real, imag))
    return value.real


def logdet_integrand(config, point: SpectralPoint, trunc: TruncationSpec | None = None,
                     by_polarization: bool = False):
    """Real part of ``log det(1 - N)`` at one spectral point.

    Raises
    ------
    NonRealDeterminantError
        If the imaginary part exceeds ``1e-8 * max(1, |real part|)``.
    """
    trunc = trunc or TruncationSpec()
    if point.q == 0:
        raise GeometryError("q > 0", "the kernel is singular at q = 0")
    parts = [_logdet_block(b) for b in _blocks(config, point, trunc.nu_max)]
    return tuple(parts) if by_polarization else parts[0] + parts[1]


def _length(config) -> float:
    return config.d_y if isinstance(config, TwoHalfPlaneConfig) else config.d


def _sub(blocks, nu):
    # leading channels 0..nu of each parity block
    return [blocks[0][: nu // 2 + 1, : nu // 2 + 1], blocks[1][: (nu + 1) // 2, : (nu + 1) // 2]]


def _spectral_integral(config, nus, quad, per_q):
    """Integrate ``q * per_q(blocks) / (4 pi)`` for several channel cutoffs at once."""
    length = _length(config)

    def integrand(qs):
        rows = []
        for q in qs:
            if q == 0.0:
                rows.append(None)
                continue
            levels = _truncated_blocks(config, SpectralPoint(float(q)), nus)
            rows.append(np.array([q * per_q(blocks) for blocks in levels]))
        width = next((r.shape for r in rows if r is not None), None)
        return np.array([np.zeros(width) if r is None else r for r in rows])

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", AccuracyWarning)
        res = integrate_decaying(integrand, (0.0, math.inf), quad, scale=0.5 / length)
    return np.asarray(res.value) / (4.0 * math.pi), res.error_estimate / (4.0 * math.pi), \
        res.converged and not caught, res.evaluations


def _logdet_sum(blocks):
    return sum(_logdet_block(b) for b in blocks)


def truncated_energies(config, nus, quad: QuadratureSpec | None = None) -> np.ndarray:
    """Raw truncated energies, one per channel cutoff in ``nus``, no extrapolation."""
    nus = [int(n) for n in nus]
    if min(nus) < 2:
        raise ValueError("channel cutoffs must be >= 2")
    values, _, _, _ = _spectral_integral(config, nus, quad or DEFAULT_QUAD, _logdet_sum)
    return values


def _richardson(values):
    """Value and error from three cutoffs nu, 2nu, 4nu, assuming 1/nu^2 truncation error."""
    e1, e2, e4 = values[0], values[1], values[2]
    r_low = e2 + (e2 - e1) / 3.0
    r_high = e4 + (e4 - e2) / 3.0
    return r_high, np.abs(r_high - r_low)


def _escalate(config, trunc, quad, per_q, tolerance_of):
    trunc = trunc or TruncationSpec()
    quad = quad or DEFAULT_QUAD
    history = []
    for k in range(trunc.max_doublings + 1):
        nu = trunc.nu_max * 2 ** k
        nus = (nu, 2 * nu, 4 * nu)
        values, q_err, q_ok, evals = _spectral_integral(config, nus, quad, per_q)
        value, t_err = _richardson(values)
        error = t_err + q_err
        ok = q_ok and bool(np.all(error <= tolerance_of(value)))
        history.append({"nu": list(nus), "raw": np.atleast_1d(values[-1]).tolist(),
                        "extrapolated": np.atleast_1d(value).tolist(),
                        "evaluations": evals, "quadrature_converged": q_ok})
        if ok:
            break
    used = TruncationSpec(nu_max=nus[-1], lambda_max=trunc.lambda_max,
                          convergence_tol=trunc.convergence_tol,
                          lambda_nodes=trunc.lambda_nodes, max_doublings=trunc.max_doublings)
    return value, error, ok, used, history


def exact_energy(config, trunc: TruncationSpec | None = None,
                 quad: QuadratureSpec | None = None) -> EnergyResult:
    r"""Exact Casimir energy per unit length from the full determinant.

    .. math::
        \frac{\mathcal E}{\hbar c L} = \frac{1}{4\pi}\int_0^\infty q\,dq\,
        \log\det(1 - \mathcal N(q))

    Parameters
    ----------
    config : TwoHalfPlaneConfig or HalfPlaneVsPlaneConfig
    trunc : TruncationSpec
        The determinant is evaluated with ``nu_max``, ``2 nu_max`` and
        ``4 nu_max`` channels from one set of kernel evaluations. The
        truncation error falls like ``1/nu**2``, so consecutive pairs are
        Richardson extrapolated and the difference of the two extrapolants
        is the truncation error estimate. The base cutoff is doubled until
        the estimate is below ``convergence_tol`` relative.
    quad : QuadratureSpec
        Tolerance of the adaptive q integration.

    Returns
    -------
    EnergyResult
        ``value`` in units of the inverse squared length of the inputs.
        ``converged`` requires both the truncation and the quadrature
        estimates to be inside ``convergence_tol``.
    """
    trunc = trunc or TruncationSpec()
    value, error, ok, used, history = _escalate(
        config, trunc, quad, _logdet_sum, lambda v: trunc.convergence_tol * abs(v))
    return EnergyResult(float(value), float(error), "exact-parabolic", ok, used,
                        {"history": history})


def reflection_series(config, n_max: int, trunc: TruncationSpec | None = None,
                      quad: QuadratureSpec | None = None) -> ReflectionSeries:
    """Per-order energies ``-(1/n) tr N^n`` in the parabolic basis."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    trunc = trunc or TruncationSpec()

    def per_q(blocks):
        out = np.zeros(2 * n_max)
        for p, b in enumerate(blocks):
            power = np.eye(b.shape[0])
            for n in range(1, n_max + 1):
                power = power @ b
                out[p * n_max + n - 1] = -np.trace(power).real / n
        return out

    value, error, ok, used, history = _escalate(
        config, trunc, quad, per_q,
        lambda v: trunc.convergence_tol * np.abs(v) + 1e-12 * np.max(np.abs(v)))
    return ReflectionSeries.from_polarized(value[:n_max], value[n_max:],
                                          error[:n_max] + error[n_max:], converged=ok)
