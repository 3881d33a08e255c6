r"""Basis-agnostic numerical kernels.

Adaptive Gauss-Kronrod quadrature on (semi-)infinite domains, the complex
log-determinant, log-factorials, the complete elliptic integral of the second
kind and partial sums of :math:`\zeta(4)`.

All functions are pure; nothing here keeps state between calls.
"""
from __future__ import annotations

import heapq
import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg
from scipy.special import gammaln

__all__ = [
    "AccuracyWarning",
    "InvalidIntegrandError",
    "SingularMatrixError",
    "QuadratureSpec",
    "IntegralValue",
    "integrate_decaying",
    "sinh_trapezoid",
    "log_det",
    "log_factorial",
    "elliptic_e",
    "zeta4_partial",
]

MAPS = ("linear", "hyperbolic", "exponential-tail")


class AccuracyWarning(RuntimeWarning):
    """Requested accuracy was not reached; the best estimate is returned."""


class InvalidIntegrandError(ValueError):
    """The integrand produced NaN or Inf."""


class SingularMatrixError(np.linalg.LinAlgError):
    """A pivot of the LU factorization is exactly zero."""


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances and variable substitution for :func:`integrate_decaying`.

    ``map`` selects how an infinite domain is made finite:

    ``"linear"``
        no substitution, finite domains only.
    ``"hyperbolic"``
        :math:`x = x_0 + s\\,\\sinh t`, the integrand is then truncated in
        :math:`t` once it has decayed below double precision.
    ``"exponential-tail"``
        :math:`x = x_0 - s \\ln u` with :math:`u \\in (0, 1]`.
    """

    rel_tol: float = 1e-8
    abs_tol: float = 0.0
    max_refinements: int = 400
    map: str = "exponential-tail"

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError("QuadratureSpec requires rel_tol > 0")
        if not self.abs_tol >= 0:
            raise ValueError("QuadratureSpec requires abs_tol >= 0")
        if self.max_refinements < 1:
            raise ValueError("QuadratureSpec requires max_refinements >= 1")
        if self.map not in MAPS:
            raise ValueError(f"unknown map {self.map!r}; expected one of {MAPS}")

    def tightened(self, factor: float = 10.0) -> "QuadratureSpec":
        return QuadratureSpec(self.rel_tol / factor, self.abs_tol / factor,
                              2 * self.max_refinements, self.map)


@dataclass(frozen=True)
class IntegralValue:
    """Result of :func:`integrate_decaying`.

    ``value`` is a float, a complex number, or an array when the integrand is
    vector valued. ``error_estimate`` is the largest componentwise estimate.
    """

    value: float | complex | np.ndarray
    error_estimate: float
    evaluations: int
    converged: bool = True


# Gauss-Kronrod 7/15 abscissae and weights on [-1, 1] (QUADPACK qk15).
_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327])

_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_K15 = np.concatenate([_WGK[:-1], _WGK[::-1]])
_G7 = np.zeros(15)
_G7[[1, 3, 5]] = _WG[:3]
_G7[[13, 11, 9]] = _WG[:3]
_G7[7] = _WG[3]


def _build_pieces(domain, spec, scale):
    """Split a domain into finite parameter intervals with their maps.

    Each piece is ``(lo, hi, to_x)`` where ``to_x(p)`` returns ``(x, dx/dp)``.
    """
    a, b = (float(domain[0]), float(domain[1]))
    if not a < b:
        raise ValueError(f"integration domain must satisfy a < b, got {domain}")
    finite = math.isfinite(a) and math.isfinite(b)
    if finite or spec.map == "linear":
        if not finite:
            raise ValueError("the linear map needs a finite domain")
        return [(a, b, lambda p: (p, np.ones_like(p)))]

    if spec.map == "exponential-tail":
        pieces = []
        if math.isinf(a) and math.isinf(b):
            a_split = b_split = 0.0
        else:
            a_split, b_split = a, b
        if math.isinf(b):
            x0 = a_split
            pieces.append((0.0, 1.0, lambda u, x0=x0: (x0 - scale * np.log(u), scale / u)))
        if math.isinf(a):
            x0 = b_split
            pieces.append((0.0, 1.0, lambda u, x0=x0: (x0 + scale * np.log(u), scale / u)))
        return pieces

    # hyperbolic: x = x0 + scale*sinh(t); the t-range is found by _t_extent
    if math.isinf(a) and math.isinf(b):
        return [("sym", 0.0, lambda t: (scale * np.sinh(t), scale * np.cosh(t)))]
    if math.isinf(b):
        return [("right", a, lambda t, a=a: (a + scale * np.sinh(t), scale * np.cosh(t)))]
    return [("left", b, lambda t, b=b: (b - scale * np.sinh(t), scale * np.cosh(t)))]


def _evaluate(f, to_x, p):
    x, jac = to_x(p)
    y = np.asarray(f(x))
    if y.shape[0] != p.shape[0]:
        raise ValueError("integrand must return one value per node")
    if not np.all(np.isfinite(y)):
        raise InvalidIntegrandError("integrand returned NaN or Inf")
    return y * jac.reshape((-1,) + (1,) * (y.ndim - 1))


def _t_extent(f, to_x, kind, evals):
    """Outer limit in t beyond which the hyperbolic-mapped integrand is negligible."""
    probe = np.linspace(0.0, 60.0, 241)[1:]
    probe_x = probe if kind != "sym" else np.concatenate([probe, -probe])
    with np.errstate(over="ignore", invalid="ignore"):
        x, jac = to_x(probe_x)
        vals = np.abs(np.asarray(f(x)) * jac.reshape((-1,) + (1,) * (np.ndim(f(x[:1])) - 1)))
    evals[0] += 2 * probe_x.size
    vals = np.where(np.isfinite(vals), vals, 0.0)
    if vals.ndim > 1:
        vals = vals.reshape(vals.shape[0], -1).max(axis=1)
    if kind == "sym":
        vals = np.maximum(vals[:probe.size], vals[probe.size:])
    peak = vals.max()
    if peak == 0.0:
        return 1.0
    alive = np.nonzero(vals > 1e-18 * peak)[0]
    return float(probe[min(alive[-1] + 1, probe.size - 1)]) if alive.size else 1.0


def integrate_decaying(f: Callable[[np.ndarray], np.ndarray], domain,
                       spec: QuadratureSpec | None = None, *, scale: float = 1.0,
                       initial_panels: int = 4) -> IntegralValue:
    r"""Adaptive 7/15-point Gauss-Kronrod integration of a decaying function.

    Parameters
    ----------
    f : callable
        Vectorized integrand. Receives a 1-D array of abscissae and returns an
        array whose first axis matches it; trailing axes make the integral
        vector valued. Real and complex outputs are both accepted.
    domain : tuple
        ``(a, b)``, either limit may be infinite.
    spec : QuadratureSpec, optional
        Tolerances and substitution used for infinite limits.
    scale : float
        Length scale of the substitution, roughly the decay length of ``f``.

    Returns
    -------
    IntegralValue
        If the tolerance is not met within ``spec.max_refinements`` bisections
        the best estimate is returned with ``converged=False`` and an
        :class:`AccuracyWarning` is issued.

    Raises
    ------
    InvalidIntegrandError
        If ``f`` returns NaN or Inf at a quadrature node.
    """
    spec = spec or QuadratureSpec()
    if not scale > 0:
        raise ValueError("scale must be positive")
    evals = [0]
    roots = []
    for lo, hi, to_x in _build_pieces(domain, spec, scale):
        if isinstance(lo, str):
            kind = lo
            t_max = _t_extent(f, to_x, kind, evals)
            lo, hi = (-t_max, t_max) if kind == "sym" else (0.0, t_max)
        roots.append((lo, hi, to_x))

    def panel(lo, hi, to_x):
        half = 0.5 * (hi - lo)
        p = 0.5 * (hi + lo) + half * _NODES
        y = _evaluate(f, to_x, p)
        evals[0] += 15
        k = np.tensordot(_K15, y, axes=(0, 0)) * half
        g = np.tensordot(_G7, y, axes=(0, 0)) * half
        return k, np.abs(k - g)

    heap = []
    counter = 0
    for lo, hi, to_x in roots:
        edges = np.linspace(lo, hi, initial_panels + 1)
        for a, b in zip(edges[:-1], edges[1:]):
            k, e = panel(a, b, to_x)
            heapq.heappush(heap, (-float(np.max(e)), counter, a, b, to_x, k, e))
            counter += 1

    def totals():
        value = sum(item[5] for item in heap)
        error = sum(item[6] for item in heap)
        return value, error

    def satisfied(value, error):
        return bool(np.all(error <= np.maximum(spec.rel_tol * np.abs(value), spec.abs_tol)))

    refinements = 0
    value, error = totals()
    while not satisfied(value, error) and refinements < spec.max_refinements:
        _, _, a, b, to_x, _, _ = heapq.heappop(heap)
        mid = 0.5 * (a + b)
        for lo, hi in ((a, mid), (mid, b)):
            k, e = panel(lo, hi, to_x)
            heapq.heappush(heap, (-float(np.max(e)), counter, lo, hi, to_x, k, e))
            counter += 1
        refinements += 1
        value, error = totals()

    converged = satisfied(value, error)
    if not converged:
        warnings.warn(f"accuracy not reached after {refinements} refinements "
                      f"(error estimate {np.max(error):.3e})", AccuracyWarning, stacklevel=2)
    if np.ndim(value) == 0:
        value = complex(value) if np.iscomplexobj(value) else float(value)
    return IntegralValue(value, float(np.max(error)), evals[0], converged)


def sinh_trapezoid(a: float, step: float, alpha: float = 2.0, cutoff: float = 40.0):
    r"""Trapezoidal nodes for integrals :math:`\int dt\, F(t)\, e^{-a\cosh t}`.

    The grid is uniform in :math:`s` with :math:`t = \alpha\sinh(s/\alpha)`, so
    it is fine near :math:`t = 0` and coarse in the tails, and it extends until
    :math:`a(\cosh t - 1)` exceeds ``cutoff``.

    Returns
    -------
    t, weights : ndarray
        Nodes and weights including the Jacobian ``dt/ds``.
    """
    if not a > 0:
        raise ValueError("decay rate a must be positive")
    t_max = math.acosh(cutoff / a + 1.0)
    s_max = alpha * math.asinh(t_max / alpha)
    n = max(int(math.ceil(s_max / step)), 2)
    s = np.linspace(-s_max, s_max, 2 * n + 1)
    h = s[1] - s[0]
    return alpha * np.sinh(s / alpha), h * np.cosh(s / alpha)


def log_det(matrix) -> complex:
    """Log-determinant from a partially pivoted LU factorization.

    The result is the sum of the complex logarithms of the pivots, plus
    ``i*pi`` when the row permutation is odd.

    Raises
    ------
    SingularMatrixError
        If a pivot is exactly zero.
    """
    a = np.asarray(matrix)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"log_det needs a square matrix, got shape {a.shape}")
    if a.shape[0] == 0:
        return 0j
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(a, check_finite=False)
    pivots = np.diag(lu).astype(complex)
    if np.any(pivots == 0):
        raise SingularMatrixError("matrix is singular")
    swaps = int(np.count_nonzero(piv != np.arange(piv.size)))
    return complex(np.sum(np.log(pivots)) + (1j * math.pi if swaps % 2 else 0.0))


def log_factorial(n):
    """``ln(n!)`` for a nonnegative integer or an integer array."""
    arr = np.asarray(n)
    if np.any(arr < 0) or not np.all(np.equal(np.mod(arr, 1), 0)):
        raise ValueError("log_factorial needs nonnegative integers")
    if arr.ndim == 0:
        return math.lgamma(int(arr) + 1)
    return gammaln(arr + 1.0)


_ELLIPTIC_SPEC = QuadratureSpec(rel_tol=1e-14, abs_tol=0.0, max_refinements=200, map="linear")


def elliptic_e(m: float) -> float:
    r"""Complete elliptic integral of the second kind, parameter convention.

    .. math::
        E(m) = \int_0^{\pi/2} \sqrt{1 - m \sin^2\psi}\, d\psi, \qquad m \le 1.

    For ``m < 0`` the imaginary-modulus transformation
    :math:`E(m) = \sqrt{1-m}\,E\!\left(\frac{m}{m-1}\right)` is applied first so
    the quadrature always sees a parameter in ``[0, 1)``.
    """
    m = float(m)
    if m > 1.0 or math.isnan(m):
        raise ValueError(f"elliptic_e is defined for m <= 1, got {m}")
    if m == 1.0:
        return 1.0
    prefactor = 1.0
    if m < 0.0:
        prefactor = math.sqrt(1.0 - m)
        m = m / (m - 1.0)

    def integrand(psi):
        return np.sqrt(1.0 - m * np.sin(psi) ** 2)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AccuracyWarning)
        res = integrate_decaying(integrand, (0.0, 0.5 * math.pi), _ELLIPTIC_SPEC, initial_panels=2)
    return prefactor * res.value


def zeta4_partial(n: int) -> float:
    """Partial sum of ``1/k**4`` for ``k = 1..n``."""
    if n < 1:
        raise ValueError("zeta4_partial needs n >= 1")
    return math.fsum(1.0 / k ** 4 for k in range(int(n), 0, -1))
