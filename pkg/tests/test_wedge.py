import math

import mpmath
import numpy as np
import pytest
from scipy.special import k0

from casimir_edges.geometry import GeometryError, Polarization, SpectralPoint, TwoHalfPlaneConfig
from casimir_edges.wedge import (energy_first_reflection_overlap, energy_first_reflection_tilted,
                                 energy_reflection_series, energy_two_reflection_edge,
                                 t_wedge, trace_n_power_wedge, two_reflection_c,
                                 two_reflection_edge_terms, u_wedge, u_wedge_matrix)

D, N = Polarization.DIRICHLET, Polarization.NEUMANN
PI = math.pi


def bessel_kernel(lam, lamp, a, th, tb, pol):
    """Closed form through K of imaginary order."""
    kp = float(mpmath.besselk(1j * (lam + lamp), a).real)
    km = float(mpmath.besselk(1j * (lam - lamp), a).real)
    cp, cm = math.cosh(lam * th + lamp * tb), math.cosh(lam * th - lamp * tb)
    return 2 * (cm * km + cp * kp) if pol is D else 2 * (cp * kp - cm * km)


def test_t_wedge_values():
    assert t_wedge(0, D) == -1
    assert t_wedge(0, N) == 1
    assert t_wedge(1, D) == pytest.approx(-0.0862667, abs=1e-7)
    assert np.allclose(t_wedge(np.array([0.5, 2.0]), "N"), 1 / np.cosh(PI * np.array([0.5, 2.0])))


def test_u_wedge_zero_index():
    assert u_wedge(0, 0, SpectralPoint(1.0), 1.0, 0.3, 1.1, D) == pytest.approx(4 * k0(1.0), rel=1e-10)
    assert u_wedge(0, 0, SpectralPoint(1.0), 1.0, 0.3, 1.1, N) == 0.0
    assert 4 * k0(1.0) == pytest.approx(1.68410, abs=1e-5)


@pytest.mark.parametrize("pol", [D, N])
@pytest.mark.parametrize("lam,lamp,a,th,tb", [(0.7, 1.3, 1.0, 0.4, 0.9), (2.0, 0.5, 0.05, 1.5, 2.5),
                                              (5.0, 4.0, 3.0, 0.2, 0.1)])
def test_u_wedge_against_bessel_closed_form(pol, lam, lamp, a, th, tb):
    ref = bessel_kernel(lam, lamp, a, th, tb, pol)
    quad = u_wedge(lam, lamp, SpectralPoint(a), 1.0, th, tb, pol)
    grid = u_wedge_matrix(np.array([lam, lamp]), SpectralPoint(a), 1.0, th, tb, pol)[0, 1]
    scale = max(abs(ref), 1e-3 * math.cosh(lam * th) * math.cosh(lamp * tb) * float(k0(a)))
    assert quad == pytest.approx(ref, abs=1e-9 * scale)
    assert grid == pytest.approx(ref, abs=1e-9 * scale)


def test_u_wedge_symmetry():
    p = SpectralPoint(0.8)
    for pol in (D, N):
        assert u_wedge(0.7, 1.3, p, 1.0, 0.4, 0.9, pol) == pytest.approx(
            u_wedge(1.3, 0.7, p, 1.0, 0.9, 0.4, pol), rel=1e-12)


def test_u_wedge_rejects_bad_geometry():
    with pytest.raises(GeometryError):
        u_wedge(1, 1, SpectralPoint(1.0), 0.0, 1, 1, D)


def test_trace_vanishes_at_large_q():
    cfg = TwoHalfPlaneConfig(1.0)
    assert abs(trace_n_power_wedge(cfg, SpectralPoint(200.0), 1, D)) < 1e-60


def test_trace_power_inequality_on_q_grid():
    cfg = TwoHalfPlaneConfig(1.0)
    for q in (0.01, 0.1, 1.0, 3.0):
        t1 = trace_n_power_wedge(cfg, SpectralPoint(q), 1, D)
        t2 = trace_n_power_wedge(cfg, SpectralPoint(q), 2, D)
        assert 0 < t2 <= t1 * t1


def test_wedge_requires_zero_dx():
    with pytest.raises(GeometryError):
        trace_n_power_wedge(TwoHalfPlaneConfig(1.0, 0.5), SpectralPoint(1.0), 1, D)


@pytest.fixture(scope="module")
def series_half_quarter():
    return energy_reflection_series(TwoHalfPlaneConfig(1.0, 0.0, PI / 2, PI / 4), 3)


def test_series_orders_negative_and_decreasing(series_half_quarter):
    s = series_half_quarter
    assert all(o < 0 for o in s.orders)
    assert all(abs(b) < abs(a) for a, b in zip(s.orders, s.orders[1:]))
    assert np.allclose(np.cumsum(s.orders), s.partial_sums)
    assert s.space_dimension == 3
    assert np.allclose(np.add(s.dirichlet, s.neumann), s.orders)
    assert s.converged


def test_series_first_order_matches_closed_form(series_half_quarter):
    ref = energy_first_reflection_tilted(1.0, PI / 2, PI / 4).value
    assert series_half_quarter.orders[0] == pytest.approx(ref, rel=1e-8)


def test_series_scale_invariance(series_half_quarter):
    s2 = energy_reflection_series(TwoHalfPlaneConfig(2.0, 0.0, PI / 2, PI / 4), 1)
    assert 4 * s2.orders[0] == pytest.approx(series_half_quarter.orders[0], rel=1e-8)


def test_tilted_closed_form_examples():
    assert energy_first_reflection_tilted(1, PI / 2, PI / 2).value == pytest.approx(-1 / (6 * PI ** 3), rel=1e-14)
    assert energy_first_reflection_tilted(1, PI / 2, PI / 4).value == pytest.approx(-0.0041945, abs=1e-7)
    assert energy_first_reflection_tilted(1, PI / 2, PI / 4).value == pytest.approx(
        -(8 / 3 + 4 * math.sqrt(2)) / (64 * PI ** 3), rel=1e-14)
    for th, tb in [(1.0, 0.6), (2.0, 1.2)]:
        assert energy_first_reflection_tilted(2, th, tb).value == pytest.approx(
            energy_first_reflection_tilted(1, th, tb).value / 4, rel=1e-14)


def test_tilted_removable_singularity_is_continuous():
    th = 1.1
    at = energy_first_reflection_tilted(1, th, th).value
    limit = -(8 / 3 + 8 / math.sin(th) ** 2 - 8 * th / math.tan(th) / math.sin(th) ** 2) / (64 * PI ** 3)
    assert at == pytest.approx(limit, rel=1e-14)
    for delta in (2e-4, 5e-5, 1e-6):
        assert energy_first_reflection_tilted(1, th + delta, th).value == pytest.approx(at, rel=5 * delta)


def test_tilted_domain():
    with pytest.raises(GeometryError):
        energy_first_reflection_tilted(1, 0.0, 1.0)
    with pytest.raises(GeometryError):
        energy_first_reflection_tilted(1, 1.0, PI)


def test_overlap_closed_form_examples():
    assert energy_first_reflection_overlap(0, 1).value == pytest.approx(-1 / (6 * PI ** 3), rel=1e-14)
    assert energy_first_reflection_overlap(1, 1).value == pytest.approx(-0.0142022, abs=1e-7)
    assert energy_first_reflection_overlap(-1, 1).value == pytest.approx(-0.0015371, abs=1e-7)
    assert energy_first_reflection_overlap(1, 1).value == pytest.approx(
        -(0.5 + 3 + 9 * PI / 4) / (24 * PI ** 3), rel=1e-14)


def test_overlap_matches_complex_logarithm():
    for r in (-3.0, -0.2, 0.4, 2.5):
        z = 1 / (1 + r * r) + 3 * (1 - 1j * r * np.log((1j - r) / math.sqrt(1 + r * r)))
        assert energy_first_reflection_overlap(r, 1).value == pytest.approx(
            -z.real / (24 * PI ** 3), rel=1e-13)
        assert abs(z.imag) < 1e-14


def test_two_reflection_examples():
    assert energy_two_reflection_edge(1, 0).value == pytest.approx(-0.0066685, abs=1e-7)
    assert energy_two_reflection_edge(1, PI / 4).value == pytest.approx(-0.0094112, abs=1e-7)
    assert two_reflection_c(PI / 2) == pytest.approx(17 / (256 * PI ** 2), rel=1e-14)
    th = PI / 2 - 1e-6
    assert math.cos(th) * abs(energy_two_reflection_edge(1, th).value) == pytest.approx(
        17 / (256 * PI ** 2), rel=1e-5)
    with pytest.raises(GeometryError):
        energy_two_reflection_edge(1, PI / 2)


def test_two_reflection_small_angle_branch_is_continuous():
    below = two_reflection_edge_terms(1, 0.999e-3)[1]
    above = two_reflection_edge_terms(1, 1.001e-3)[1]
    assert below == pytest.approx(above, rel=1e-9)


def test_two_reflection_c_is_the_zeta_truncation_at_parallel():
    assert two_reflection_c(PI / 2) == pytest.approx((1 + 1 / 16) / (16 * PI ** 2), rel=1e-14)
