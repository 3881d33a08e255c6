import math

import numpy as np
import pytest
from scipy.integrate import dblquad

from casimir_edges.geometry import GeometryError, HalfPlaneVsPlaneConfig
from casimir_edges.thermal import (ThermalConfig, _polarized_integral, em_free_energy_closed,
                                   low_temperature_fit, matsubara_free_energy,
                                   scalar_free_energy_elliptic, scalar_zero_temperature)
from casimir_edges.wedge import two_reflection_edge_terms

PI = math.pi
PERP = HalfPlaneVsPlaneConfig(1.0, 0.0)


@pytest.mark.parametrize("kappa", [0.0, 0.7, 3.0])
def test_polarized_integral_against_cartesian_quadrature(kappa):
    def f(kz, kx):
        k = math.sqrt(kappa ** 2 + kx ** 2 + kz ** 2)
        return 4 * math.exp(-2 * k) * math.sqrt(kappa ** 2 + kz ** 2) / k ** 2
    ref = dblquad(f, 0, 40, 0, 40, epsabs=1e-13, epsrel=1e-11)[0]
    assert _polarized_integral(kappa) == pytest.approx(ref, rel=1e-9)


def test_zero_temperature_limit_is_first_reflection():
    first = two_reflection_edge_terms(1.0, 0.5)[0]
    cfg = HalfPlaneVsPlaneConfig(1.0, 0.5)
    assert em_free_energy_closed(cfg, ThermalConfig(1e-6)) == pytest.approx(first, rel=1e-11)
    d_n = sum(matsubara_free_energy(cfg, ThermalConfig(0.01), p).value for p in "DN")
    assert d_n == pytest.approx(first * (1 + 1e-4 / 3), rel=1e-8)


def test_closed_form_examples():
    # x coth x -> x at high temperature: classical, linear in T
    assert em_free_energy_closed(PERP, ThermalConfig(30.0)) == pytest.approx(-30 / (16 * PI ** 2), rel=1e-14)
    assert em_free_energy_closed(HalfPlaneVsPlaneConfig(2.0, 0.0), ThermalConfig(1.0)) == pytest.approx(
        em_free_energy_closed(PERP, ThermalConfig(1.0)) / 4, rel=1e-14)
    tilted = HalfPlaneVsPlaneConfig(1.0, PI / 3)
    assert em_free_energy_closed(tilted, ThermalConfig(1.0)) == pytest.approx(
        2 * em_free_energy_closed(PERP, ThermalConfig(1.0)), rel=1e-14)


def test_polarizations_differ_only_by_the_odd_part():
    d = matsubara_free_energy(PERP, ThermalConfig(0.5), "D")
    n = matsubara_free_energy(PERP, ThermalConfig(0.5), "N")
    assert d.parts["secant"] == pytest.approx(n.parts["secant"], rel=1e-15)
    assert d.parts["polarized"] == pytest.approx(-n.parts["polarized"], rel=1e-15)
    assert d.converged and n.converged
    assert d.value < n.value < 0


@pytest.mark.parametrize("x", [0.05, 0.5, 3.0])
@pytest.mark.parametrize("pol", ["D", "N"])
def test_elliptic_form_matches_matsubara_odd_part(x, pol):
    direct = matsubara_free_energy(PERP, ThermalConfig(x), pol).parts["polarized"]
    assert scalar_free_energy_elliptic(1.0, ThermalConfig(x), pol) == pytest.approx(direct, rel=1e-9)


def test_scalar_zero_temperature():
    assert scalar_zero_temperature("D") == pytest.approx(-1 / (128 * PI), rel=1e-15)
    assert scalar_zero_temperature("N") == -scalar_zero_temperature("D")
    near = scalar_free_energy_elliptic(1.0, ThermalConfig(1e-3), "D")
    assert near == pytest.approx(scalar_zero_temperature("D"), rel=1e-5)


def test_matsubara_cutoff_is_flagged():
    res = matsubara_free_energy(PERP, ThermalConfig(1e-3, n_max=5), "D")
    assert not res.converged
    assert res.terms == 6


def test_low_temperature_report():
    rep = low_temperature_fit(1.0, np.geomspace(0.02, 0.2, 8), "N")
    assert rep.em_coefficients[1] == pytest.approx(1 / 3, rel=1e-3)
    assert rep.scalar_r2 > 0.99
    with pytest.raises(ValueError):
        low_temperature_fit(1.0, [0.1, 0.2])
    with pytest.raises(ValueError):
        low_temperature_fit(1.0, [0.1, 0.2, 0.3, 0.4, 0.5])


def test_domain_errors():
    with pytest.raises(GeometryError):
        ThermalConfig(-1.0)
    with pytest.raises(GeometryError):
        em_free_energy_closed(PERP, ThermalConfig(0.0))
    with pytest.raises(GeometryError):
        em_free_energy_closed(HalfPlaneVsPlaneConfig(1.0, PI / 2), ThermalConfig(1.0))
    with pytest.raises(ValueError):
        ThermalConfig(1.0, n_max=0)
