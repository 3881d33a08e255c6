import math

import numpy as np
import pytest

from casimir_edges import observables as obs
from casimir_edges.geometry import GeometryError, TwoHalfPlaneConfig
from casimir_edges.observables import (C_PARALLEL, CurveRow, CurveTable, asymptote_fit,
                                       babinet_residual, c_of_theta, edge_coefficient,
                                       edge_consistency_report, lateral_force, overlap_curve,
                                       overlap_energy, pfa_energy, tilt_curve)
from casimir_edges.wedge import two_reflection_edge_terms

PI = math.pi


def test_pfa_energy():
    assert pfa_energy(2.0, 1.0).value == pytest.approx(-2 * PI ** 2 / 720, rel=1e-15)
    assert pfa_energy(2.0, 2.0).value == pytest.approx(pfa_energy(1.0, 1.0).value / 4, rel=1e-15)
    with pytest.raises(GeometryError):
        pfa_energy(-1.0, 1.0)
    with pytest.raises(GeometryError):
        pfa_energy(1.0, 0.0)


def test_overlap_energy_dispatch():
    assert overlap_energy(0.0, 1.0, "closed-form").value == pytest.approx(-1 / (6 * PI ** 3), rel=1e-14)
    first = overlap_energy(1.0, 1.0, "reflection:1")
    assert first.method == "reflection:1"
    assert first.value == pytest.approx(-0.0142022, abs=1e-7)
    assert overlap_energy(3.0, 1.0, "pfa").method == "pfa"
    for bad in ("magic", "reflection:x", "reflection:0"):
        with pytest.raises(ValueError):
            overlap_energy(1.0, 1.0, bad)


def test_pfa_underestimates_the_first_reflection_edge_term():
    # the edge correction is positive, so PFA lies below the first reflection at large overlap
    r = 20.0
    assert pfa_energy(r, 1.0).value < overlap_energy(r, 1.0, "reflection:1").value


def test_overlap_curve_keeps_order_and_failures():
    table = overlap_curve(1.0, [-1.0, 0.5, 2.0], "pfa")
    assert table.abscissae.tolist() == [-1.0, 0.5, 2.0]
    assert [r.failed for r in table.rows] == [True, False, False]
    assert "PFA" in table.failures[0].message
    assert math.isnan(table.rows[0].energy)
    with pytest.raises(GeometryError):
        overlap_curve(0.0, [1.0])


def test_overlap_curve_parallel_rows_match_serial(monkeypatch):
    xs = np.linspace(-2, 6, 9)
    monkeypatch.setenv("CASIMIR_THREADS", "1")
    serial = overlap_curve(1.0, xs, "reflection:1")
    monkeypatch.setenv("CASIMIR_THREADS", "4")
    parallel = overlap_curve(1.0, xs, "reflection:1")
    assert serial == parallel


def test_curve_table_validation():
    with pytest.raises(ValueError):
        CurveTable((CurveRow(1.0, -1, 0, "m", True), CurveRow(1.0, -1, 0, "m", True)))
    with pytest.raises(ValueError):
        CurveTable((CurveRow(1.0, -1, -1e-3, "m", True),))


def test_asymptote_fit_recovers_a_line():
    rows = tuple(CurveRow(x, -0.01 * x + 0.002, 0.0, "m", True) for x in np.linspace(0, 8, 17))
    fit = asymptote_fit(CurveTable(rows))
    assert fit.slope == pytest.approx(-0.01, rel=1e-12)
    assert fit.intercept == pytest.approx(0.002, rel=1e-10)
    assert fit.points == 7
    assert fit.residual_rms < 1e-15
    with pytest.raises(ValueError):
        asymptote_fit(CurveTable(rows), window=(6.0, 7.0))


def test_first_reflection_asymptote_has_no_offset():
    # the bracket is 3 pi r + O(1/r^2): no intercept at first reflection
    far = overlap_curve(1.0, np.linspace(300, 600, 7), "reflection:1")
    fit = asymptote_fit(far, window=(300, 600))
    assert fit.slope == pytest.approx(-1 / (8 * PI ** 2), rel=1e-5)
    assert abs(fit.intercept) < 1e-6


def test_lateral_force_sign_and_oracles():
    far = lateral_force(TwoHalfPlaneConfig(1.0, 50.0)).value
    assert far == pytest.approx(1 / (8 * PI ** 2), rel=1e-5)
    for r in (-3.0, 0.0, 0.5, 4.0):
        cfg = TwoHalfPlaneConfig(1.0, r)
        fd = lateral_force(cfg, differentiation="finite-difference")
        assert fd.value == pytest.approx(lateral_force(cfg).value, rel=1e-6)
    assert lateral_force(TwoHalfPlaneConfig(2.0, 1.0)).value == pytest.approx(
        lateral_force(TwoHalfPlaneConfig(1.0, 0.5)).value / 8, rel=1e-14)
    with pytest.raises(GeometryError):
        lateral_force(TwoHalfPlaneConfig(1.0, 0.0, 1.0, 1.0))


@pytest.mark.slow
def test_exact_lateral_force_close_to_first_reflection():
    cfg = TwoHalfPlaneConfig(1.0, 2.0)
    exact = lateral_force(cfg, "exact")
    assert exact.converged
    assert exact.value == pytest.approx(lateral_force(cfg).value, rel=0.1)


def test_babinet_forms():
    assert babinet_residual(1.0, [1.0, 10.0]) == pytest.approx([0.0, 0.0], abs=1e-15)
    diff = babinet_residual(1.0, [10.0, 20.0], form="difference")
    assert diff[0] / diff[1] == pytest.approx(8, rel=0.05)
    assert babinet_residual(1.0, [3.0]) == babinet_residual(1.0, [3.0])
    with pytest.raises(GeometryError):
        babinet_residual(1.0, [-1.0])
    with pytest.raises(ValueError):
        babinet_residual(1.0, [1.0], form="ratio")


def test_c_of_theta_closed_forms():
    assert c_of_theta(0.0).value == pytest.approx(0.0066685, abs=1e-7)
    assert c_of_theta(PI / 2).value == pytest.approx(17 / (256 * PI ** 2), rel=1e-14)
    assert c_of_theta(0.7, "reflection:1").value == pytest.approx(1 / (16 * PI ** 2), rel=1e-15)
    assert c_of_theta(PI / 2, "exact").value == pytest.approx(PI ** 2 / 1440, rel=1e-15)
    with pytest.raises(GeometryError):
        c_of_theta(2.0)
    with pytest.raises(ValueError):
        c_of_theta(0.3, "guess")


@pytest.mark.parametrize("theta", [0.0, 0.4, 1.3])
def test_series_bookkeeping_is_additive(theta):
    second = two_reflection_edge_terms(1.0, theta)[1]
    diff = c_of_theta(theta).value - c_of_theta(theta, "reflection:1").value
    assert diff == pytest.approx(-second * math.cos(theta), rel=1e-12)


def test_tilt_curve_energy_column_holds_c():
    table = tilt_curve([0.0, 0.5, 1.0])
    assert table.y_label == "c(theta)"
    assert table.energies.tolist() == [c_of_theta(t).value for t in (0.0, 0.5, 1.0)]


def test_edge_coefficient_and_report():
    est = edge_coefficient()
    # c rises toward pi/2 for two reflections, so the slope in theta is positive
    h = 1e-4
    slope = (c_of_theta(PI / 2).value - c_of_theta(PI / 2 - h).value) / h
    assert est.value == pytest.approx(slope, rel=1e-2)
    assert est.converged
    with pytest.raises(ValueError):
        edge_coefficient(h=0.5)
    rows = tuple(CurveRow(x, -0.01 * x + 0.002, 0.0, "m", True) for x in (3, 4, 5, 6))
    report = edge_consistency_report(asymptote_fit(CurveTable(rows)), est)
    assert report["twice_c_edge"] == 2 * est.value
    assert report["ratio"] == pytest.approx(0.002 / (2 * est.value))


def test_parallel_constant():
    assert C_PARALLEL == pytest.approx(0.0137078, abs=1e-7)


def test_thread_count_from_environment(monkeypatch):
    monkeypatch.setenv("CASIMIR_THREADS", "3")
    assert obs._threads() == 3
    monkeypatch.setenv("CASIMIR_THREADS", "0")
    assert obs._threads() == 1
