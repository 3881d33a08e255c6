import math

import pytest

from casimir_edges.geometry import (EnergyResult, GeometryError, HalfPlaneVsPlaneConfig,
                                    Polarization, SpectralPoint, TruncationSpec,
                                    TwoHalfPlaneConfig)
from casimir_edges.series import ReflectionSeries


def test_polarization_parse_and_sign():
    assert Polarization.parse("d") is Polarization.DIRICHLET
    assert Polarization.parse("NEUMANN") is Polarization.NEUMANN
    assert Polarization.DIRICHLET.sign == -1 and Polarization.NEUMANN.sign == 1
    with pytest.raises(ValueError):
        Polarization.parse("TE")


@pytest.mark.parametrize("make", [lambda: TwoHalfPlaneConfig(0.0), lambda: TwoHalfPlaneConfig(-1.0),
                                  lambda: TwoHalfPlaneConfig(1.0, math.nan),
                                  lambda: HalfPlaneVsPlaneConfig(1.0, 2.0),
                                  lambda: HalfPlaneVsPlaneConfig(0.0, 0.1),
                                  lambda: SpectralPoint(-1.0)])
def test_invariants(make):
    with pytest.raises(GeometryError) as info:
        make()
    assert info.value.invariant


def test_config_helpers():
    cfg = TwoHalfPlaneConfig(2.0, 3.0)
    assert cfg.ratio == 1.5
    assert cfg.scaled(0.5) == TwoHalfPlaneConfig(1.0, 1.5)
    rot = TwoHalfPlaneConfig(1.0, 0.0).rotated(-0.2)
    assert math.hypot(rot.d_x, rot.d_y) == pytest.approx(1.0, rel=1e-15)
    assert rot.theta == pytest.approx(math.pi / 2 - 0.2)
    assert HalfPlaneVsPlaneConfig(1.0, 0.3).scaled(2.0).d == 2.0


@pytest.mark.parametrize("kwargs", [dict(nu_max=1), dict(convergence_tol=0), dict(lambda_nodes=2),
                                    dict(max_doublings=-1)])
def test_truncation_invariants(kwargs):
    with pytest.raises(ValueError):
        TruncationSpec(**kwargs)


def test_energy_result_dict():
    res = EnergyResult(-1.0, 1e-6, "exact-parabolic", True, TruncationSpec())
    d = res.as_dict()
    assert d["truncation_used"]["nu_max"] == 24
    assert d["method"] == "exact-parabolic"


def test_reflection_series_bookkeeping():
    s = ReflectionSeries.from_polarized([-3.0, -0.2], [-1.0, -0.05])
    assert s.orders == (-4.0, -0.25)
    assert s.partial_sums == (-4.0, -4.25)
    assert s.order(2) == -0.25
    assert s.ratios().tolist() == [1.0, 0.0625]
    assert s.space_dimension == 3
