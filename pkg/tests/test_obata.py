import numpy as np
import pytest

from conelab import jets as J
from conelab.errors import LeftChart, NearSingularLevel
from conelab.families import build_pseudosphere, family_fixtures, round_sphere_base
from conelab.geometry import ScalarField
from conelab.obata import (
    PROFILE_ROWS,
    obata_residual,
    obata_tensor,
    profile_check,
    profile_row,
    profile_value,
)


@pytest.fixture(scope="module")
def sphere():
    return round_sphere_base().N_metric


def _field(g, fn, name):
    return ScalarField.from_formula(g.chart, fn, name=name)


def test_height_squared_on_sphere(sphere):
    alpha = _field(sphere, lambda c: J.cos(c[0]) ** 2, "x1^2")
    assert obata_residual(sphere, alpha, sphere.chart.sample(50)).sup_residual < 1e-12


def test_height_on_sphere_not_a_solution(sphere):
    # x1 itself solves DD f = -f g, not the third-order equation
    alpha = _field(sphere, lambda c: J.cos(c[0]), "x1")
    assert obata_residual(sphere, alpha, sphere.chart.sample(20)).sup_residual > 1e-2


def test_constant_shift_invariance(sphere):
    a = _field(sphere, lambda c: J.sin(c[0]) * J.cos(c[1]), "f")
    b = _field(sphere, lambda c: J.sin(c[0]) * J.cos(c[1]) + 4.0, "f+4")
    for x in sphere.chart.sample(10):
        assert np.max(np.abs(obata_tensor(sphere, a, x) - obata_tensor(sphere, b, x))) < 1e-12


def test_linearity(sphere):
    a = _field(sphere, lambda c: J.sin(c[0]) * J.cos(c[1]), "f")
    b = _field(sphere, lambda c: c[0] ** 3, "h")
    ab = _field(sphere, lambda c: 2.0 * J.sin(c[0]) * J.cos(c[1]) - 3.0 * c[0] ** 3, "2f-3h")
    for x in sphere.chart.sample(10):
        lhs = obata_tensor(sphere, ab, x)
        rhs = 2 * obata_tensor(sphere, a, x) - 3 * obata_tensor(sphere, b, x)
        assert np.max(np.abs(lhs - rhs)) < 1e-10


@pytest.mark.parametrize("pq", [(2, 0), (2, 1), (1, 2)])
def test_pseudosphere_x1_squared(pq):
    ps = build_pseudosphere(*pq)
    assert obata_residual(ps.metric, ps.alpha, ps.metric.chart.sample(50)).sup_residual < 1e-9


def test_profile_rows():
    assert profile_row("projector", 0.5) == "cos2"
    assert profile_row("projector", 2.0) == "cosh2"
    assert profile_row("projector", -1.0) == "minus_sinh2"
    assert profile_row("nilpotent", 1.0) == "exp"
    assert profile_row("nilpotent", -1.0) == "minus_exp"
    assert profile_row("complex", 0.0) == "sinh"
    with pytest.raises(NearSingularLevel):
        profile_row("projector", 1.0)
    assert profile_value("cos2", 0.0) == 1.0
    assert set(PROFILE_ROWS) == {"cos2", "cosh2", "minus_sinh2", "exp", "minus_exp", "sinh"}


def test_profile_on_trig_family():
    inst = family_fixtures()["trig_torus"]
    res = profile_check(inst.g, inst.alpha, "projector", [0.5, 0.1, 0.2], 0.5)
    assert res.row == "cos2"
    assert res.deviation < 1e-10
    assert res.geodesic_residual < 1e-10
    series = res.series()
    assert series.shape == (501, 3)
    assert np.allclose(series[:, 1], series[:, 2], atol=1e-10)


def test_profile_leaves_chart():
    inst = family_fixtures()["trig_torus"]
    with pytest.raises(LeftChart):
        profile_check(inst.g, inst.alpha, "projector", [0.5, 0.1, 0.2], 5.0)


def test_unit_field_undefined_at_critical_point(sphere):
    alpha = _field(sphere, lambda c: J.cos(c[0]) ** 2, "x1^2")
    with pytest.raises(NearSingularLevel):
        profile_check(sphere, alpha, "projector", [np.pi / 2, 0.0], 0.1)
