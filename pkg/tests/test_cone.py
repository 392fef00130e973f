import numpy as np
import pytest

from conelab import cone as C
from conelab import jets as J
from conelab.families import build_nilpotent, base_fixtures, round_sphere_base
from conelab.geometry import Chart, ScalarField, classify_endomorphism, constant_metric, signature_of


def _line(sign=1.0):
    return constant_metric(Chart(1, ((-2.0, 2.0),)), [[sign]], name="line")


def test_cone_over_circle_arc_is_flat_polar_plane():
    cone = C.build_cone(_line())
    x = np.array([1.3, 0.4])
    assert np.allclose(cone.cone_metric.values(x), np.diag([1.0, 1.3**2]))
    assert C.max_riemann(cone.cone_metric, cone.sample(10)) < 1e-13


def test_cone_over_timelike_line_signature():
    cone = C.build_cone(_line(-1.0))
    assert cone.cone_metric.signature == (1, 1)
    for x in cone.sample(10):
        assert signature_of(cone.cone_metric.values(x)) == (1, 1)


def test_constant_alpha_gives_multiple_of_cone_metric():
    base = round_sphere_base().N_metric
    cone = C.build_cone(base)
    alpha = ScalarField.from_formula(base.chart, lambda c: 0.7 + 0.0 * c[0], name="const")
    T = C.tensor_from_alpha(cone, alpha)
    for x in cone.sample(10):
        assert np.allclose(T.values(x), 0.7 * cone.cone_metric.values(x), atol=1e-14)
    assert C.parallel_residual(cone, T, cone.sample(10)) < 1e-13


@pytest.fixture(scope="module")
def sphere_solution():
    # x1 = cos theta restricted to S^2: alpha = cos^2 theta is a projector-type solution
    base = round_sphere_base().N_metric
    alpha = ScalarField.from_formula(base.chart, lambda c: J.cos(c[0]) ** 2, name="cos2")
    return C.cone_solution(base, alpha, "projector")


def test_sphere_solution_identities(sphere_solution):
    sol = sphere_solution
    pts = sol.cone.sample(20)
    assert C.parallel_residual(sol.cone, sol.T, pts) < 1e-12
    assert C.hessian_identity_check(sol.cone, sol.alpha, sol.T, pts) < 1e-12
    assert C.gradient_relation_check(sol.cone, sol.alpha, sol.T, pts, "projector").worst < 1e-12
    assert C.xx_table_check(sol.cone, sol.T, "projector", pts) < 1e-12
    assert C.curvature_relation_residual(sol.cone, pts) < 1e-12
    assert C.max_riemann(sol.cone.cone_metric, pts) < 1e-12
    assert all(sol.classify(x).kind == "projector" for x in pts)


def test_sphere_negative_control(sphere_solution):
    sol = sphere_solution
    bad = ScalarField.from_formula(sol.cone.base.chart, lambda c: c[0] ** 3, name="s3")
    T = C.tensor_from_alpha(sol.cone, bad)
    assert C.parallel_residual(sol.cone, T, sol.cone.sample(20)) > 1e-2


def test_nilpotent_kernel_directions():
    inst = build_nilpotent(base_fixtures()["null_plane"])
    sol = inst.cone_solution()
    pts = sol.cone.sample(20)
    residual, count = C.kernel_constancy_check(sol.cone, inst.alpha, sol.T, pts)
    assert count > 0
    assert residual < 1e-10


def test_pregeodesic_factor_table():
    assert C.pregeodesic_factor("projector", 0.25) == pytest.approx(0.5)
    assert C.pregeodesic_factor("nilpotent", 0.25) == pytest.approx(-0.5)
    assert C.pregeodesic_factor("complex", 0.25) == pytest.approx(-0.5)
    assert C.xx_norm_expected("projector", 0.5) == pytest.approx(0.25)
    assert C.xx_norm_expected("complex", 0.0) == pytest.approx(-1.0)


def test_classification_of_shifted_tensor():
    # T + 2 g-hat is still classified as a projector after normalization
    base = round_sphere_base().N_metric
    alpha = ScalarField.from_formula(base.chart, lambda c: J.cos(c[0]) ** 2 + 2.0, name="shifted")
    sol = C.cone_solution(base, alpha, "projector")
    x = sol.cone.sample(1)[0]
    assert classify_endomorphism(sol.cone.cone_metric, sol.T, x).kind == "projector"
