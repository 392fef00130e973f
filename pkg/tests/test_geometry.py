import numpy as np
import pytest

from conelab import jets as J
from conelab.errors import ChartError, DegenerateMetric
from conelab.geometry import (
    Chart,
    ScalarField,
    christoffel,
    classify_matrix,
    constant_metric,
    coordinate_sectional_curvatures,
    covariant_hessian,
    covariant_third,
    metric_from_formula,
    pullback_metric,
    riemann,
    sectional_curvature,
    signature_of,
)


@pytest.fixture
def sphere():
    chart = Chart(2, ((0.3, np.pi - 0.3), (-3.0, 3.0)), chart_id="S2")
    return metric_from_formula(chart, lambda c: [[1.0, 0.0], [0.0, J.sin(c[0]) ** 2]], (2, 0), name="S2")


def test_sphere_christoffel(sphere):
    th = 0.9
    G = christoffel(sphere, [th, 0.2]).value
    assert G[0, 1, 1] == pytest.approx(-np.sin(th) * np.cos(th))
    assert G[1, 0, 1] == pytest.approx(np.cos(th) / np.sin(th))
    assert G[1, 1, 0] == pytest.approx(np.cos(th) / np.sin(th))


def test_sphere_curvature_one(sphere):
    for x in sphere.chart.sample(20):
        assert sectional_curvature(sphere, x, [1, 0], [0, 1]) == pytest.approx(1.0, abs=1e-12)


def test_riemann_sign_convention(sphere):
    # R(d0, d1) d1 = K (g11 d0 - g01 d1): R^0_{011} = sin^2 theta for K = 1
    th = 1.1
    R = riemann(sphere, [th, 0.0])
    assert R[0, 0, 1, 1] == pytest.approx(np.sin(th) ** 2)
    assert R[0, 1, 0, 1] == pytest.approx(-np.sin(th) ** 2)


def test_flat_polar_is_flat():
    chart = Chart(2, ((0.5, 2.0), (-3.0, 3.0)))
    g = metric_from_formula(chart, lambda c: [[1.0, 0.0], [0.0, c[0] * c[0]]], (2, 0))
    assert np.max(np.abs(riemann(g, [1.2, 0.4]))) < 1e-13


def test_hessian_of_cos_theta(sphere):
    # on the unit sphere Hess(cos theta) = -cos theta g
    a = ScalarField.from_formula(sphere.chart, lambda c: J.cos(c[0]), name="cos")
    for x in sphere.chart.sample(10):
        H = covariant_hessian(sphere, a, x).value
        assert np.allclose(H, -np.cos(x[0]) * sphere.values(x), atol=1e-13)
        # DDD cos = -d cos (x) g, one derivative of the identity above
        D3 = covariant_third(sphere, a, x)
        expected = np.einsum("i,jk->ijk", [np.sin(x[0]), 0.0], sphere.values(x))
        assert np.allclose(D3, expected, atol=1e-13)


def test_hessian_matches_fd(sphere):
    a = ScalarField.from_formula(sphere.chart, lambda c: J.sin(c[0]) * J.cos(c[1]), name="f")
    x = np.array([0.8, 0.5])
    fd = J.fd_derivatives(lambda y: np.sin(y[0]) * np.cos(y[1]), x, 2)
    G = christoffel(sphere, x).value
    expected = fd.hess - np.einsum("kij,k->ij", G, fd.grad)
    assert np.allclose(covariant_hessian(sphere, a, x).value, expected, atol=1e-8)


def test_lorentzian_minkowski_pullback():
    # hyperboloid -t^2 + x^2 + y^2 = -1 in graph chart has curvature -1
    chart = Chart(2, ((-1.0, 1.0), (-1.0, 1.0)))

    def emb(c):
        return [J.sqrt(1.0 + c[0] * c[0] + c[1] * c[1]), c[0], c[1]]

    g = pullback_metric(chart, emb, np.diag([-1.0, 1.0, 1.0]), (2, 0))
    ks = coordinate_sectional_curvatures(g, [0.2, -0.3])
    assert all(k == pytest.approx(-1.0, abs=1e-12) for k in ks.values())


def test_signature_and_degeneracy():
    assert signature_of(np.diag([1.0, -1.0, -1.0])) == (1, 2)
    chart = Chart(2, ((-1.0, 1.0), (-1.0, 1.0)))
    g = metric_from_formula(chart, lambda c: [[1.0, 0.0], [0.0, c[0]]], (2, 0))
    with pytest.raises(DegenerateMetric):
        g.check_point([0.0, 0.2])
    with pytest.raises(DegenerateMetric):
        g.check_point([-0.5, 0.2])  # wrong signature
    g.check_point([0.5, 0.2])


def test_chart_require_and_sample_deterministic():
    chart = Chart(2, ((0.0, 1.0), (0.0, 2.0)), excluded_sets=(("diag", lambda x: abs(x[0] - x[1]) < 0.05),))
    with pytest.raises(ChartError):
        chart.require([1.5, 0.5])
    a = chart.sample(30, seed=7)
    b = chart.sample(30, seed=7)
    assert all(np.array_equal(u, v) for u, v in zip(a, b))
    assert all(chart.contains(x) for x in a)
    assert not all(np.array_equal(u, v) for u, v in zip(a, chart.sample(30, seed=8)))


def test_constant_metric_zero_christoffel():
    g = constant_metric(Chart(3, ((-1, 1),) * 3), np.diag([1.0, -1.0, 1.0]))
    assert np.max(np.abs(christoffel(g, [0.1, 0.2, 0.3]).value)) == 0.0


@pytest.mark.parametrize(
    "E, kind",
    [
        (np.zeros((3, 3)), "nilpotent"),
        (np.array([[0.0, 1.0], [0.0, 0.0]]), "nilpotent"),
        (np.diag([1.0, 0.0, 0.0]), "projector"),
        (np.array([[0.0, -1.0], [1.0, 0.0]]), "complex"),
        # affine images: 2P + 3, N + 5 Id, 3J - 1
        (2 * np.diag([1.0, 0.0]) + 3 * np.eye(2), "projector"),
        (np.array([[5.0, 1.0], [0.0, 5.0]]), "nilpotent"),
        (3 * np.array([[0.0, -1.0], [1.0, 0.0]]) - np.eye(2), "complex"),
        (np.diag([1.0, 2.0, 3.0]), "other"),
    ],
)
def test_classify_matrix(E, kind):
    c = classify_matrix(E)
    assert c.kind == kind
    if kind != "other":
        N = c.normalized
        rel = {"nilpotent": N @ N, "projector": N @ N - N, "complex": N @ N + np.eye(len(N))}[kind]
        assert np.linalg.norm(rel) < 1e-10
