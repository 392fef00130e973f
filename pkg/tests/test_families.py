import numpy as np
import pytest

from conelab import families as F
from conelab.cone import parallel_residual
from conelab.errors import BumpTooLarge, DegenerateSlice
from conelab.geometry import coordinate_sectional_curvatures
from conelab.obata import obata_residual


@pytest.fixture(scope="module")
def fixtures():
    return F.family_fixtures()


def test_fixture_cases_cover_all(fixtures):
    cases = {inst.case_tag for inst in fixtures.values()}
    assert cases == {"nilpotent", "complex", "projector"}
    branches = {inst.branch for inst in fixtures.values() if inst.case_tag == "projector"}
    assert branches == set(F.PROJECTOR_BRANCHES)
    assert len(fixtures) >= 6


def test_slice_zero_is_base_metric(fixtures):
    # nilpotent and complex families start at s = 0 with g_0 = h
    for name in ("nil_flat", "nil_null", "complex_split"):
        inst = fixtures[name]
        x = np.array([0.0, 0.3, -0.2])
        g = inst.g.values(x)
        assert np.allclose(g[1:, 1:], inst.base.N_metric.values(x[1:]))
        assert np.allclose(g[0, 1:], 0.0)


def test_family_alpha_solves_obata(fixtures):
    for inst in fixtures.values():
        pts = inst.g.chart.sample(20)
        assert obata_residual(inst.g, inst.alpha, pts).sup_residual < 1e-9, inst.name


def test_negative_controls(fixtures):
    inst = fixtures["nil_null"]
    pts = inst.g.chart.sample(20)
    sol = inst.cone_solution()
    from conelab.cone import tensor_from_alpha

    for a in F.negative_control_alphas(inst).values():
        assert obata_residual(inst.g, a, pts).sup_residual > 1e-2
        T = tensor_from_alpha(sol.cone, a)
        assert parallel_residual(sol.cone, T, sol.cone.sample(20)) > 1e-2


def test_alternative_alpha_formulas_fail(fixtures):
    for name in ("nil_flat", "trig_torus", "hyp_neg_torus"):
        inst = fixtures[name]
        pts = inst.g.chart.sample(20)
        for label, a in F.printed_alpha_candidates(inst).items():
            assert obata_residual(inst.g, a, pts).sup_residual > 1e-2, (name, label)


def test_slice_formulas(fixtures):
    for inst in fixtures.values():
        pts = inst.g.chart.sample(12)
        assert F.slice_formula_residual(inst, pts) < 1e-10, inst.name
        assert F.slice_parallel_residual(inst, pts) < 1e-10, inst.name


def test_evolution_equations(fixtures):
    for name in ("nil_null", "complex_split", "hyp_pos_torus"):
        inst = fixtures[name]
        ev = F.evolution_residual(inst, F.evolution_sample(inst, 6))
        assert ev.worst < 1e-5, name


def test_bad_base_tensor_rejected():
    # S = identity on the flat plane is not nilpotent
    with pytest.raises(DegenerateSlice):
        F.flat_base(np.eye(2), np.eye(2), "nilpotent", (-1.0, 1.0))


def test_trig_interval_guard():
    # the trig slice metric loses rank in the S-directions at s = pi/2
    base = F.base_fixtures()["flat_torus"]
    inst = F.build_projector(base, "trig")
    assert abs(np.linalg.det(inst.g.values([1.3, 0.1, 0.1]))) > 1e-3
    bad = F.BaseData(base.N_metric, base.S, (0.1, 2.0), "projector", "wide")
    with pytest.raises(ValueError):
        F.build_projector(bad, "trig")


def test_pseudosphere_curvature_and_gradient():
    for pq in [(2, 0), (2, 1), (1, 2), (3, 1)]:
        ps = F.build_pseudosphere(*pq)
        pts = ps.metric.chart.sample(20)
        for x in pts[:5]:
            ks = coordinate_sectional_curvatures(ps.metric, x)
            assert all(abs(k - 1) < 1e-10 for k in ks.values())
        assert F.pseudosphere_gradient_residual(ps, pts) < 1e-10
        assert ps.metric.signature == (pq[0], pq[1])


def test_pseudosphere_on_quadric():
    ps = F.build_pseudosphere(2, 1)
    Q = F.ambient_form(2, 1)
    for x in ps.metric.chart.sample(10):
        X = np.array([float(v.value) for v in ps.embedding(F.J.seed(x, 1))])
        assert X @ Q @ X == pytest.approx(1.0, abs=1e-13)


def test_perturbed_pseudosphere():
    bump = F.Bump(center=(0.0, 0.0), radius=0.5, amplitude=0.1)
    ps = F.build_perturbed_pseudosphere(2, 1, bump)
    pts = ps.metric.chart.sample(30)
    assert obata_residual(ps.metric, ps.alpha, pts).sup_residual < 1e-9
    inside = [x for x in ps.metric.chart.sample(200) if bump.inside(x[1:])]
    dev = max(abs(k - 1) for x in inside for k in coordinate_sectional_curvatures(ps.metric, x).values())
    assert dev > 1e-3
    outside = [x for x in pts if np.linalg.norm(x[1:]) > 0.6][:5]
    for x in outside:
        assert all(abs(k - 1) < 1e-10 for k in coordinate_sectional_curvatures(ps.metric, x).values())


def test_bump_too_large():
    with pytest.raises(BumpTooLarge):
        F.build_perturbed_pseudosphere(2, 1, F.Bump(center=(0.0, 0.0), radius=0.5, amplitude=-50.0))


def test_warped_product_charts_agree_on_obata():
    from conelab.suites import unit_line

    for chart in ("polar", "hyperboloid"):
        w = F.build_warped_hyperbolic(2, unit_line(), chart)
        pts = w.g.chart.sample(20)
        assert obata_residual(w.g, w.alpha, pts).sup_residual < 1e-9
        assert w.g.signature == (1, 2)
