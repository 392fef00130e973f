"""The cone dr^2 + r^2 g over a base metric, the tensor T built from alpha, and its identities.

Cone coordinates are (r, x_1, ..., x_d) with r at index 0.  A solution alpha of
the Obata equation gives the parallel tensor

    T(dr, dr) = alpha,  T(dr, d_i) = (r/2) d_i alpha,
    T(d_i, d_j) = (r^2/2) (2 g_ij alpha + DD alpha_ij),

which is half the cone Hessian of A = r^2 alpha.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import jets as J
from .errors import DegenerateMetric
from .geometry import (
    Chart,
    MetricField,
    ScalarField,
    SymTensorField,
    as_coords,
    block_jet,
    christoffel_jet,
    classify_matrix,
    covariant_derivative_jet,
    covariant_hessian_jet,
    gradient_jet,
    riemann_jet,
)
from .jets import Jet

R_RANGE = (1e-3, 1e3)
R_SAMPLE = (0.5, 2.0)
CASES = ("nilpotent", "complex", "projector")


def _lift_chart(base: Chart) -> Chart:
    excluded = tuple((desc, (lambda x, pred=pred: pred(x[1:]))) for desc, pred in base.excluded_sets)
    sample = (R_SAMPLE,) + tuple(base.sample_box or base.box)
    return Chart(base.dim + 1, (R_RANGE,) + tuple(base.box), excluded, sample, chart_id=f"cone({base.chart_id})")


def _on_cone(jet: Jet, d: int) -> Jet:
    """Re-express a base jet as a jet in the cone variables (r first)."""
    return J.embed(jet, d + 1, range(1, d + 1))


def _r_jet(x: np.ndarray, order: int) -> Jet:
    return J.seed_coordinate(0, x, x.size, order)


class ConeSpace:
    """Cone over ``base``: metric dr^2 + r^2 g on (1e-3, 1e3) x base chart."""

    r_index = 0

    def __init__(self, base: MetricField):
        self.base = base
        self.dim = base.dim + 1
        chart = _lift_chart(base.chart)
        d = base.dim

        def evaluator(x, order):
            g = _on_cone(base.at(x[1:], order), d)
            r = _r_jet(x, order)
            return block_jet(J.constant(1.0, d + 1, order), None, g * (r * r))

        sig = base.signature
        self.cone_metric = MetricField(
            chart, evaluator, (sig[0] + 1, sig[1]), name=f"cone({base.name})", order_loss=base.order_loss
        )

    @property
    def chart(self) -> Chart:
        return self.cone_metric.chart

    def sample(self, n: int = 50, seed: int = 42) -> list[np.ndarray]:
        return self.chart.sample(n, seed)

    def lift(self, alpha: ScalarField) -> ScalarField:
        """The function alpha o pi on the cone."""
        d = self.base.dim
        return ScalarField(
            self.chart, lambda x, order: _on_cone(alpha.at(x[1:], order), d), name=alpha.name, order_loss=alpha.order_loss
        )

    def A(self, alpha: ScalarField) -> ScalarField:
        """A(r, m) = r^2 alpha(m)."""
        d = self.base.dim

        def evaluator(x, order):
            r = _r_jet(x, order)
            return _on_cone(alpha.at(x[1:], order), d) * (r * r)

        return ScalarField(self.chart, evaluator, name=f"A[{alpha.name}]", order_loss=alpha.order_loss)


def build_cone(g: MetricField) -> ConeSpace:
    return ConeSpace(g)


def tensor_from_alpha(cone: ConeSpace, alpha: ScalarField) -> SymTensorField:
    """The symmetric 2-tensor on the cone assembled from alpha, D alpha and DD alpha."""
    g = cone.base
    d = g.dim

    def evaluator(x, order):
        xb = x[1:]
        a = alpha.at(xb, order + 2)
        gj = g.at(xb, order + 1)
        dda = covariant_hessian_jet(gj, a)
        r = _r_jet(x, order)
        a_c = _on_cone(a.truncate(order), d)
        da_c = _on_cone(a.d().truncate(order), d)
        inner = _on_cone(gj.truncate(order) * a.truncate(order) * 2.0 + dda, d) * (r * r * 0.5)
        return block_jet(a_c, da_c * (r * 0.5), inner)

    loss = max(alpha.order_loss + 2, g.order_loss + 1)
    return SymTensorField(cone.chart, evaluator, name=f"T[{alpha.name}]", order_loss=loss)


def cone_tensor_from_matrix(cone: ConeSpace, matrix) -> SymTensorField:
    """Constant-coefficient tensor on the cone chart (used for T = g-hat style controls)."""
    m = np.asarray(matrix, dtype=float)
    return SymTensorField(cone.chart, lambda x, order: J.constant(m, x.size, order), name="const")


# -- vector fields ---------------------------------------------------------------


def Y_field(cone: ConeSpace, T: SymTensorField, p) -> np.ndarray:
    """Y = T~(d_r), by a linear solve against the cone metric."""
    G = cone.cone_metric.values(p)
    return np.linalg.solve(G, T.values(p)[:, 0])


def X_field(cone: ConeSpace, T: SymTensorField, p) -> np.ndarray:
    """X = Y - alpha d_r, where alpha = T(d_r, d_r)."""
    Y = Y_field(cone, T, p)
    X = Y.copy()
    X[0] -= T.values(p)[0, 0]
    return X


def _covariant_self_derivative(gj: Jet, V: Jet) -> np.ndarray:
    """D_V V for a vector-field jet V of order >= 1."""
    G = christoffel_jet(gj.truncate(1)).value
    v = V.value
    dV = V.grad  # dV[k, i] = d_i V^k
    return dV @ v + np.einsum("kij,i,j->k", G, v, v)


@dataclass
class ConeSolution:
    cone: ConeSpace
    alpha: ScalarField
    A: ScalarField
    T: SymTensorField
    case_tag: str

    def Y(self, p) -> np.ndarray:
        return Y_field(self.cone, self.T, p)

    def X(self, p) -> np.ndarray:
        return X_field(self.cone, self.T, p)

    def classify(self, p, tol: float = 1e-8):
        return classify_matrix(np.linalg.solve(self.cone.cone_metric.values(p), self.T.values(p)), tol)


def cone_solution(g: MetricField, alpha: ScalarField, case_tag: str) -> ConeSolution:
    if case_tag not in CASES:
        raise ValueError(f"case_tag must be one of {CASES}")
    cone = build_cone(g)
    return ConeSolution(cone, alpha, cone.A(alpha), tensor_from_alpha(cone, alpha), case_tag)


# -- residual checks ---------------------------------------------------------------


def parallel_residual(cone: ConeSpace, T: SymTensorField, points) -> float:
    """max over points and indices of |D-hat_i T_jk|."""
    worst = 0.0
    for p in points:
        x = as_coords(p)
        DT = covariant_derivative_jet(cone.cone_metric.at(x, 1), T.at(x, 1))
        worst = max(worst, float(np.max(np.abs(DT.value))))
    return worst


def cone_hessian(cone: ConeSpace, f: ScalarField, p) -> np.ndarray:
    x = as_coords(p)
    return covariant_hessian_jet(cone.cone_metric.at(x, 1), f.at(x, 2)).value


def hessian_identity_check(cone: ConeSpace, alpha: ScalarField, T: SymTensorField, points) -> float:
    """sup |D-hat D-hat A - 2T|."""
    A = cone.A(alpha)
    return max(float(np.max(np.abs(cone_hessian(cone, A, p) - 2 * T.values(p)))) for p in points)


def pregeodesic_factor(case_tag: str, alpha_value: float) -> float:
    """c in D_{rX} rX = c rX on the base."""
    if case_tag == "projector":
        return 1.0 - 2.0 * alpha_value
    if case_tag in ("nilpotent", "complex"):
        return -2.0 * alpha_value
    raise ValueError(case_tag)


def cone_pregeodesic_target(case_tag: str, rY: np.ndarray, r: float) -> np.ndarray:
    """D-hat_{rY} rY: rY (projector), 0 (nilpotent), -r d_r (complex)."""
    if case_tag == "projector":
        return rY
    if case_tag == "nilpotent":
        return np.zeros_like(rY)
    out = np.zeros_like(rY)
    out[0] = -r
    return out


@dataclass
class GradientRelation:
    base_gradient: float  # |grad_g alpha - pr(2rX)|
    cone_gradient: float  # |grad A - 2rY|
    base_pregeodesic: float  # |D_{rX} rX - c rX|
    cone_pregeodesic: float  # |D-hat_{rY} rY - target|

    @property
    def worst(self) -> float:
        return max(self.base_gradient, self.cone_gradient, self.base_pregeodesic, self.cone_pregeodesic)


def gradient_relation_check(cone: ConeSpace, alpha: ScalarField, T: SymTensorField, points, case_tag: str | None = None):
    """Gradient and pregeodesic relations between alpha, A, X and Y.

    Without ``case_tag`` only the gradient residuals are computed.
    """
    g = cone.base
    A = cone.A(alpha)
    res = dict(base_gradient=0.0, cone_gradient=0.0, base_pregeodesic=0.0, cone_pregeodesic=0.0)
    for p in points:
        x = as_coords(p)
        r, xb = x[0], x[1:]
        gb = g.at(xb, 1)
        a = alpha.at(xb, 2)
        grad_a = gradient_jet(gb.truncate(0), a.truncate(1)).value
        X = X_field(cone, T, x)
        Y = Y_field(cone, T, x)
        res["base_gradient"] = max(res["base_gradient"], float(np.max(np.abs(grad_a - 2 * r * X[1:]))))
        gc = cone.cone_metric.at(x, 1)
        grad_A = gradient_jet(gc.truncate(0), A.at(x, 1)).value
        res["cone_gradient"] = max(res["cone_gradient"], float(np.max(np.abs(grad_A - 2 * r * Y))))
        if case_tag is None:
            continue
        # rX projects to (1/2) grad alpha; rY = (1/2) grad A.
        V = gradient_jet(gb, a) * 0.5
        lhs = _covariant_self_derivative(gb, V)
        c = pregeodesic_factor(case_tag, float(a.value))
        res["base_pregeodesic"] = max(res["base_pregeodesic"], float(np.max(np.abs(lhs - c * V.value))))
        W = gradient_jet(gc, A.at(x, 2)) * 0.5
        lhs = _covariant_self_derivative(gc, W)
        target = cone_pregeodesic_target(case_tag, W.value, r)
        res["cone_pregeodesic"] = max(res["cone_pregeodesic"], float(np.max(np.abs(lhs - target))))
    return GradientRelation(**res)


def xx_norm_expected(case_tag: str, alpha_value: float) -> float:
    a = alpha_value
    return {"projector": a - a * a, "nilpotent": -a * a, "complex": -1.0 - a * a}[case_tag]


def xx_table_check(cone: ConeSpace, T: SymTensorField, case_tag: str, points) -> float:
    """sup |g-hat(X, X) - expected(alpha)|, plus |g-hat(X, d_r)| and |T(d_r, Z) - g-hat(Y, Z)|."""
    worst = 0.0
    for p in points:
        G = cone.cone_metric.values(p)
        Tv = T.values(p)
        X = X_field(cone, T, p)
        Y = Y_field(cone, T, p)
        worst = max(
            worst,
            abs(X @ G @ X - xx_norm_expected(case_tag, Tv[0, 0])),
            abs((G @ X)[0]),
            float(np.max(np.abs(Tv[0] - G @ Y))),
        )
    return float(worst)


def kernel_constancy_check(cone: ConeSpace, alpha: ScalarField, T: SymTensorField, points, rtol: float = 1e-8):
    """max |dA(Z)| over unit kernel vectors Z of T~; returns (residual, number of kernel vectors seen)."""
    A = cone.A(alpha)
    worst, count = 0.0, 0
    for p in points:
        x = as_coords(p)
        E = np.linalg.solve(cone.cone_metric.values(x), T.values(x))
        u, s, vt = np.linalg.svd(E)
        scale = max(1.0, s[0])
        dA = A.at(x, 1).grad
        for k in np.nonzero(s < rtol * scale)[0]:
            z = vt[k]
            worst = max(worst, abs(float(dA @ z)))
            count += 1
    return worst, count


def curvature_relation_residual(cone: ConeSpace, points) -> float:
    """Compare R-hat with R - (g(Y,Z)X - g(X,Z)Y) on lifted base fields; components along d_r must vanish."""
    g = cone.base
    d = g.dim
    worst = 0.0
    for p in points:
        x = as_coords(p)
        Rc = riemann_jet(christoffel_jet(cone.cone_metric.at(x, 2))).value
        gb = g.at(x[1:], 2)
        Rb = riemann_jet(christoffel_jet(gb)).value
        gv = gb.value
        eye = np.eye(d)
        expected = np.zeros_like(Rc)
        expected[1:, 1:, 1:, 1:] = Rb - (np.einsum("li,jk->lijk", eye, gv) - np.einsum("lj,ik->lijk", eye, gv))
        worst = max(worst, float(np.max(np.abs(Rc - expected))))
    return worst


def max_riemann(g: MetricField, points) -> float:
    worst = 0.0
    for p in points:
        x = as_coords(p)
        worst = max(worst, float(np.max(np.abs(riemann_jet(christoffel_jet(g.at(x, 2))).value))))
    return worst


def check_metric_points(g: MetricField, points) -> None:
    for p in points:
        g.check_point(p)


__all__ = [
    "ConeSpace",
    "ConeSolution",
    "DegenerateMetric",
    "build_cone",
    "tensor_from_alpha",
    "cone_solution",
    "parallel_residual",
    "hessian_identity_check",
    "gradient_relation_check",
    "xx_table_check",
    "kernel_constancy_check",
    "curvature_relation_residual",
    "max_riemann",
]
