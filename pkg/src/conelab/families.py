"""Explicit metrics carrying non-trivial Obata solutions.

The four families live on I x N with coordinates (s, n) and s at index 0:

    nilpotent:  g = -ds^2 + e^{2s}(h - S) + S,             alpha = e^{2s}
    complex:    g = -ds^2 + h - sinh(2s) S,                 alpha = sinh(2s)
    trig:       g =  ds^2 + sin^2 s (h - S) + cos^2 s S,    alpha = cos^2 s
    hyperbolic: g = -ds^2 + sinh^2 s (h - S) + cosh^2 s S,  alpha = cosh^2 s or -sinh^2 s

where (N, h) carries a parallel symmetric 2-tensor S with S~^2 = 0, -Id or S~.
Also here: the warped hyperbolic product, the pseudo-spheres S^{p,q} and their
compactly supported perturbations.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import jets as J
from .cone import cone_solution
from .errors import BumpTooLarge, ChartSingularity, DegenerateMetric, DegenerateSlice
from .geometry import (
    Chart,
    MetricField,
    ScalarField,
    SymTensorField,
    as_coords,
    block_jet,
    constant_metric,
    constant_tensor_field,
    covariant_derivative_jet,
    covariant_hessian_jet,
    metric_from_formula,
    pullback_metric,
    signature_of,
)
from .jets import Jet

CASE_RELATIONS = {
    "nilpotent": lambda E: E @ E,
    "complex": lambda E: E @ E + np.eye(E.shape[0]),
    "projector": lambda E: E @ E - E,
}
PROJECTOR_BRANCHES = ("trig", "hyp_pos", "hyp_neg")


# -- base data ------------------------------------------------------------------


@dataclass
class BaseData:
    """(N, h) with a parallel symmetric 2-tensor S, and the s-interval of the family."""

    N_metric: MetricField
    S: SymTensorField
    interval: tuple
    case: str
    name: str = ""
    tol: float = 1e-9

    def __post_init__(self):
        if self.case not in CASE_RELATIONS:
            raise ValueError(f"unknown case {self.case}")
        rel = CASE_RELATIONS[self.case]
        for p in self.N_metric.chart.sample(12, seed=7, boundary=False):
            self.N_metric.check_point(p)
            E = np.linalg.solve(self.N_metric.values(p), self.S.values(p))
            if np.max(np.abs(rel(E))) > self.tol:
                raise DegenerateSlice(f"S on {self.name} does not satisfy the {self.case} relation")
            DS = covariant_derivative_jet(self.N_metric.at(p, 1), self.S.at(p, 1)).value
            if np.max(np.abs(DS)) > self.tol:
                raise DegenerateSlice(f"S on {self.name} is not parallel")

    @property
    def dim(self) -> int:
        return self.N_metric.dim


def flat_base(h, S, case: str, interval, box=None, name: str = "") -> BaseData:
    h = np.asarray(h, dtype=float)
    n = h.shape[0]
    chart = Chart(n, tuple(box or [(-2.0, 2.0)] * n), chart_id=name)
    return BaseData(constant_metric(chart, h, name=name), constant_tensor_field(chart, S, name=f"S[{name}]"), tuple(interval), case, name)


def round_sphere_base(case: str = "projector", S_is_h: bool = True, interval=(0.1, 1.4), name: str = "round_S2") -> BaseData:
    """Round S^2 in polar coordinates with S = h (or S = 0)."""
    chart = Chart(2, ((0.3, np.pi - 0.3), (-3.0, 3.0)), chart_id=name)
    h = metric_from_formula(chart, lambda c: [[1.0, 0.0], [0.0, J.sin(c[0]) ** 2]], (2, 0), name=name)
    S = h if S_is_h else constant_tensor_field(chart, np.zeros((2, 2)))
    S = SymTensorField(chart, S._evaluator, name=f"S[{name}]")
    return BaseData(h, S, tuple(interval), case, name)


def base_fixtures() -> dict[str, BaseData]:
    """Admissible (N, h, S) with constant-coefficient S in the normal frames."""
    return {
        "flat_plane_zero": flat_base(np.eye(2), np.zeros((2, 2)), "nilpotent", (-1.0, 1.0), name="flat_plane_zero"),
        # h = 2 du dv, S = dv^2: S~ is the nilpotent block N
        "null_plane": flat_base([[0.0, 1.0], [1.0, 0.0]], [[0.0, 0.0], [0.0, 1.0]], "nilpotent", (-1.0, 1.0), name="null_plane"),
        # h = dx^2 - dy^2, S = -2 dx dy: S~ = (0 -1; 1 0)
        "split_plane": flat_base(np.diag([1.0, -1.0]), [[0.0, -1.0], [-1.0, 0.0]], "complex", (-1.0, 1.0), name="split_plane"),
        "flat_torus": flat_base(
            np.eye(2), np.diag([1.0, 0.0]), "projector", (0.1, 1.4), box=[(-np.pi, np.pi)] * 2, name="flat_torus"
        ),
        "flat_torus_hyp": flat_base(
            np.eye(2), np.diag([1.0, 0.0]), "projector", (0.2, 1.2), box=[(-np.pi, np.pi)] * 2, name="flat_torus_hyp"
        ),
        "flat_plane_full": flat_base(np.eye(2), np.eye(2), "projector", (0.2, 1.2), name="flat_plane_full"),
        "round_S2": round_sphere_base(),
    }


# -- families -------------------------------------------------------------------


@dataclass
class FamilyInstance:
    case_tag: str
    g: MetricField
    alpha: ScalarField
    S_s: SymTensorField  # the stated slice tensor, padded with a zero s-row
    base: BaseData | None
    name: str = ""
    branch: str = ""
    s_sign: float = -1.0  # g(d_s, d_s)
    extra: dict = field(default_factory=dict)

    def cone_solution(self):
        return cone_solution(self.g, self.alpha, self.case_tag)

    def sample(self, n: int = 50, seed: int = 42):
        return self.g.chart.sample(n, seed)


def _family_chart(base: BaseData) -> Chart:
    nchart = base.N_metric.chart
    excluded = tuple((desc, (lambda x, pred=pred: pred(x[1:]))) for desc, pred in nchart.excluded_sets)
    sample = None
    if nchart.sample_box is not None:
        sample = (tuple(base.interval),) + tuple(nchart.sample_box)
    return Chart(base.dim + 1, (tuple(base.interval),) + tuple(nchart.box), excluded, sample, chart_id=base.name)


def _lift(jet: Jet, d: int) -> Jet:
    return J.embed(jet, d + 1, range(1, d + 1))


def _family(base: BaseData, ss: float, coeff_hS, coeff_S, alpha_fn, slice_fn, case_tag, name, branch="", coeff_h=None):
    """Assemble g = ss ds^2 + a(s) (h - S) + b(s) S (+ c(s) h) from scalar functions of the s-jet."""
    d = base.dim
    h, S = base.N_metric, base.S
    chart = _family_chart(base)

    def metric(x, order):
        s = J.seed_coordinate(0, x, d + 1, order)
        hj = _lift(h.at(x[1:], order), d)
        Sj = _lift(S.at(x[1:], order), d)
        inner = (hj - Sj) * coeff_hS(s) + Sj * coeff_S(s)
        if coeff_h is not None:
            inner = inner + hj * coeff_h(s)
        return block_jet(J.constant(ss, d + 1, order), None, inner)

    def alpha(x, order):
        return alpha_fn(J.seed_coordinate(0, x, d + 1, order))

    def slice_tensor(x, order):
        s = J.seed_coordinate(0, x, d + 1, order)
        hj = _lift(h.at(x[1:], order), d)
        Sj = _lift(S.at(x[1:], order), d)
        return block_jet(J.constant(0.0, d + 1, order), None, slice_fn(s, hj, Sj))

    loss = max(h.order_loss, S.order_loss)
    probe = chart.sample(1, seed=1, boundary=False)[0]
    tmp = MetricField(chart, metric, (d + 1, 0), order_loss=loss)
    sig = signature_of(tmp.values(probe))
    g = MetricField(chart, metric, sig, name=name, order_loss=loss)
    for p in chart.sample(20, seed=3):
        try:
            g.check_point(p, det_threshold=1e-10)
        except DegenerateMetric as exc:
            raise DegenerateSlice(f"{name}: {exc}") from exc
    inst = FamilyInstance(
        case_tag,
        g,
        ScalarField(chart, alpha, name=f"alpha[{name}]"),
        SymTensorField(chart, slice_tensor, name=f"S_s[{name}]", order_loss=loss),
        base,
        name,
        branch,
        ss,
    )
    return inst


def build_nilpotent(base: BaseData, alpha_sign: float = 1.0, name: str | None = None) -> FamilyInstance:
    """g = -ds^2 + e^{2s}(h - S) + S, alpha = +-e^{2s}, S_s = +-e^{2s} S."""
    if alpha_sign not in (1.0, -1.0, 1, -1):
        raise ValueError("alpha_sign must be +1 or -1")
    e2 = lambda s: J.exp(s * 2.0)
    return _family(
        base,
        -1.0,
        e2,
        lambda s: 1.0,
        lambda s: e2(s) * float(alpha_sign),
        lambda s, h, S: S * (e2(s) * float(alpha_sign)),
        "nilpotent",
        name or f"nilpotent[{base.name}{'' if alpha_sign > 0 else ',neg'}]",
    )


def build_complex(base: BaseData, name: str | None = None) -> FamilyInstance:
    """g = -ds^2 + h - sinh(2s) S, alpha = sinh(2s), S_s = S + sinh(2s) h."""
    sh = lambda s: J.sinh(s * 2.0)
    return _family(
        base,
        -1.0,
        lambda s: 1.0,
        lambda s: 1.0 - sh(s),
        sh,
        lambda s, h, S: S + h * sh(s),
        "complex",
        name or f"complex[{base.name}]",
    )


def build_projector(base: BaseData, branch: str = "trig", name: str | None = None) -> FamilyInstance:
    """Projector families: trig (0 < alpha < 1), hyp_pos (alpha > 1), hyp_neg (alpha < 0)."""
    if branch not in PROJECTOR_BRANCHES:
        raise ValueError(f"branch must be one of {PROJECTOR_BRANCHES}")
    lo, hi = base.interval
    if branch == "trig":
        if lo <= 0 or hi >= np.pi / 2:
            raise ValueError("trig branch needs an s-interval inside (0, pi/2)")
        return _family(
            base,
            1.0,
            lambda s: J.sin(s) ** 2,
            lambda s: J.cos(s) ** 2,
            lambda s: J.cos(s) ** 2,
            lambda s, h, S: S * J.cos(s) ** 2,
            "projector",
            name or f"trig[{base.name}]",
            branch,
        )
    if lo <= 0:
        raise ValueError("hyperbolic branches need an s-interval inside (0, inf)")
    if branch == "hyp_pos":
        return _family(
            base,
            -1.0,
            lambda s: J.sinh(s) ** 2,
            lambda s: J.cosh(s) ** 2,
            lambda s: J.cosh(s) ** 2,
            lambda s, h, S: S * J.cosh(s) ** 2,
            "projector",
            name or f"hyp_pos[{base.name}]",
            branch,
        )
    # alpha < 0: the complementary tensor g-hat - T, whose slice part is sinh^2 s (h - S)
    return _family(
        base,
        -1.0,
        lambda s: J.sinh(s) ** 2,
        lambda s: J.cosh(s) ** 2,
        lambda s: -(J.sinh(s) ** 2),
        lambda s, h, S: (h - S) * J.sinh(s) ** 2,
        "projector",
        name or f"hyp_neg[{base.name}]",
        branch,
    )


# -- slice checks ---------------------------------------------------------------


def slice_metric_jet(inst: FamilyInstance, x, order: int) -> Jet:
    """g_s on the slice through x, as a jet in the N variables."""
    d = inst.g.dim - 1
    return inst.g.at(x, order)[1:, 1:].restrict(range(1, d + 1))


def computed_slice_tensor(inst: FamilyInstance, x, order: int = 0) -> Jet:
    """N-block of T at r = 1, i.e. g alpha + DD alpha / 2, as a jet in all variables."""
    gj = inst.g.at(x, order + 1)
    a = inst.alpha.at(x, order + 2)
    full = gj.truncate(order) * a.truncate(order) + covariant_hessian_jet(gj, a) * 0.5
    return full[1:, 1:]


def slice_formula_residual(inst: FamilyInstance, points) -> float:
    """sup |computed slice tensor - stated S_s|."""
    return max(float(np.max(np.abs(computed_slice_tensor(inst, p).value - inst.S_s.values(p)[1:, 1:]))) for p in points)


def slice_parallel_residual(inst: FamilyInstance, points) -> float:
    """sup |D^s S_s| with D^s the Levi-Civita connection of the slice metric."""
    d = inst.g.dim - 1
    worst = 0.0
    for p in points:
        x = as_coords(p)
        gs = slice_metric_jet(inst, x, 1)
        Ss = computed_slice_tensor(inst, x, 1).restrict(range(1, d + 1))
        worst = max(worst, float(np.max(np.abs(covariant_derivative_jet(gs, Ss).value))))
    return worst


def _s_of_t(inst: FamilyInstance, x0: np.ndarray, t: float, substeps: int = 20) -> float:
    """Integrate ds/dt = g^{ss} alpha'(s) / 2 (the flow of rX = grad alpha / 2) by RK4."""
    eps = inst.s_sign

    def rate(s):
        y = x0.copy()
        y[0] = s
        return eps * 0.5 * float(inst.alpha.at(y, 1).grad[0])

    s = float(x0[0])
    h = t / substeps
    for _ in range(substeps):
        k1 = rate(s)
        k2 = rate(s + 0.5 * h * k1)
        k3 = rate(s + 0.5 * h * k2)
        k4 = rate(s + h * k3)
        s += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return s


@dataclass
class EvolutionResidual:
    metric: float  # |g'_t + 2 alpha g_t - 2 S_t|
    tensor: float  # |S'_t + 2 alpha S_t - 2 S_t g_t^{-1} S_t|

    @property
    def worst(self) -> float:
        return max(self.metric, self.tensor)


def evolution_residual(inst: FamilyInstance, points, delta: float = 1e-3) -> EvolutionResidual:
    """Check the slice evolution equations by a five-point finite difference in t."""
    worst_g = worst_S = 0.0
    offsets = (-2, -1, 1, 2)
    weights = np.array([1.0, -8.0, 8.0, -1.0]) / (12 * delta)
    for p in points:
        x0 = as_coords(p)
        gs, Ss = [], []
        for k in offsets:
            y = x0.copy()
            y[0] = _s_of_t(inst, x0, k * delta)
            gs.append(inst.g.values(y)[1:, 1:])
            Ss.append(computed_slice_tensor(inst, y).value)
        dg = sum(w * m for w, m in zip(weights, gs))
        dS = sum(w * m for w, m in zip(weights, Ss))
        g0 = inst.g.values(x0)[1:, 1:]
        S0 = computed_slice_tensor(inst, x0).value
        a0 = float(inst.alpha.values(x0))
        worst_g = max(worst_g, float(np.max(np.abs(dg - (-2 * a0 * g0 + 2 * S0)))))
        rhs = -2 * a0 * S0 + 2 * S0 @ np.linalg.solve(g0, S0)
        worst_S = max(worst_S, float(np.max(np.abs(dS - rhs))))
    return EvolutionResidual(worst_g, worst_S)


def evolution_sample(inst: FamilyInstance, n: int = 12, seed: int = 42, margin: float = 0.05):
    """Points whose s-coordinate leaves room for the t-stencil."""
    lo, hi = inst.g.chart.box[0]
    pts = []
    for p in inst.g.chart.sample(n, seed, boundary=False):
        q = p.copy()
        q[0] = min(max(q[0], lo + margin), hi - margin)
        pts.append(q)
    return pts


# -- warped hyperbolic product ----------------------------------------------------


def _sphere_metric(angles: list) -> list:
    """Diagonal of the round metric in hyperspherical angles: 1, sin^2 a1, sin^2 a1 sin^2 a2, ..."""
    diag = []
    acc = 1.0
    for a in angles:
        diag.append(acc)
        acc = acc * J.sin(a) ** 2
    return diag


def build_warped_hyperbolic(n1: int, N_metric: MetricField, chart: str = "polar", name: str | None = None) -> FamilyInstance:
    """g = -ds^2 - sinh^2(s) g_1 + cosh^2(s) h on H^{n1}_- x N, with alpha = -sinh^2(s).

    ``chart="polar"`` uses (s, sphere angles, n) with s in (0.1, 3); ``chart="hyperboloid"``
    uses y in R^{n1} with f = sqrt(1 + |y|^2) = cosh(s), which also covers the origin.
    """
    if n1 < 2:
        raise ValueError("n1 must be at least 2")
    k = N_metric.dim
    nbox = tuple(N_metric.chart.box)
    if chart == "polar":
        m = n1 - 1
        abox = tuple([(0.3, np.pi - 0.3)] * (m - 1) + [(-3.0, 3.0)])
        ch = Chart(1 + m + k, ((0.1, 3.0),) + abox + nbox, chart_id="warped_polar", sample_box=((0.1, 1.5),) + abox + nbox)

        def metric(x, order):
            c = J.seed(x, order)
            s = c[0]
            diag = _sphere_metric(c[1 : 1 + m])
            G = [[0.0] * (1 + m) for _ in range(1 + m)]
            G[0][0] = -1.0
            sh2 = J.sinh(s) ** 2
            for i, dv in enumerate(diag):
                G[1 + i][1 + i] = -(sh2 * dv)
            B = J.jarray(G)
            hj = J.embed(N_metric.at(x[1 + m :], order), 1 + m + k, range(1 + m, 1 + m + k))
            return _direct_sum(B, hj * J.cosh(s) ** 2)

        alpha_fn = lambda c: -(J.sinh(c[0]) ** 2)
        warp_fn = lambda x: float(np.cosh(x[0]))
    elif chart == "hyperboloid":
        m = n1
        ch = Chart(m + k, tuple([(-1.5, 1.5)] * m) + nbox, chart_id="warped_hyperboloid")

        def metric(x, order):
            c = J.seed(x, order)
            y = c[:m]
            q = 1.0 + sum(yi * yi for yi in y)
            B = J.jarray([[(yi * yj) / q - (1.0 if i == j else 0.0) for j, yj in enumerate(y)] for i, yi in enumerate(y)])
            hj = J.embed(N_metric.at(x[m:], order), m + k, range(m, m + k))
            return _direct_sum(B, hj * q)

        alpha_fn = lambda c: -sum(ci * ci for ci in c[:m])
        warp_fn = lambda x: float(np.sqrt(1.0 + x[:m] @ x[:m]))
    else:
        raise ValueError("chart must be 'polar' or 'hyperboloid'")

    sig = (N_metric.signature[0], n1 + N_metric.signature[1])
    g = MetricField(ch, metric, sig, name=name or f"warped_{chart}", order_loss=N_metric.order_loss)

    def alpha(x, order):
        return alpha_fn(J.seed(x, order))

    def slice_tensor(x, order):
        # the polar chart is a hyp_neg family over (S^{n1-1} x N, -g_1 + h) with S = h,
        # so the slice tensor is -sinh^2(s) g_1; the hyperboloid chart has no slice structure
        if chart != "polar":
            return J.constant(np.full((ch.dim, ch.dim), np.nan), ch.dim, order)
        c = J.seed(x, order)
        out = [[0.0] * ch.dim for _ in range(ch.dim)]
        sh2 = J.sinh(c[0]) ** 2
        for i, dv in enumerate(_sphere_metric(c[1 : 1 + m])):
            out[1 + i][1 + i] = -(sh2 * dv)
        return J.jarray(out)

    inst = FamilyInstance(
        "projector",
        g,
        ScalarField(ch, alpha, name=f"alpha[{g.name}]"),
        SymTensorField(ch, slice_tensor, name="unused"),
        None,
        g.name,
        "hyp_neg",
        -1.0,
        extra={"n1": n1, "base_dim": m, "fiber": N_metric, "warp": warp_fn, "chart": chart},
    )
    return inst


def _direct_sum(A: Jet, B: Jet) -> Jet:
    """Block-diagonal jet diag(A, B) where A is given in all variables."""
    a = A.shape[0]
    n = a + B.shape[0]
    order = min(A.order, B.order)
    out = []
    for k in range(order + 1):
        arr = np.zeros((n, n) + (A.nvars or B.nvars,) * k)
        arr[:a, :a] = A.arrays()[k]
        arr[a:, a:] = B.arrays()[k]
        out.append(arr)
    return Jet(*out)


def warped_alpha_partner(inst: FamilyInstance) -> ScalarField:
    """A second Obata solution on the hyperboloid chart: alpha_2 = -y_1^2."""
    if inst.extra.get("chart") != "hyperboloid":
        raise ValueError("the partner is defined on the hyperboloid chart")
    return ScalarField(inst.g.chart, lambda x, order: -(J.seed(x, order)[0] ** 2), name="alpha2[warped]")


# -- pseudo-spheres ----------------------------------------------------------------


def ambient_form(p: int, q: int) -> np.ndarray:
    """Ambient quadratic form of R^{p+1,q}: 2 x1 x2 + sum x_i^2 - sum x_j^2 when q >= 1, Euclidean when q = 0."""
    n = p + q + 1
    if q == 0:
        return np.eye(n)
    F = np.zeros((n, n))
    F[0, 1] = F[1, 0] = 1.0
    diag = [1.0] * p + [-1.0] * (q - 1)
    F[2:, 2:] = np.diag(diag)
    return F


@dataclass
class Pseudosphere:
    metric: MetricField
    alpha: ScalarField
    embedding: object  # coords (list of jets) -> ambient coordinate jets
    form: np.ndarray
    p: int
    q: int
    case_tag: str

    def __iter__(self):
        yield self.metric
        yield self.alpha


CHART_SINGULAR = 1e-3


def build_pseudosphere(p: int, q: int, sheet: int = 1, box=None) -> Pseudosphere:
    """S^{p,q} = {<x, x> = 1} with alpha = x1^2.

    For q >= 1 the chart is (x2, z) with x1 = (1 - Q(z)) / (2 x2) solved from the
    quadric; ``sheet`` picks x2 > 0 or x2 < 0.  For q = 0 (round sphere) the chart
    is a graph over (x1, ..., xp).
    """
    if p + q < 2 or p < 0 or q < 0:
        raise ValueError("need p + q >= 2")
    n = p + q
    F = ambient_form(p, q)
    if q == 0:
        lim = 0.65
        chart = Chart(
            n,
            tuple(box or [(-lim, lim)] * n),
            (("|u|^2 >= 0.9", lambda x: float(x @ x) >= 0.9),),
            chart_id=f"S{p},0",
        )

        def embedding(c):
            r2 = sum(ci * ci for ci in c)
            return list(c) + [J.sqrt(1.0 - r2)]

        case = "projector"
    else:
        if sheet not in (1, -1):
            raise ValueError("sheet must be +1 or -1")
        b = box or ([(0.3, 2.0)] if sheet > 0 else [(-2.0, -0.3)]) + [(-1.0, 1.0)] * (n - 1)
        chart = Chart(n, tuple(b), chart_id=f"S{p},{q}{'+' if sheet > 0 else '-'}")
        Fz = F[2:, 2:]

        def embedding(c):
            x2, z = c[0], c[1:]
            if abs(float(x2.value)) < CHART_SINGULAR:
                raise ChartSingularity("x2 too close to 0")
            Q = sum(Fz[i, i] * z[i] * z[i] for i in range(len(z))) if z else 0.0
            x1 = (1.0 - Q) / (x2 * 2.0)
            return [x1, x2] + list(z)

        case = "nilpotent"
    sig = (p, q)
    g = pullback_metric(chart, embedding, F, sig, name=f"S^{{{p},{q}}}")
    alpha = ScalarField.from_formula(chart, lambda c: embedding(c)[0] ** 2, name="x1^2")
    return Pseudosphere(g, alpha, embedding, F, p, q, case)


def pseudosphere_gradient_residual(ps: Pseudosphere, points) -> float:
    """Push grad alpha into the ambient space and compare with 2 x1 e_2 - 2 x1^2 x."""
    from .geometry import gradient

    worst = 0.0
    n = ps.metric.dim
    for p in points:
        x = as_coords(p)
        X = ps.embedding(J.seed(x, 1))
        jac = np.array([xi.grad for xi in X])
        pos = np.array([float(xi.value) for xi in X])
        push = jac @ gradient(ps.metric, ps.alpha, x)
        if ps.q == 0:
            # Euclidean form: grad of x1^2 is 2 x1 e_1
            e = np.zeros(n + 1)
            e[0] = 1.0
        else:
            e = np.zeros(n + 1)
            e[1] = 1.0
        expected = 2 * pos[0] * e - 2 * pos[0] ** 2 * pos
        worst = max(worst, float(np.max(np.abs(push - expected))))
    return worst


def horospherical_map(p: int, q: int):
    """(t, y) -> quadric point (e^{-t}, (e^t - e^{-t} Q(y)) / 2, e^{-t} y) for q >= 1."""
    F = ambient_form(p, q)
    Fz = F[2:, 2:]

    def X(c):
        t, y = c[0], c[1:]
        Q = sum(Fz[i, i] * y[i] * y[i] for i in range(len(y))) if y else 0.0
        em = J.exp(-t)
        return [em, (J.exp(t) - em * Q) * 0.5] + [em * yi for yi in y]

    return X, Fz


@dataclass
class Bump:
    center: tuple
    radius: float = 0.5
    amplitude: float = 0.1

    def jet(self, y: list[Jet]) -> Jet | float:
        """exp(-1 / (1 - u^2)) with u^2 = |y - c|^2 / R^2, zero outside the support."""
        c = np.asarray(self.center, dtype=float)
        u2 = sum((yi - ci) * (yi - ci) for yi, ci in zip(y, c)) * (1.0 / self.radius**2)
        if float(u2.value) >= 1.0:
            n = y[0].nvars
            return J.constant(0.0, n, y[0].order)
        return J.exp(-1.0 / (1.0 - u2))

    def inside(self, y) -> bool:
        c = np.asarray(self.center, dtype=float)
        return float(np.sum((np.asarray(y) - c) ** 2)) < self.radius**2


def build_perturbed_pseudosphere(p: int, q: int, bump: Bump | dict | None = None, box=None) -> Pseudosphere:
    """-dt^2 + e^{-2t} h_1 with h_1 = Q + amplitude * bump(y) dy_1^2 and alpha = e^{-2t}."""
    if q < 1:
        raise ValueError("the horospherical construction needs q >= 1")
    if isinstance(bump, dict):
        bump = Bump(**bump)
    n = p + q
    k = n - 1
    bump = bump or Bump(center=(0.0,) * k)
    if len(bump.center) != k:
        raise ValueError(f"bump center must have {k} coordinates")
    chart = Chart(n, tuple(box or [(-1.0, 1.0)] + [(-1.5, 1.5)] * k), chart_id=f"horo{p},{q}")
    Fz = ambient_form(p, q)[2:, 2:]

    for lo_hi, c in zip(chart.box[1:], bump.center):
        if not (lo_hi[0] < c - bump.radius and c + bump.radius < lo_hi[1]):
            raise ValueError("bump support must lie strictly inside the chart")

    def h1(y):
        H = [[Fz[i, j] for j in range(k)] for i in range(k)]
        b = bump.jet(y)
        H[0][0] = b * bump.amplitude + Fz[0, 0]
        return H

    def metric(x, order):
        c = J.seed(x, order)
        t, y = c[0], c[1:]
        e = J.exp(t * -2.0)
        H = J.jarray(h1(y))
        inner = H * e if isinstance(H, Jet) else J.constant(H, n, order) * e
        return block_jet(J.constant(-1.0, n, order), None, inner)

    g = MetricField(chart, metric, (p, q), name=f"perturbed S^{{{p},{q}}}")
    for pt in chart.sample(50, seed=5):
        if bump.inside(pt[1:]):
            try:
                g.check_point(pt, det_threshold=1e-10)
            except DegenerateMetric as exc:
                raise BumpTooLarge(f"perturbed metric degenerates inside the bump: {exc}") from exc
    alpha = ScalarField.from_formula(chart, lambda c: J.exp(c[0] * -2.0), name="e^{-2t}")
    X, _ = horospherical_map(p, q)
    ps = Pseudosphere(g, alpha, X, ambient_form(p, q), p, q, "nilpotent")
    ps.bump = bump
    return ps


def horospherical_pullback_values(ps: Pseudosphere, x) -> np.ndarray:
    """Graph-chart metric of ``ps`` pulled back through the horospherical map, at (t, y).

    The graph chart's own evaluator supplies the metric, so agreement with
    -dt^2 + e^{-2t} Q(dy) is a check of both constructions.
    """
    X, _ = horospherical_map(ps.p, ps.q)
    amb = X(J.seed(as_coords(x), 1))
    graph = [amb[1]] + amb[2:]  # graph chart coordinates (x2, z)
    jac = np.array([gi.grad for gi in graph])
    xg = np.array([float(gi.value) for gi in graph])
    return jac.T @ ps.metric.values(xg) @ jac


def family_fixtures() -> dict[str, FamilyInstance]:
    """The shipped instances, covering all four families."""
    b = base_fixtures()
    return {
        "nil_flat": build_nilpotent(b["flat_plane_zero"]),
        "nil_null": build_nilpotent(b["null_plane"]),
        "nil_null_neg": build_nilpotent(b["null_plane"], alpha_sign=-1.0),
        "complex_split": build_complex(b["split_plane"]),
        "trig_torus": build_projector(b["flat_torus"], "trig"),
        "trig_sphere": build_projector(b["round_S2"], "trig"),
        "hyp_pos_torus": build_projector(b["flat_torus_hyp"], "hyp_pos"),
        "hyp_neg_torus": build_projector(b["flat_torus_hyp"], "hyp_neg"),
        "hyp_pos_full": build_projector(b["flat_plane_full"], "hyp_pos"),
    }


def negative_control_alphas(inst: FamilyInstance) -> dict[str, ScalarField]:
    """Non-solutions on the family chart: alpha = s and alpha = s^3."""
    ch = inst.g.chart
    return {
        "s": ScalarField.from_formula(ch, lambda c: c[0] * 1.0, name="s"),
        "s^3": ScalarField.from_formula(ch, lambda c: c[0] ** 3, name="s^3"),
    }


def printed_alpha_candidates(inst: FamilyInstance) -> dict[str, ScalarField]:
    """Literal alternative alpha formulas for the complex and hyperbolic rows, used to show they fail."""
    ch = inst.g.chart
    out = {}
    if inst.case_tag == "complex":
        out["exp(-sinh^2(2s))"] = ScalarField.from_formula(ch, lambda c: J.exp(-(J.sinh(c[0] * 2.0) ** 2)), name="exp(-sinh^2 2s)")
    if inst.branch == "hyp_pos":
        out["cosh^2(2s)"] = ScalarField.from_formula(ch, lambda c: J.cosh(c[0] * 2.0) ** 2, name="cosh^2 2s")
    if inst.branch == "hyp_neg":
        out["-sinh^2(2s)"] = ScalarField.from_formula(ch, lambda c: -(J.sinh(c[0] * 2.0) ** 2), name="-sinh^2 2s")
    return out
