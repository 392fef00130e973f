"""Charts, metric and tensor fields, and Levi-Civita calculus on jets.

Index conventions: tensors are stored fully covariant except the Christoffel
symbols ``gamma[k, i, j]`` = Gamma^k_ij and the curvature ``R[l, i, j, k]`` =
R^l_ijk, i.e. the components of R(d_i, d_j) d_k.  Derivative slots produced by
covariant differentiation come first: ``DT[i, j, k]`` = (D_i T)_jk.
"""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.stats import qmc

from . import jets as J
from .errors import ChartError, DegenerateMetric, JetOrderError
from .jets import Jet

DET_THRESHOLD = 1e-12


class Point(NamedTuple):
    coords: np.ndarray
    chart_id: str = ""


def as_coords(p) -> np.ndarray:
    if isinstance(p, Point):
        return np.asarray(p.coords, dtype=float)
    return np.asarray(p, dtype=float).reshape(-1)


@dataclass(frozen=True)
class Chart:
    """Open coordinate box, optionally minus some excluded sets.

    ``excluded_sets`` holds ``(description, predicate)`` pairs where the
    predicate returns True for points that must be avoided.  ``sample_box``
    narrows the region used for residual sampling (defaults to ``box``).
    """

    dim: int
    box: tuple
    excluded_sets: tuple = ()
    sample_box: tuple | None = None
    chart_id: str = ""

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("chart dimension must be >= 1")
        if len(self.box) != self.dim:
            raise ValueError("box must give one interval per coordinate")
        for lo, hi in self.box:
            if not lo < hi:
                raise ValueError(f"empty interval ({lo}, {hi})")

    @property
    def lower(self) -> np.ndarray:
        return np.array([b[0] for b in self.box], dtype=float)

    @property
    def upper(self) -> np.ndarray:
        return np.array([b[1] for b in self.box], dtype=float)

    def contains(self, p) -> bool:
        x = as_coords(p)
        if x.size != self.dim or not np.all(np.isfinite(x)):
            return False
        if np.any(x <= self.lower) or np.any(x >= self.upper):
            return False
        return not any(pred(x) for _, pred in self.excluded_sets)

    def require(self, p) -> np.ndarray:
        x = as_coords(p)
        if not self.contains(x):
            raise ChartError(f"point {x} is outside chart {self.chart_id or self.box}")
        return x

    def sample(self, n: int = 50, seed: int = 42, boundary: bool = True) -> list[np.ndarray]:
        """Deterministic sample: scrambled Halton points plus boundary-offset points.

        Boundary points sit at the box center with one coordinate moved to
        1e-2 inside either face of the sampling box.
        """
        box = self.sample_box or self.box
        lo = np.array([b[0] for b in box], dtype=float)
        hi = np.array([b[1] for b in box], dtype=float)
        halton = qmc.Halton(d=self.dim, scramble=True, seed=seed)
        pts: list[np.ndarray] = []
        tries = 0
        while len(pts) < n and tries < 50:
            for u in halton.random(max(n, 16)):
                x = lo + (hi - lo) * u
                if self.contains(x):
                    pts.append(x)
                    if len(pts) == n:
                        break
            tries += 1
        if boundary:
            center = 0.5 * (lo + hi)
            for i in range(self.dim):
                for edge in (lo[i] + 1e-2, hi[i] - 1e-2):
                    x = center.copy()
                    x[i] = edge
                    if self.contains(x):
                        pts.append(x)
        return pts


class JetField:
    """A tensor field given by a pointwise jet evaluator.

    ``evaluator(x, order)`` returns a :class:`Jet` in the chart variables.
    ``order_loss`` records how many orders the evaluator consumes internally
    (a pullback through an embedding loses one), so the highest order that can
    be requested is ``MAX_ORDER - order_loss``.
    """

    def __init__(self, chart: Chart, evaluator: Callable[[np.ndarray, int], Jet], name: str = "", order_loss: int = 0):
        self.chart = chart
        self._evaluator = evaluator
        self.name = name
        self.order_loss = order_loss

    @property
    def dim(self) -> int:
        return self.chart.dim

    @property
    def max_order(self) -> int:
        return J.MAX_ORDER - self.order_loss

    def at(self, p, order: int = 0) -> Jet:
        if order > self.max_order:
            raise JetOrderError(f"{self.name or type(self).__name__} supports order <= {self.max_order}")
        x = as_coords(p)
        out = self._evaluator(x, order)
        if not isinstance(out, Jet):
            out = J.constant(out, x.size, order)
        return out.truncate(order)

    def values(self, p) -> np.ndarray:
        return self.at(p, 0).value

    @classmethod
    def from_formula(cls, chart: Chart, fn: Callable, name: str = "", order_loss: int = 0, **kwargs):
        """Wrap ``fn(coords: list[Jet]) -> Jet | nested list`` as a field."""

        def evaluator(x, order):
            coords = J.seed(x, min(order + order_loss, J.MAX_ORDER))
            out = fn(coords)
            if isinstance(out, (list, tuple)):
                out = J.jarray(out)
            return out

        return cls(chart, evaluator, name=name, order_loss=order_loss, **kwargs)


class ScalarField(JetField):
    pass


class SymTensorField(JetField):
    def symmetry_defect(self, p) -> float:
        v = self.values(p)
        return float(np.max(np.abs(v - v.T)))


class MetricField(SymTensorField):
    """A pseudo-Riemannian metric: symmetric, nondegenerate, with a declared signature."""

    def __init__(self, chart, evaluator, signature: tuple[int, int], name: str = "", order_loss: int = 0):
        super().__init__(chart, evaluator, name=name, order_loss=order_loss)
        self.signature = tuple(signature)
        if sum(self.signature) != chart.dim:
            raise ValueError(f"signature {signature} does not match dimension {chart.dim}")

    def check_point(self, p, det_threshold: float = DET_THRESHOLD) -> None:
        g = self.values(p)
        if not np.allclose(g, g.T, rtol=0, atol=1e-12):
            raise DegenerateMetric(f"metric {self.name} is not symmetric at {as_coords(p)}")
        if abs(np.linalg.det(g)) <= det_threshold:
            raise DegenerateMetric(f"metric {self.name} is degenerate at {as_coords(p)}")
        if signature_of(g) != self.signature:
            raise DegenerateMetric(
                f"metric {self.name} has signature {signature_of(g)} at {as_coords(p)}, expected {self.signature}"
            )


def signature_of(g: np.ndarray) -> tuple[int, int]:
    ev = np.linalg.eigvalsh(0.5 * (g + g.T))
    return int(np.sum(ev > 0)), int(np.sum(ev < 0))


def metric_from_formula(chart, fn, signature, name="", order_loss=0) -> MetricField:
    return MetricField.from_formula(chart, fn, name=name, order_loss=order_loss, signature=signature)


def pullback_metric(chart: Chart, embedding: Callable, ambient: np.ndarray, signature, name="") -> MetricField:
    """Metric induced by ``embedding(coords) -> list of ambient coordinate jets`` and a constant form."""
    ambient = np.asarray(ambient, dtype=float)

    def fn(coords):
        X = embedding(coords)
        jac = J.jstack([x.d() for x in X])  # (N, n): d_a X^I
        return J.einsum("ia,ib->ab", J.einsum("ij,ja->ia", ambient, jac), jac)

    return metric_from_formula(chart, fn, signature, name=name, order_loss=1)


def block_jet(corner: Jet, mixed: Jet | None, inner: Jet) -> Jet:
    """Assemble [[corner, mixed^T], [mixed, inner]] from jets in the cone variables."""
    order = min(corner.order, inner.order, mixed.order if mixed is not None else 3)
    d = inner.shape[0]
    n = corner.nvars
    out = []
    for k in range(order + 1):
        a = np.zeros((d + 1, d + 1) + (n,) * k)
        a[0, 0] = corner.arrays()[k]
        if mixed is not None:
            a[1:, 0] = mixed.arrays()[k]
            a[0, 1:] = mixed.arrays()[k]
        a[1:, 1:] = inner.arrays()[k]
        out.append(a)
    return Jet(*out)


# -- Levi-Civita calculus on jets ----------------------------------------------


def _checked_inverse(g: Jet) -> Jet:
    if abs(np.linalg.det(g.value)) <= DET_THRESHOLD:
        raise DegenerateMetric(f"|det g| = {abs(np.linalg.det(g.value)):.3e} <= {DET_THRESHOLD}")
    return J.inv(g)


def christoffel_jet(g: Jet) -> Jet:
    """Gamma^k_ij from a metric jet; the result has order ``g.order - 1``."""
    dg = g.d()  # dg[a, b, c] = d_c g_ab
    ginv = _checked_inverse(g.truncate(dg.order))
    comb = dg.transpose((1, 2, 0)) + dg.transpose((1, 0, 2)) - dg.transpose((2, 0, 1))
    return J.einsum("kl,lij->kij", ginv, comb) * 0.5


def riemann_jet(gamma: Jet) -> Jet:
    """R^l_ijk = d_i G^l_jk - d_j G^l_ik + G^l_im G^m_jk - G^l_jm G^m_ik."""
    dG = gamma.d()  # dG[l, j, k, i] = d_i Gamma^l_jk
    G = gamma.truncate(dG.order)
    return (
        dG.transpose((0, 3, 1, 2))
        - dG.transpose((0, 1, 3, 2))
        + J.einsum("lim,mjk->lijk", G, G)
        - J.einsum("ljm,mik->lijk", G, G)
    )


def covariant_derivative_jet(g: Jet, T: Jet) -> Jet:
    """(D_i T)_jk for a covariant 2-tensor jet; order drops by one."""
    dT = T.d()  # dT[j, k, i]
    G = christoffel_jet(g.truncate(dT.order + 1))
    Tt = T.truncate(dT.order)
    return dT.transpose((2, 0, 1)) - J.einsum("mij,mk->ijk", G, Tt) - J.einsum("mik,jm->ijk", G, Tt)


def covariant_hessian_jet(g: Jet, a: Jet) -> Jet:
    da = a.d()
    dda = da.d()
    G = christoffel_jet(g.truncate(dda.order + 1))
    return dda - J.einsum("kij,k->ij", G, da.truncate(dda.order))


def gradient_jet(g: Jet, a: Jet) -> Jet:
    da = a.d()
    return J.einsum("ij,j->i", _checked_inverse(g.truncate(da.order)), da)


# -- pointwise operations on fields ----------------------------------------------


def christoffel(g: MetricField, p, order: int = 1) -> Jet:
    """Christoffel symbols with ``order`` derivative orders (default: value and first derivatives)."""
    return christoffel_jet(g.at(p, order + 1))


def riemann(g: MetricField, p) -> np.ndarray:
    return riemann_jet(christoffel(g, p, 1)).value


def lower_riemann(g: MetricField, p) -> np.ndarray:
    """R_lijk = g_lm R^m_ijk = g(d_l, R(d_i, d_j) d_k)."""
    gv = g.values(p)
    return np.einsum("lm,mijk->lijk", gv, riemann(g, p))


def sectional_curvature(g: MetricField, p, u, v, min_denominator: float = 1e-6) -> float:
    gv = g.values(p)
    R = riemann(g, p)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    Ruv_v = np.einsum("lijk,i,j,k->l", R, u, v, v)
    num = float(u @ gv @ Ruv_v)
    den = float((u @ gv @ u) * (v @ gv @ v) - (u @ gv @ v) ** 2)
    if abs(den) < min_denominator:
        raise ValueError("degenerate plane")
    return num / den


def coordinate_sectional_curvatures(g: MetricField, p, min_denominator: float = 1e-6) -> dict:
    """K(d_i, d_j) for all coordinate planes with a non-degenerate restriction of g."""
    gv = g.values(p)
    Rl = np.einsum("lm,mijk->lijk", gv, riemann(g, p))
    out = {}
    n = gv.shape[0]
    for i in range(n):
        for j in range(i + 1, n):
            den = gv[i, i] * gv[j, j] - gv[i, j] ** 2
            if abs(den) >= min_denominator:
                out[(i, j)] = float(Rl[i, i, j, j] / den)
    return out


def covariant_hessian(g: MetricField, alpha: ScalarField, p, order: int = 0) -> Jet:
    """(DD alpha)_ij = d_i d_j alpha - Gamma^k_ij d_k alpha."""
    return covariant_hessian_jet(g.at(p, order + 1), alpha.at(p, order + 2))


def covariant_third(g: MetricField, alpha: ScalarField, p) -> np.ndarray:
    """(DDD alpha)_ijk = (D_i DD alpha)_jk."""
    hess = covariant_hessian(g, alpha, p, order=1)
    return covariant_derivative_jet(g.at(p, 2), hess).value


def covariant_derivative_2tensor(g: MetricField, T: SymTensorField, p) -> np.ndarray:
    return covariant_derivative_jet(g.at(p, 1), T.at(p, 1)).value


def gradient(g: MetricField, alpha: ScalarField, p) -> np.ndarray:
    return gradient_jet(g.at(p, 0), alpha.at(p, 1)).value


# -- endomorphisms -----------------------------------------------------------------


def endomorphism(g: MetricField, T: SymTensorField, p) -> np.ndarray:
    """Matrix of T~ = g^{-1} T, so that T(u, v) = g(u, T~ v)."""
    gv = g.values(p)
    if abs(np.linalg.det(gv)) <= DET_THRESHOLD:
        raise DegenerateMetric("cannot raise an index with a degenerate metric")
    return np.linalg.solve(gv, T.values(p))


class EndoField:
    """T~ = g^{-1} T as a pointwise matrix field."""

    def __init__(self, g: MetricField, T: SymTensorField):
        self.g = g
        self.T = T
        self.chart = g.chart

    def at(self, p) -> np.ndarray:
        return endomorphism(self.g, self.T, p)

    def self_adjoint_defect(self, p) -> float:
        """max |g(T~u, v) - g(u, T~v)| over coordinate vectors."""
        gv = self.g.values(p)
        E = self.at(p)
        A = E.T @ gv
        return float(np.max(np.abs(A - A.T)))


@dataclass
class Classification:
    kind: str  # "nilpotent" | "projector" | "complex" | "other"
    normalized: np.ndarray
    residuals: dict = field(default_factory=dict)
    min_poly: tuple = ()

    def __str__(self) -> str:
        return self.kind


def classify_matrix(E: np.ndarray, tol: float = 1e-8) -> Classification:
    """Place a self-adjoint endomorphism in the nilpotent / projector / complex trichotomy.

    The raw relations E^2 = 0, E^2 = E, E^2 = -Id are tried first.  Failing
    those, E is fitted by a quadratic minimal polynomial and replaced by the
    affine combination of E and Id that satisfies one of the relations.
    """
    E = np.asarray(E, dtype=float)
    n = E.shape[0]
    eye = np.eye(n)
    E2 = E @ E
    raw = {
        "nilpotent": float(np.linalg.norm(E2)),
        "projector": float(np.linalg.norm(E2 - E)),
        "complex": float(np.linalg.norm(E2 + eye)),
    }
    for kind in ("nilpotent", "projector", "complex"):
        if raw[kind] < tol:
            return Classification(kind, E, raw, _min_poly_for(kind, 1.0, 0.0))

    scale = max(1.0, float(np.linalg.norm(E)))
    lam = np.trace(E) / n
    if np.linalg.norm(E - lam * eye) < tol * scale:
        return Classification("projector", eye, raw, (1.0, -lam))

    A = np.stack([E.ravel(), eye.ravel()], axis=1)
    coef, *_ = np.linalg.lstsq(A, -E2.ravel(), rcond=None)
    c1, c0 = coef
    fit = float(np.linalg.norm(E2 + c1 * E + c0 * eye))
    if fit < tol * scale**2:
        disc = c1 * c1 - 4 * c0
        if abs(disc) < tol * scale**2:
            lam = -c1 / 2
            N = E - lam * eye
            kind, normalized = "nilpotent", N
        elif disc > 0:
            r = np.sqrt(disc)
            l1, l2 = (-c1 + r) / 2, (-c1 - r) / 2
            kind, normalized = "projector", (E - l2 * eye) / (l1 - l2)
        else:
            a, b = -c1 / 2, np.sqrt(-disc) / 2
            kind, normalized = "complex", (E - a * eye) / b
        N2 = normalized @ normalized
        check = {
            "nilpotent": np.linalg.norm(N2),
            "projector": np.linalg.norm(N2 - normalized),
            "complex": np.linalg.norm(N2 + eye),
        }[kind]
        if check < tol * scale:
            return Classification(kind, normalized, raw, (1.0, float(c1), float(c0)))
    ev = np.linalg.eigvals(E)
    poly = tuple(float(c) for c in np.real_if_close(np.poly(ev)))
    return Classification("other", E, raw, poly)


def _min_poly_for(kind: str, a: float, b: float) -> tuple:
    return {"nilpotent": (1.0, 0.0, 0.0), "projector": (1.0, -1.0, 0.0), "complex": (1.0, 0.0, 1.0)}[kind]


def classify_endomorphism(g: MetricField, T: SymTensorField, p, tol: float = 1e-8) -> Classification:
    return classify_matrix(endomorphism(g, T, p), tol)


def constant_tensor_field(chart: Chart, matrix, name: str = "") -> SymTensorField:
    m = np.asarray(matrix, dtype=float)

    def evaluator(x, order):
        return J.constant(m, x.size, order)

    return SymTensorField(chart, evaluator, name=name)


def constant_metric(chart: Chart, matrix, name: str = "") -> MetricField:
    m = np.asarray(matrix, dtype=float)

    def evaluator(x, order):
        return J.constant(m, x.size, order)

    return MetricField(chart, evaluator, signature_of(m), name=name)


def sup_over(points: Sequence, fn: Callable[[np.ndarray], float]) -> tuple[float, list]:
    per_point = [(p, float(fn(p))) for p in points]
    return (max(v for _, v in per_point) if per_point else 0.0), per_point
