"""The Obata operator as a residual, and alpha along the unit gradient flow."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import jets as J
from .errors import LeftChart, NearSingularLevel
from .geometry import MetricField, ScalarField, as_coords, christoffel_jet, covariant_derivative_jet, covariant_hessian_jet
from .jets import Jet

REGULAR_THRESHOLD = 1e-6


def obata_tensor(g: MetricField, alpha: ScalarField, p) -> np.ndarray:
    """DDD alpha_ijk + 2 d_i alpha g_jk + d_j alpha g_ik + d_k alpha g_ij."""
    x = as_coords(p)
    gj = g.at(x, 2)
    a = alpha.at(x, 3)
    ddd = covariant_derivative_jet(gj, covariant_hessian_jet(gj, a)).value
    da = a.grad
    gv = gj.value
    return (
        ddd
        + 2 * np.einsum("i,jk->ijk", da, gv)
        + np.einsum("j,ik->ijk", da, gv)
        + np.einsum("k,ij->ijk", da, gv)
    )


@dataclass
class ObataReport:
    sup_residual: float
    per_point: list
    n_points: int
    metric_id: str = ""
    alpha_id: str = ""


def obata_residual(g: MetricField, alpha: ScalarField, points) -> ObataReport:
    per_point = []
    for p in points:
        x = as_coords(p)
        per_point.append((x, float(np.max(np.abs(obata_tensor(g, alpha, x))))))
    sup = max((r for _, r in per_point), default=0.0)
    return ObataReport(sup, per_point, len(per_point), g.name, alpha.name)


# -- profiles along the unit gradient flow ------------------------------------


def _unit_field(g: MetricField, alpha: ScalarField, x: np.ndarray) -> tuple[np.ndarray, float]:
    """X-bar = -grad alpha / sqrt|g(grad alpha, grad alpha)| and the norm g(grad alpha, grad alpha)."""
    G = g.values(x)
    da = alpha.at(x, 1).grad
    grad = np.linalg.solve(G, da)
    n2 = float(da @ grad)
    if abs(n2) <= REGULAR_THRESHOLD:
        raise NearSingularLevel(f"|g(grad alpha, grad alpha)| = {abs(n2):.3e} at {x}")
    return -grad / np.sqrt(abs(n2)), n2


def unit_field_geodesic_residual(g: MetricField, alpha: ScalarField, p) -> float:
    """|D_{X-bar} X-bar| computed from jets of X-bar."""
    x = as_coords(p)
    gj = g.at(x, 1)
    a = alpha.at(x, 2)
    da = a.d()
    grad = J.einsum("ij,j->i", J.inv(gj), da)
    n2 = J.einsum("i,i->", grad, da)
    if abs(float(n2.value)) <= REGULAR_THRESHOLD:
        raise NearSingularLevel("unit field undefined")
    norm = J.sqrt(n2 * float(np.sign(n2.value)))
    V: Jet = grad * (-1.0 / norm)
    G = christoffel_jet(gj).value
    v = V.value
    acc = V.grad @ v + np.einsum("kij,i,j->k", G, v, v)
    return float(np.max(np.abs(acc)))


PROFILE_ROWS = ("cos2", "cosh2", "minus_sinh2", "exp", "minus_exp", "sinh")


def profile_row(case_tag: str, alpha0: float) -> str:
    if case_tag == "projector":
        if 0 < alpha0 < 1:
            return "cos2"
        if alpha0 > 1:
            return "cosh2"
        if alpha0 < 0:
            return "minus_sinh2"
        raise NearSingularLevel(f"alpha = {alpha0} lies in the spectrum")
    if case_tag == "nilpotent":
        if alpha0 > 0:
            return "exp"
        if alpha0 < 0:
            return "minus_exp"
        raise NearSingularLevel("alpha = 0 lies in the spectrum")
    if case_tag == "complex":
        return "sinh"
    raise ValueError(case_tag)


def profile_value(row: str, u):
    """Closed-form alpha along the flow as a function of u = s + c (e^{2s+c} rows use u = 2s + c)."""
    u = np.asarray(u, dtype=float)
    return {
        "cos2": lambda: np.cos(u) ** 2,
        "cosh2": lambda: np.cosh(u) ** 2,
        "minus_sinh2": lambda: -np.sinh(u) ** 2,
        "exp": lambda: np.exp(u),
        "minus_exp": lambda: -np.exp(u),
        "sinh": lambda: np.sinh(u),
    }[row]()


def _fit_phase(row: str, alpha0: float, increasing: bool) -> float:
    """Constant c with profile(0 + c) = alpha0 on the branch matching the flow direction."""
    if row == "cos2":
        u = np.arccos(np.sqrt(alpha0))  # in (0, pi/2): decreasing there
        return u if not increasing else -u
    if row == "cosh2":
        u = np.arccosh(np.sqrt(alpha0))
        return u if increasing else -u
    if row == "minus_sinh2":
        u = np.arcsinh(np.sqrt(-alpha0))
        return -u if increasing else u
    if row == "exp":
        return float(np.log(alpha0))
    if row == "minus_exp":
        return float(np.log(-alpha0))
    if row == "sinh":
        return float(np.arcsinh(alpha0))
    raise ValueError(row)


def _argument(row: str, s, c):
    s = np.asarray(s, dtype=float)
    if row in ("exp", "sinh"):
        return 2 * s + c
    if row == "minus_exp":
        return -2 * s + c
    return s + c


@dataclass
class ProfileResult:
    deviation: float
    geodesic_residual: float
    row: str
    branch: str
    c: float
    s: np.ndarray = field(repr=False)
    alpha: np.ndarray = field(repr=False)
    path: np.ndarray = field(repr=False)

    def series(self) -> np.ndarray:
        """Columns s, alpha(gamma(s)), profile(s)."""
        return np.column_stack([self.s, self.alpha, profile_value(self.row, _argument(self.row, self.s, self.c))])


def profile_check(
    g: MetricField,
    alpha: ScalarField,
    case_tag: str,
    p0,
    s_max: float,
    step: float = 1e-3,
    geodesic_every: int = 10,
) -> ProfileResult:
    """Integrate X-bar from p0 by RK4 and compare alpha along the curve with the closed-form profile."""
    chart = g.chart
    x = chart.require(p0).copy()
    v0, _ = _unit_field(g, alpha, x)
    a0 = float(alpha.at(x, 0).value)
    da0 = alpha.at(x, 1).grad
    increasing = float(da0 @ v0) > 0
    row = profile_row(case_tag, a0)
    c = _fit_phase(row, a0, increasing)

    def f(y):
        if not chart.contains(y):
            raise LeftChart(f"flow left the chart at {y}")
        return _unit_field(g, alpha, y)[0]

    n = int(round(s_max / step))
    ss = [0.0]
    xs = [x.copy()]
    geo = unit_field_geodesic_residual(g, alpha, x)
    for k in range(n):
        k1 = f(x)
        k2 = f(x + 0.5 * step * k1)
        k3 = f(x + 0.5 * step * k2)
        k4 = f(x + step * k3)
        x = x + step / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not chart.contains(x):
            raise LeftChart(f"flow left the chart at s = {(k + 1) * step}")
        ss.append((k + 1) * step)
        xs.append(x.copy())
        if (k + 1) % geodesic_every == 0:
            geo = max(geo, unit_field_geodesic_residual(g, alpha, x))
    s = np.array(ss)
    path = np.array(xs)
    vals = np.array([float(alpha.at(y, 0).value) for y in path])
    prof = profile_value(row, _argument(row, s, c))
    return ProfileResult(
        float(np.max(np.abs(vals - prof))),
        float(geo),
        row,
        "increasing" if increasing else "decreasing",
        float(c),
        s,
        vals,
        path,
    )
