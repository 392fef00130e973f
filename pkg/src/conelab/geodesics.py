"""Geodesic integration, closed-form cone geodesics, warped-product equations and projective partners."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from . import jets as J
from .cone import ConeSpace, Y_field, tensor_from_alpha
from .errors import BranchUndefined, DegenerateMetric, InadmissibleShift, LeftChart
from .geometry import (
    MetricField,
    ScalarField,
    SymTensorField,
    as_coords,
    christoffel_jet,
    covariant_hessian_jet,
    gradient,
    signature_of,
)

# -- integration -------------------------------------------------------------------


@dataclass
class GeodesicPath:
    params: np.ndarray
    points: np.ndarray  # (n + 1, d)
    velocities: np.ndarray
    accelerations: np.ndarray  # from the geodesic right-hand side
    energies: np.ndarray  # g(v, v)
    metric_id: str = ""

    def __len__(self) -> int:
        return len(self.params)

    @property
    def step(self) -> float:
        return float(self.params[1] - self.params[0]) if len(self) > 1 else 0.0

    def energy_drift(self) -> float:
        if len(self) == 0:
            return 0.0
        return float(np.max(np.abs(self.energies - self.energies[0])))

    def project(self, index: slice) -> "GeodesicPath":
        """Keep only the coordinates in ``index`` (energies are dropped)."""
        return GeodesicPath(
            self.params,
            self.points[:, index],
            self.velocities[:, index],
            self.accelerations[:, index],
            np.full(len(self), np.nan),
            self.metric_id,
        )

    @classmethod
    def empty(cls, dim: int, metric_id: str = "") -> "GeodesicPath":
        z = np.zeros((0, dim))
        return cls(np.zeros(0), z, z, z, np.zeros(0), metric_id)


def geodesic_acceleration(g: MetricField, x: np.ndarray, v: np.ndarray) -> np.ndarray:
    G = christoffel_jet(g.at(x, 1)).value
    return -np.einsum("kij,i,j->k", G, v, v)


def integrate_geodesic(g: MetricField, p0, v0, t_span=(0.0, 1.0), step: float = 1e-2) -> GeodesicPath:
    """Fixed-step RK4 on (x, v) with v' = -Gamma(x)(v, v); raises LeftChart when the path exits."""
    if step <= 0:
        raise ValueError("step must be positive")
    chart = g.chart
    x = chart.require(p0).copy()
    v = np.asarray(v0, dtype=float).copy()
    t0, t1 = map(float, t_span)
    n = int(round((t1 - t0) / step))
    h = (t1 - t0) / n if n else 0.0

    def f(y, w):
        if not chart.contains(y):
            raise LeftChart(f"geodesic left the chart at {y}")
        return geodesic_acceleration(g, y, w)

    ts, xs, vs, acc, en = [t0], [x.copy()], [v.copy()], [f(x, v)], [float(v @ g.values(x) @ v)]
    for k in range(n):
        a1 = acc[-1]
        x2, v2 = x + 0.5 * h * v, v + 0.5 * h * a1
        a2 = f(x2, v2)
        x3, v3 = x + 0.5 * h * v2, v + 0.5 * h * a2
        a3 = f(x3, v3)
        x4, v4 = x + h * v3, v + h * a3
        a4 = f(x4, v4)
        x = x + h / 6 * (v + 2 * v2 + 2 * v3 + v4)
        v = v + h / 6 * (a1 + 2 * a2 + 2 * a3 + a4)
        if not chart.contains(x):
            raise LeftChart(f"geodesic left the chart at t = {t0 + (k + 1) * h}")
        ts.append(t0 + (k + 1) * h)
        xs.append(x.copy())
        vs.append(v.copy())
        acc.append(f(x, v))
        en.append(float(v @ g.values(x) @ v))
    return GeodesicPath(np.array(ts), np.array(xs), np.array(vs), np.array(acc), np.array(en), g.name)


def fd_accelerations(path: GeodesicPath) -> tuple[np.ndarray, np.ndarray]:
    """Five-point central differences of the velocities; returns (interior indices, accelerations)."""
    h = path.step
    v = path.velocities
    idx = np.arange(2, len(path) - 2)
    a = (v[idx - 2] - 8 * v[idx - 1] + 8 * v[idx + 1] - v[idx + 2]) / (12 * h)
    return idx, a


def geodesic_residual(g: MetricField, path: GeodesicPath) -> float:
    """sup over interior nodes of |x'' + Gamma(x')(x')| with x'' from finite differences."""
    idx, a = fd_accelerations(path)
    worst = 0.0
    for k, ak in zip(idx, a):
        worst = max(worst, float(np.max(np.abs(ak - geodesic_acceleration(g, path.points[k], path.velocities[k])))))
    return worst


# -- cone geodesics in closed form --------------------------------------------------


def radial_law(alpha0: float, r0: float, t):
    """r(t) = sqrt((alpha0 t + r0)^2 + (alpha0 - alpha0^2) r0^2 t^2)."""
    t = np.asarray(t, dtype=float)
    return np.sqrt((alpha0 * t + r0) ** 2 + (alpha0 - alpha0**2) * r0**2 * t**2)


def reparametrization(alpha0: float, r0: float, t):
    """Parameter f(t) of the base geodesic traced by the projection (arctan or artanh branch)."""
    t = np.asarray(t, dtype=float)
    k = alpha0 - alpha0**2
    if abs(k) < 1e-12:
        raise BranchUndefined(f"alpha0 = {alpha0} makes the reparametrization degenerate")
    if k > 0:
        return np.arctan(np.sqrt(k) * r0 * t / (alpha0 * t + r0)) / np.sqrt(k)
    return np.arctanh(np.sqrt(-k) * r0 * t / (alpha0 * t + r0)) / np.sqrt(-k)


def cone_radial_law(alpha0: float, r0: float, t, with_f: bool = True):
    """(r(t), f(t)); f is None when ``with_f`` is False.  BranchUndefined for alpha0 in {0, 1}."""
    if r0 <= 0:
        raise ValueError("r0 must be positive")
    r = radial_law(alpha0, r0, t)
    return r, (reparametrization(alpha0, r0, t) if with_f else None)


@dataclass
class ConeGeodesicCheck:
    radial: float  # sup |r - r_closed|
    A_closed: float = float("nan")  # sup |A o Gamma - r0^2 alpha0 (1 - t)^2|
    A_end: float = float("nan")  # |A o Gamma(1)|
    A_second: float = float("nan")  # sup |(A o Gamma)'' - 2 r0^2 alpha0|
    reparam: float = float("nan")  # sup |pi(Gamma(t)) - c(f(t))|
    path: GeodesicPath | None = field(default=None, repr=False)

    @property
    def worst(self) -> float:
        return float(np.nanmax([self.radial, self.A_closed, self.A_end, self.A_second, self.reparam]))


def cone_geodesic_vs_closed_form(
    solution, p0, r0: float, t_span=(0.0, 0.9), mode: str = "descent", step: float = 1e-2
) -> ConeGeodesicCheck:
    """Integrate a cone geodesic numerically and compare with the closed forms.

    ``mode="descent"`` starts along -r0 Y(r0, p0); then r(t) = r0 radial_law(alpha0, 1, -t)
    and A o Gamma(t) = r0^2 alpha0 (1 - t)^2, which vanishes at t = 1.
    ``mode="lift"`` starts with coordinate velocity (alpha0, grad alpha / 2); then r(t) is
    radial_law(alpha0, r0, t) and the projection follows the base geodesic with initial
    velocity grad alpha / 2 at parameter f(t).
    """
    if solution.case_tag != "projector":
        raise ValueError("the closed forms hold in the projector case")
    cone: ConeSpace = solution.cone
    g = cone.base
    m0 = as_coords(p0)
    x0 = np.concatenate([[r0], m0])
    alpha0 = float(solution.alpha.values(m0))
    if mode == "descent":
        v0 = -r0 * Y_field(cone, solution.T, x0)
    elif mode == "lift":
        v0 = np.concatenate([[alpha0], 0.5 * gradient(g, solution.alpha, m0)])
    else:
        raise ValueError("mode must be 'descent' or 'lift'")
    path = integrate_geodesic(cone.cone_metric, x0, v0, t_span, step)
    t = path.params
    r = path.points[:, 0]
    out = ConeGeodesicCheck(0.0, path=path)
    if mode == "descent":
        out.radial = float(np.max(np.abs(r - r0 * radial_law(alpha0, 1.0, -t))))
        A = np.array([r_k**2 * float(solution.alpha.values(x[1:])) for r_k, x in zip(r, path.points)])
        out.A_closed = float(np.max(np.abs(A - r0**2 * alpha0 * (1 - t) ** 2)))
        if abs(t[-1] - 1.0) < 1e-12:
            out.A_end = abs(float(A[-1]))
        h = path.step
        A2 = (-A[4:] + 16 * A[3:-1] - 30 * A[2:-2] + 16 * A[1:-3] - A[:-4]) / (12 * h * h)
        out.A_second = float(np.max(np.abs(A2 - 2 * r0**2 * alpha0))) if len(A2) else float("nan")
    else:
        out.radial = float(np.max(np.abs(r - radial_law(alpha0, r0, t))))
        f = reparametrization(alpha0, r0, t)
        base = integrate_geodesic(g, m0, v0[1:], (0.0, float(np.max(f)) + step), step / 4)
        spline = CubicHermiteSpline(base.params, base.points, base.velocities, axis=0)
        out.reparam = float(np.max(np.abs(spline(f) - path.points[:, 1:])))
    return out


# -- warped products -----------------------------------------------------------------


def warped_geodesic_residual(instance, path: GeodesicPath) -> float:
    """Residual of the warped-product geodesic equations along a path of the hyperboloid chart.

    With g = g_B + f^2 h, f = sqrt(1 + |y|^2):
        D^B_{y'} y' = h(z', z') f grad_B f,   D^N_{z'} z' = -2 (f o y)' / f z'.
    Accelerations come from finite differences of the stored velocities.
    """
    if instance.extra.get("chart") != "hyperboloid":
        raise ValueError("warped_geodesic_residual expects the hyperboloid chart")
    m = instance.extra["base_dim"]
    fiber: MetricField = instance.extra["fiber"]
    idx, acc = fd_accelerations(path)
    worst = 0.0
    for k, a in zip(idx, acc):
        x = path.points[k]
        v = path.velocities[k]
        y, z = x[:m], x[m:]
        dy, dz = v[:m], v[m:]
        q = 1.0 + y @ y
        f = np.sqrt(q)
        gB = -(np.eye(m) - np.outer(y, y) / q)
        GB = christoffel_jet(_hyperbolic_base_jet(y)).value
        grad_f = np.linalg.solve(gB, y / f)
        h = fiber.values(z)
        lhs1 = a[:m] + np.einsum("kij,i,j->k", GB, dy, dy)
        rhs1 = (dz @ h @ dz) * f * grad_f
        GN = christoffel_jet(fiber.at(z, 1)).value
        df = (y @ dy) / f
        lhs2 = a[m:] + np.einsum("kij,i,j->k", GN, dz, dz)
        rhs2 = -2.0 * df / f * dz
        worst = max(worst, float(np.max(np.abs(lhs1 - rhs1))), float(np.max(np.abs(lhs2 - rhs2))))
    return worst


def _hyperbolic_base_jet(y: np.ndarray):
    c = J.seed(y, 1)
    q = 1.0 + sum(ci * ci for ci in c)
    return J.jarray([[(ci * cj) / q - (1.0 if i == j else 0.0) for j, cj in enumerate(c)] for i, ci in enumerate(c)])


# -- projective partners ---------------------------------------------------------------


@dataclass
class ProjectivePair:
    g: MetricField
    g_prime: MetricField
    T: SymTensorField  # a T + b g-hat on the cone
    rho: ScalarField  # sqrt(alpha') r on the cone
    alpha_prime: ScalarField
    shift: tuple = (1.0, 0.0)

    def reassembly_residual(self, cone: ConeSpace, points) -> float:
        """sup |T - (d rho^2 + rho^2 g')| on cone points."""
        worst = 0.0
        for p in points:
            x = as_coords(p)
            rho = self.rho.at(x, 1)
            gp = self.g_prime.values(x[1:])
            model = np.outer(rho.grad, rho.grad)
            model[1:, 1:] += float(rho.value) ** 2 * gp
            worst = max(worst, float(np.max(np.abs(self.T.values(x) - model))))
        return worst


def projective_partner(cone: ConeSpace, alpha: ScalarField, a: float, b: float, points=None, name: str = "") -> ProjectivePair:
    """Partner metric from the parallel tensor a T + b g-hat, with T built from ``alpha``.

    Writing alpha' = a alpha + b, the partner is
        g' = (1/alpha') [a (g alpha + DD alpha / 2) + b g - a^2 d alpha d alpha / (4 alpha')].
    Raises InadmissibleShift when alpha' <= 0 or the tensors degenerate on ``points``.
    """
    g = cone.base
    chart = g.chart
    T0 = tensor_from_alpha(cone, alpha)

    def T_eval(x, order):
        return T0.at(x, order) * a + cone.cone_metric.at(x, order) * b

    T = SymTensorField(cone.chart, T_eval, name=f"{a}T+{b}g", order_loss=T0.order_loss)

    def ap_eval(x, order):
        return alpha.at(x, order) * a + b

    alpha_p = ScalarField(chart, ap_eval, name=f"{a}alpha+{b}", order_loss=alpha.order_loss)

    def gp_eval(x, order):
        gj = g.at(x, order + 1)
        aj = alpha.at(x, order + 2)
        dd = covariant_hessian_jet(gj, aj)
        a0 = aj.truncate(order)
        da = aj.d().truncate(order)
        ap = a0 * a + b
        big = (gj.truncate(order) * a0 + dd * 0.5) * a + gj.truncate(order) * b
        outer = J.einsum("i,j->ij", da, da) * (a * a * 0.25)
        return (big - outer / ap) / ap

    loss = max(alpha.order_loss + 2, g.order_loss + 1)
    probe = points[0] if points else chart.sample(1, seed=1, boundary=False)[0]
    probe = as_coords(probe)
    if len(probe) == cone.dim:
        probe = probe[1:]
    sig = signature_of(gp_eval(probe, 0).value)
    g_prime = MetricField(chart, gp_eval, sig, name=name or f"partner({a},{b})", order_loss=loss)

    def rho_eval(x, order):
        r = J.seed_coordinate(0, x, x.size, order)
        ap = J.embed(alpha_p.at(x[1:], order), x.size, range(1, x.size))
        return J.sqrt(ap) * r

    rho = ScalarField(cone.chart, rho_eval, name="rho", order_loss=alpha.order_loss)
    pair = ProjectivePair(g, g_prime, T, rho, alpha_p, (a, b))
    for p in points if points is not None else chart.sample(20, seed=11):
        x = as_coords(p)
        xb = x[1:] if len(x) == cone.dim else x
        if float(alpha_p.values(xb)) <= 0:
            raise InadmissibleShift(f"alpha' = {float(alpha_p.values(xb)):.3e} <= 0 at {xb}")
        try:
            g_prime.check_point(xb, det_threshold=1e-10)
        except DegenerateMetric as exc:
            raise InadmissibleShift(str(exc)) from exc
    return pair


def pregeodesic_residual(g: MetricField, path: GeodesicPath, accelerations: np.ndarray | None = None) -> float:
    """sup over nodes of |a_perp|, where a = x'' + Gamma(x', x') and perp is Euclidean-orthogonal to x'.

    Uses ``accelerations`` (coordinate second derivatives) when given, otherwise the stored ones.
    """
    acc = path.accelerations if accelerations is None else accelerations
    worst = 0.0
    for x, v, xdd in zip(path.points, path.velocities, acc):
        a = xdd - geodesic_acceleration(g, x, v)
        nv = np.linalg.norm(v)
        if nv < 1e-12:
            continue
        u = v / nv
        worst = max(worst, float(np.linalg.norm(a - (a @ u) * u)))
    return worst


def pregeodesic_check(g: MetricField, path: GeodesicPath) -> float:
    return pregeodesic_residual(g, path)


def projected_cone_geodesics(
    cone: ConeSpace, n: int = 20, seed: int = 42, t_max: float = 0.5, step: float = 1e-2, speed: float = 0.5, full: bool = False
) -> list[GeodesicPath]:
    """Seeded cone geodesics, projected to the base; starts that leave the chart are redrawn.

    With ``full=True`` the unprojected cone paths are returned instead (for energy checks).
    """
    rng = np.random.default_rng(seed)
    starts = cone.chart.sample(4 * n, seed=seed, boundary=False)
    out = []
    for x0 in starts:
        if len(out) == n:
            break
        v0 = rng.normal(size=cone.dim) * speed
        try:
            path = integrate_geodesic(cone.cone_metric, x0, v0, (0.0, t_max), step)
        except LeftChart:
            continue
        out.append(path if full else path.project(slice(1, None)))
    return out


@dataclass
class AffineCheck:
    max_difference: float  # max |Gamma(g) - Gamma(g')|
    psi_fit_residual: float  # diagnostic: distance of the difference from projective form
    psi_vs_volume: float  # diagnostic: |psi - d log(det g'/det g) / (2(n+1))|


def affine_inequivalence_check(g: MetricField, g_prime: MetricField, points) -> AffineCheck:
    worst = fit_worst = vol_worst = 0.0
    for p in points:
        x = as_coords(p)
        gj, gpj = g.at(x, 1), g_prime.at(x, 1)
        D = christoffel_jet(gpj).value - christoffel_jet(gj).value
        n = D.shape[0]
        worst = max(worst, float(np.max(np.abs(D))))
        eye = np.eye(n)
        # design matrix: D^k_ij = delta^k_i psi_j + delta^k_j psi_i
        M = (np.einsum("ki,jl->kijl", eye, eye) + np.einsum("kj,il->kijl", eye, eye)).reshape(n**3, n)
        psi, *_ = np.linalg.lstsq(M, D.reshape(-1), rcond=None)
        fit_worst = max(fit_worst, float(np.max(np.abs(M @ psi - D.reshape(-1)))))
        # d log|det| = tr(g^{-1} dg)
        dlog = np.einsum("ij,jik->k", np.linalg.inv(gpj.value), gpj.grad) - np.einsum("ij,jik->k", np.linalg.inv(gj.value), gj.grad)
        vol_worst = max(vol_worst, float(np.max(np.abs(psi - dlog / (2 * (n + 1))))))
    return AffineCheck(worst, fit_worst, vol_worst)


def mobility_rank(metrics: list[MetricField], p, rtol: float = 1e-8) -> tuple[int, np.ndarray]:
    """Numerical rank of {g_i(p)} as vectors in the space of symmetric tensors, with singular values."""
    x = as_coords(p)
    M = np.array([m.values(x).ravel() for m in metrics])
    s = np.linalg.svd(M, compute_uv=False)
    return int(np.sum(s > rtol * s[0])), s
