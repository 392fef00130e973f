"""Verification suites: each produces flat check records for the report."""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import asdict, dataclass, field

import numpy as np

from . import cone as C
from . import families as F
from . import geodesics as Gd
from . import obata as O
from .errors import ConfigError, ConelabError
from .geometry import Chart, constant_metric, coordinate_sectional_curvatures

SUITES = ("obata", "parallel", "family", "geodesic", "projective", "pseudosphere")

DEFAULT_TOLERANCES = {
    "obata.pseudosphere": 1e-9,
    "obata.family": 1e-8,
    "obata.negative": 1e-2,
    "obata.shift": 1e-12,
    "obata.linearity": 1e-10,
    "parallel.residual": 1e-8,
    "parallel.negative": 1e-2,
    "parallel.identities": 1e-8,
    "parallel.xx_table": 1e-9,
    "parallel.curvature_relation": 1e-8,
    "parallel.flat_cone": 1e-9,
    "parallel.base_curvature": 1e-8,
    "family.slice": 1e-9,
    "family.slice_parallel": 1e-8,
    "family.evolution": 1e-5,
    "family.profile": 1e-6,
    "family.profile_geodesic": 1e-6,
    "family.printed_alpha": 1e-2,
    "geodesic.closed_form": 1e-6,
    "geodesic.A_end": 1e-6,
    "geodesic.warped_special": 1e-5,
    "geodesic.warped_generic": 1e-4,
    "geodesic.energy": 1e-6,
    "geodesic.rk4_ratio": 0.2,
    "geodesic.great_circle": 1e-5,
    "projective.reassembly": 1e-9,
    "projective.pregeodesic": 1e-5,
    "projective.inequivalence": 1e-2,
    "projective.identity": 1e-10,
    "projective.psi_fit": 1e-6,
    "projective.mobility": 1e-6,
    "pseudosphere.obata": 1e-9,
    "pseudosphere.curvature": 1e-8,
    "pseudosphere.gradient": 1e-7,
    "pseudosphere.perturbed_obata": 1e-9,
    "pseudosphere.perturbed_curvature": 1e-3,
    "pseudosphere.amplitude_zero": 1e-12,
}


@dataclass
class CheckRecord:
    name: str
    paper_anchor: str
    residual: float | None
    tolerance: float
    comparison: str = "lt"  # "lt": pass iff residual < tol; "gt": pass iff residual > tol
    diagnostic: bool = False  # derived property, not a claim of the source
    error: str | None = None
    passed: bool = field(init=False)

    def __post_init__(self):
        r = self.residual
        if r is None or not math.isfinite(r):
            self.passed = False
        elif self.comparison == "lt":
            self.passed = r < self.tolerance
        else:
            self.passed = r > self.tolerance

    def as_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return d


@dataclass
class RunConfig:
    suite: str = "all"
    seed: int = 42
    n_points: int = 50
    output_dir: str = "conelab-out"
    families: list = field(default_factory=lambda: list(FAMILY_SPECS))
    pseudospheres: list = field(default_factory=lambda: [[2, 0], [2, 1], [1, 2]])
    perturbed: dict = field(default_factory=lambda: {"p": 2, "q": 1, "center": [0.0, 0.0], "radius": 0.5, "amplitude": 0.1})
    projective: list = field(
        default_factory=lambda: [
            {"name": "warped", "a": -0.5, "b": 1.0},
            {"name": "warped_split", "a": -0.5, "b": 1.0},
            {"name": "pseudosphere", "p": 2, "q": 1, "a": 1.0, "b": 2.0},
            {"name": "identity", "a": 0.0, "b": 1.0},
        ]
    )
    n_geodesics: int = 20
    tolerances: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.suite != "all" and self.suite not in SUITES:
            raise ConfigError(f"unknown suite {self.suite!r}; choose from {('all',) + SUITES}")
        if self.n_points < 1:
            raise ConfigError("n_points must be positive")
        for spec in self.families:
            _family_spec(spec)
        for p, q in self.pseudospheres:
            if p < 0 or q < 0 or p + q < 2:
                raise ConfigError(f"inadmissible pseudo-sphere dims ({p}, {q})")
        unknown = set(self.tolerances) - set(DEFAULT_TOLERANCES)
        if unknown:
            raise ConfigError(f"unknown tolerance keys {sorted(unknown)}")

    def tol(self, key: str) -> float:
        return float(self.tolerances.get(key, DEFAULT_TOLERANCES[key]))

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = set(cls.__dataclass_fields__)
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown config keys {sorted(extra)}")
        return cls(**data)

    def as_dict(self) -> dict:
        return asdict(self)


# -- instances ----------------------------------------------------------------------

# name -> case, base fixture, branch, alpha_sign, profile start (s0, base coordinates n0)
FAMILY_SPECS = {
    "nil_flat": {"case": "nilpotent", "base": "flat_plane_zero", "s0": -0.5},
    "nil_null": {"case": "nilpotent", "base": "null_plane", "s0": -0.5},
    "nil_null_neg": {"case": "nilpotent", "base": "null_plane", "alpha_sign": -1, "s0": 0.3},
    "complex_split": {"case": "complex", "base": "split_plane", "s0": -0.3},
    "trig_torus": {"case": "projector", "base": "flat_torus", "branch": "trig", "s0": 0.5},
    "trig_sphere": {"case": "projector", "base": "round_S2", "branch": "trig", "s0": 0.5, "n0": [1.2, 0.3]},
    "hyp_pos_torus": {"case": "projector", "base": "flat_torus_hyp", "branch": "hyp_pos", "s0": 0.5},
    "hyp_neg_torus": {"case": "projector", "base": "flat_torus_hyp", "branch": "hyp_neg", "s0": 0.9},
    "hyp_pos_full": {"case": "projector", "base": "flat_plane_full", "branch": "hyp_pos", "s0": 0.5},
}


def _family_spec(spec) -> dict:
    if isinstance(spec, str):
        if spec not in FAMILY_SPECS:
            raise ConfigError(f"unknown family instance {spec!r}")
        return dict(FAMILY_SPECS[spec], name=spec)
    spec = dict(spec)
    if spec.get("case") not in C.CASES:
        raise ConfigError(f"unknown case_tag {spec.get('case')!r}")
    if "name" not in spec or "base" not in spec:
        raise ConfigError("family specs need 'name' and 'base'")
    return spec


def build_family(spec) -> F.FamilyInstance:
    spec = _family_spec(spec)
    bases = F.base_fixtures()
    if spec["base"] not in bases:
        raise ConfigError(f"unknown base {spec['base']!r}")
    base = bases[spec["base"]]
    if base.case != spec["case"]:
        raise ConfigError(f"base {spec['base']} carries a {base.case} tensor, not {spec['case']}")
    if spec["case"] == "nilpotent":
        return F.build_nilpotent(base, float(spec.get("alpha_sign", 1.0)), name=spec["name"])
    if spec["case"] == "complex":
        return F.build_complex(base, name=spec["name"])
    return F.build_projector(base, spec.get("branch", "trig"), name=spec["name"])


def unit_line(length: float = 3.0):
    return constant_metric(Chart(1, ((-length, length),), chart_id="line"), [[1.0]], name="line")


# -- record helpers -------------------------------------------------------------------


class Recorder:
    def __init__(self, config: RunConfig):
        self.config = config
        self.records: list[CheckRecord] = []
        self.artifacts: dict[str, object] = {}  # name -> GeodesicPath or ndarray series

    def check(self, name: str, anchor: str, tol_key: str, fn: Callable[[], float], comparison: str = "lt", diagnostic: bool = False):
        tol = self.config.tol(tol_key)
        try:
            value = float(fn())
            rec = CheckRecord(name, anchor, value, tol, comparison, diagnostic)
        except (ConelabError, ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
            rec = CheckRecord(name, anchor, None, tol, comparison, diagnostic, error=f"{type(exc).__name__}: {exc}")
        self.records.append(rec)
        return rec


# -- suites --------------------------------------------------------------------------


def _points(chart, config):
    return chart.sample(config.n_points, config.seed)


def suite_obata(rec: Recorder):
    cfg = rec.config
    for p, q in cfg.pseudospheres:
        ps = F.build_pseudosphere(p, q)
        rec.check(f"obata/pseudosphere_{p}_{q}", "Obata equation for x1^2 on the pseudo-sphere", "obata.pseudosphere",
                  lambda: O.obata_residual(ps.metric, ps.alpha, _points(ps.metric.chart, cfg)).sup_residual)
    for spec in cfg.families:
        inst = build_family(spec)
        pts = _points(inst.g.chart, cfg)
        rec.check(f"obata/{inst.name}/alpha", "Obata equation for the family function alpha", "obata.family",
                  lambda: O.obata_residual(inst.g, inst.alpha, pts).sup_residual)
        for label, a in F.negative_control_alphas(inst).items():
            rec.check(f"obata/{inst.name}/negative_{label}", "Obata equation negative control", "obata.negative",
                      lambda a=a: O.obata_residual(inst.g, a, pts).sup_residual, "gt")
        shifted = F.ScalarField(inst.g.chart, lambda x, order: inst.alpha.at(x, order) + 3.5, name="alpha+k")
        rec.check(f"obata/{inst.name}/constant_shift", "Obata operator sees only the differential", "obata.shift",
                  lambda: max(float(np.max(np.abs(O.obata_tensor(inst.g, shifted, x) - O.obata_tensor(inst.g, inst.alpha, x)))) for x in pts[:10]),
                  diagnostic=True)
        s3 = F.negative_control_alphas(inst)["s^3"]
        total = F.ScalarField(inst.g.chart, lambda x, order: inst.alpha.at(x, order) + s3.at(x, order), name="sum")
        rec.check(f"obata/{inst.name}/linearity", "Obata operator is linear", "obata.linearity",
                  lambda: max(float(np.max(np.abs(O.obata_tensor(inst.g, total, x) - O.obata_tensor(inst.g, inst.alpha, x) - O.obata_tensor(inst.g, s3, x)))) for x in pts[:10]),
                  diagnostic=True)


def _cone_checks(rec: Recorder, label: str, g, alpha, case_tag: str, negative=None):
    cfg = rec.config
    sol = C.cone_solution(g, alpha, case_tag)
    pts = sol.cone.chart.sample(cfg.n_points, cfg.seed)
    rec.check(f"parallel/{label}/parallel_residual", "cone tensor built from alpha is parallel", "parallel.residual",
              lambda: C.parallel_residual(sol.cone, sol.T, pts))
    rec.check(f"parallel/{label}/hessian_identity", "cone Hessian of A equals 2T", "parallel.identities",
              lambda: C.hessian_identity_check(sol.cone, alpha, sol.T, pts))
    rec.check(f"parallel/{label}/gradient_relation", "gradients of alpha and A versus X and Y, pregeodesic laws", "parallel.identities",
              lambda: C.gradient_relation_check(sol.cone, alpha, sol.T, pts, case_tag).worst)
    rec.check(f"parallel/{label}/xx_table", "cone norm of X by case", "parallel.xx_table",
              lambda: C.xx_table_check(sol.cone, sol.T, case_tag, pts))
    rec.check(f"parallel/{label}/kernel_constancy", "A constant along the kernel of T", "parallel.identities",
              lambda: C.kernel_constancy_check(sol.cone, alpha, sol.T, pts)[0])
    rec.check(f"parallel/{label}/curvature_relation", "cone curvature relation", "parallel.curvature_relation",
              lambda: C.curvature_relation_residual(sol.cone, pts))
    rec.check(f"parallel/{label}/classification", "trichotomy of the parallel endomorphism", "parallel.identities",
              lambda: float(sum(sol.classify(x).kind != case_tag for x in pts)))
    if negative is not None:
        T_bad = C.tensor_from_alpha(sol.cone, negative)
        rec.check(f"parallel/{label}/negative_s3", "parallel tensor negative control", "parallel.negative",
                  lambda: C.parallel_residual(sol.cone, T_bad, pts), "gt")
    return sol, pts


def suite_parallel(rec: Recorder):
    cfg = rec.config
    for spec in cfg.families:
        inst = build_family(spec)
        _cone_checks(rec, inst.name, inst.g, inst.alpha, inst.case_tag, F.negative_control_alphas(inst)["s^3"])
    sphere = F.round_sphere_base().N_metric
    cone = C.build_cone(sphere)
    rec.check("parallel/round_S2/flat_cone", "cone over the round sphere is flat", "parallel.flat_cone",
              lambda: C.max_riemann(cone.cone_metric, _points(cone.chart, cfg)))
    trig = build_family("trig_torus")
    tcone = C.build_cone(trig.g)
    rec.check("parallel/trig_torus/flat_cone", "cone over a curvature-one base is flat", "parallel.flat_cone",
              lambda: C.max_riemann(tcone.cone_metric, _points(tcone.chart, cfg)))
    rec.check("parallel/trig_torus/base_curvature", "trig projector base has curvature one", "parallel.base_curvature",
              lambda: max(abs(k - 1) for x in _points(trig.g.chart, cfg) for k in coordinate_sectional_curvatures(trig.g, x).values()))


def suite_family(rec: Recorder):
    cfg = rec.config
    for spec in cfg.families:
        spec = _family_spec(spec)
        inst = build_family(spec)
        pts = _points(inst.g.chart, cfg)
        sol = inst.cone_solution()
        rec.check(f"family/{inst.name}/parallel_residual", "cone tensor built from the family alpha is parallel", "parallel.residual",
                  lambda: C.parallel_residual(sol.cone, sol.T, sol.cone.chart.sample(cfg.n_points, cfg.seed)))
        rec.check(f"family/{inst.name}/slice_tensor", "slice tensor formula", "family.slice",
                  lambda: F.slice_formula_residual(inst, pts))
        rec.check(f"family/{inst.name}/slice_parallel", "slice tensor parallel for the slice metric", "family.slice_parallel",
                  lambda: F.slice_parallel_residual(inst, pts))
        ev = F.evolution_residual(inst, F.evolution_sample(inst, 12, cfg.seed))
        rec.check(f"family/{inst.name}/evolution_metric", "slice metric evolution along rX", "family.evolution", lambda: ev.metric)
        rec.check(f"family/{inst.name}/evolution_tensor", "slice tensor evolution along rX", "family.evolution", lambda: ev.tensor)
        if "s0" in spec:
            n0 = spec.get("n0", [0.1 * (i + 1) for i in range(inst.g.dim - 1)])
            p0 = np.array([spec["s0"], *n0])
            holder = {}

            def profile():
                holder["r"] = O.profile_check(inst.g, inst.alpha, inst.case_tag, p0, 0.5)
                rec.artifacts[f"profile_{inst.name}"] = holder["r"].series()
                return holder["r"].deviation

            rec.check(f"family/{inst.name}/profile", "closed-form alpha along the unit gradient flow", "family.profile", profile)
            rec.check(f"family/{inst.name}/profile_geodesic", "unit gradient flow is geodesic", "family.profile_geodesic",
                      lambda: holder["r"].geodesic_residual if "r" in holder else float("nan"))
        for label, a in F.printed_alpha_candidates(inst).items():
            rec.check(f"family/{inst.name}/printed_alpha_{label}", "alternative alpha formula is not a solution", "family.printed_alpha",
                      lambda a=a: O.obata_residual(inst.g, a, pts).sup_residual, "gt", diagnostic=True)


def suite_geodesic(rec: Recorder):
    trig = build_family("trig_torus")
    sol = trig.cone_solution()
    lift = {}

    def lift_check():
        lift["r"] = Gd.cone_geodesic_vs_closed_form(sol, [np.pi / 4, 0.1, 0.2], 1.3, (0.0, 0.9), "lift")
        rec.artifacts["cone_geodesic_lift"] = lift["r"].path
        return lift["r"].worst

    rec.check("geodesic/cone_lift/closed_form", "radial law and reparametrization of cone geodesics", "geodesic.closed_form", lift_check)
    ps = F.build_pseudosphere(2, 0)
    sol2 = C.cone_solution(ps.metric, ps.alpha, "projector")
    desc = {}

    def desc_check():
        desc["r"] = Gd.cone_geodesic_vs_closed_form(sol2, [0.3, 0.2], 1.2, (0.0, 1.0), "descent")
        rec.artifacts["cone_geodesic_descent"] = desc["r"].path
        return max(desc["r"].radial, desc["r"].A_closed, desc["r"].A_second)

    rec.check("geodesic/cone_descent/closed_form", "descent geodesic along -rY, A along it", "geodesic.closed_form", desc_check)
    rec.check("geodesic/cone_descent/A_end", "A vanishes at the end of the descent geodesic", "geodesic.A_end",
              lambda: desc["r"].A_end if "r" in desc else float("nan"))
    # warped product geodesics
    w = F.build_warped_hyperbolic(2, unit_line(), "hyperboloid")
    starts = {
        "fiber_constant": ([0.3, -0.2, 0.0], [0.4, 0.3, 0.0], "geodesic.warped_special"),
        "origin_fiber": ([0.0, 0.0, 0.1], [0.0, 0.0, 0.7], "geodesic.warped_special"),
        "generic": ([0.2, 0.1, -0.3], [0.3, -0.4, 0.5], "geodesic.warped_generic"),
    }
    for label, (x0, v0, key) in starts.items():
        holder = {}

        def run(x0=x0, v0=v0, holder=holder, label=label):
            holder["p"] = Gd.integrate_geodesic(w.g, x0, v0, (0.0, 1.0), 1e-3)
            rec.artifacts[f"warped_{label}"] = holder["p"]
            return Gd.warped_geodesic_residual(w, holder["p"])

        rec.check(f"geodesic/warped_{label}/equations", "warped product geodesic equations", key, run)
        rec.check(f"geodesic/warped_{label}/energy", "energy conservation", "geodesic.energy",
                  lambda holder=holder: holder["p"].energy_drift() if "p" in holder else float("nan"))
    for label, holder in (("cone_lift", lift), ("cone_descent", desc)):
        rec.check(f"geodesic/{label}/energy", "energy conservation", "geodesic.energy",
                  lambda holder=holder: holder["r"].path.energy_drift() if "r" in holder else float("nan"))
    # RK4 order on a tilted great circle of the round sphere
    rec.check("geodesic/great_circle/closure", "great circle returns to its start", "geodesic.great_circle",
              lambda: great_circle_closure()[0])
    rec.check("geodesic/great_circle/rk4_ratio", "RK4 fourth-order convergence (ratio 16)", "geodesic.rk4_ratio",
              lambda: abs(rk4_ratio() / 16.0 - 1.0), diagnostic=True)


def _sphere_metric_wide():
    from .geometry import metric_from_formula
    from . import jets as J

    chart = Chart(2, ((0.3, np.pi - 0.3), (-10.0, 10.0)), chart_id="sphere_wide")
    return metric_from_formula(chart, lambda c: [[1.0, 0.0], [0.0, J.sin(c[0]) ** 2]], (2, 0), name="round_S2")


def _great_circle_start(tilt: float = 0.5):
    # start on the equator heading north-east: unit speed, (theta', phi') = (-sin tilt, cos tilt)
    return np.array([np.pi / 2, 0.0]), np.array([-np.sin(tilt), np.cos(tilt)])


def great_circle_closure(step: float = 1e-2):
    g = _sphere_metric_wide()
    x0, v0 = _great_circle_start()
    path = Gd.integrate_geodesic(g, x0, v0, (0.0, 2 * np.pi), step)
    return float(np.max(np.abs(path.points[-1] - np.array([np.pi / 2, 2 * np.pi])))), path


def rk4_ratio(t_end: float = 2.0) -> float:
    g = _sphere_metric_wide()
    x0, v0 = _great_circle_start()
    ref = Gd.integrate_geodesic(g, x0, v0, (0.0, t_end), 1e-4).points[-1]
    e1 = np.linalg.norm(Gd.integrate_geodesic(g, x0, v0, (0.0, t_end), 1e-2).points[-1] - ref)
    e2 = np.linalg.norm(Gd.integrate_geodesic(g, x0, v0, (0.0, t_end), 5e-3).points[-1] - ref)
    return float(e1 / e2)


def projective_setup(spec: dict):
    name = spec["name"]
    if name in ("warped", "warped_split", "identity"):
        w = F.build_warped_hyperbolic(2, unit_line(), "hyperboloid")
        cone = C.build_cone(w.g)
        alpha = F.warped_alpha_partner(w) if name == "warped_split" else w.alpha
    elif name == "pseudosphere":
        ps = F.build_pseudosphere(int(spec.get("p", 2)), int(spec.get("q", 1)))
        cone = C.build_cone(ps.metric)
        alpha = ps.alpha
    else:
        raise ConfigError(f"unknown projective pair {name!r}")
    return cone, alpha, Gd.projective_partner(cone, alpha, float(spec["a"]), float(spec["b"]), name=f"partner_{name}")


def suite_projective(rec: Recorder):
    cfg = rec.config
    partners = {}
    for spec in cfg.projective:
        name = spec["name"]
        try:
            cone, alpha, pair = projective_setup(spec)
        except ConelabError as exc:
            rec.check(f"projective/{name}/construction", "partner metric from a shifted parallel tensor", "projective.reassembly",
                      lambda exc=exc: (_ for _ in ()).throw(exc))
            continue
        partners[name] = pair
        cpts = _points(cone.chart, cfg)
        bpts = _points(pair.g.chart, cfg)
        rec.check(f"projective/{name}/reassembly", "shifted tensor is a cone metric over the partner", "projective.reassembly",
                  lambda: pair.reassembly_residual(cone, cpts))
        full = Gd.projected_cone_geodesics(cone, cfg.n_geodesics, cfg.seed, full=True)
        paths = [p.project(slice(1, None)) for p in full]
        rec.check(f"projective/{name}/cone_energy", "energy conservation", "geodesic.energy",
                  lambda: max(p.energy_drift() for p in full) if full else float("nan"))
        if paths:
            rec.artifacts[f"projected_{name}"] = paths[0]
        enough = len(paths) >= cfg.n_geodesics
        rec.check(f"projective/{name}/pregeodesic_g", "projected cone geodesics are pregeodesics of g", "projective.pregeodesic",
                  lambda: max(Gd.pregeodesic_check(pair.g, p) for p in paths) if enough else float("nan"))
        rec.check(f"projective/{name}/pregeodesic_g_prime", "projected cone geodesics are pregeodesics of the partner", "projective.pregeodesic",
                  lambda: max(Gd.pregeodesic_check(pair.g_prime, p) for p in paths) if enough else float("nan"))
        aff = Gd.affine_inequivalence_check(pair.g, pair.g_prime, bpts)
        if name == "identity":
            rec.check(f"projective/{name}/connection_difference", "identity partner has the same connection", "projective.identity",
                      lambda: aff.max_difference)
        else:
            rec.check(f"projective/{name}/connection_difference", "partner is not affinely equivalent", "projective.inequivalence",
                      lambda: aff.max_difference, "gt")
        rec.check(f"projective/{name}/psi_fit", "connection difference has projective form", "projective.psi_fit",
                  lambda: aff.psi_fit_residual, diagnostic=True)
    if "warped" in partners and "warped_split" in partners:
        g = partners["warped"].g
        x = _points(g.chart, cfg)[0]
        rec.check("projective/mobility/rank", "three linearly independent projectively equivalent metrics", "projective.mobility",
                  lambda: float(Gd.mobility_rank([g, partners["warped"].g_prime, partners["warped_split"].g_prime], x)[1][-1]), "gt")
        rec.check("projective/mobility/partners_distinct", "the two partners are not affinely equivalent", "projective.inequivalence",
                  lambda: Gd.affine_inequivalence_check(partners["warped"].g_prime, partners["warped_split"].g_prime, _points(g.chart, cfg)).max_difference, "gt")


def suite_pseudosphere(rec: Recorder):
    cfg = rec.config
    for p, q in cfg.pseudospheres:
        ps = F.build_pseudosphere(p, q)
        pts = _points(ps.metric.chart, cfg)
        rec.check(f"pseudosphere/{p}_{q}/obata", "x1^2 solves the Obata equation", "pseudosphere.obata",
                  lambda: O.obata_residual(ps.metric, ps.alpha, pts).sup_residual)
        rec.check(f"pseudosphere/{p}_{q}/curvature_one", "pseudo-sphere has curvature one", "pseudosphere.curvature",
                  lambda: max(abs(k - 1) for x in pts for k in coordinate_sectional_curvatures(ps.metric, x).values()))
        rec.check(f"pseudosphere/{p}_{q}/gradient", "gradient of x1^2 on the pseudo-sphere", "pseudosphere.gradient",
                  lambda: F.pseudosphere_gradient_residual(ps, pts))
        _cone_checks(rec, f"pseudosphere_{p}_{q}", ps.metric, ps.alpha, ps.case_tag)
    pert = dict(cfg.perturbed)
    p, q = int(pert.pop("p")), int(pert.pop("q"))
    bump = F.Bump(center=tuple(pert.get("center", (0.0,) * (p + q - 1))), radius=float(pert.get("radius", 0.5)),
                  amplitude=float(pert.get("amplitude", 0.1)))
    try:
        ps = F.build_perturbed_pseudosphere(p, q, bump)
    except ConelabError as exc:
        rec.check(f"pseudosphere/perturbed_{p}_{q}/construction", "compactly supported perturbation", "pseudosphere.perturbed_obata",
                  lambda exc=exc: (_ for _ in ()).throw(exc))
        return
    pts = _points(ps.metric.chart, cfg)
    rec.check(f"pseudosphere/perturbed_{p}_{q}/obata", "alpha still solves the Obata equation after perturbation", "pseudosphere.perturbed_obata",
              lambda: O.obata_residual(ps.metric, ps.alpha, pts).sup_residual)
    inside = [x for x in ps.metric.chart.sample(4 * cfg.n_points, cfg.seed) if bump.inside(x[1:])]
    rec.check(f"pseudosphere/perturbed_{p}_{q}/curvature_deviation", "perturbed metric has non-constant curvature", "pseudosphere.perturbed_curvature",
              lambda: max(abs(k - 1) for x in inside for k in coordinate_sectional_curvatures(ps.metric, x).values()) if inside else float("nan"), "gt")
    ref = F.build_pseudosphere(p, q)
    flat = F.build_perturbed_pseudosphere(p, q, F.Bump(bump.center, bump.radius, 0.0))
    near = [x for x in flat.metric.chart.sample(cfg.n_points, cfg.seed) if abs(x[1:]).max() < 0.5]
    rec.check(f"pseudosphere/perturbed_{p}_{q}/amplitude_zero", "unperturbed horospherical metric equals the graph-chart metric", "pseudosphere.amplitude_zero",
              lambda: max(float(np.max(np.abs(flat.metric.values(x) - F.horospherical_pullback_values(ref, x)))) for x in near))


SUITE_FUNCTIONS = {
    "obata": suite_obata,
    "parallel": suite_parallel,
    "family": suite_family,
    "geodesic": suite_geodesic,
    "projective": suite_projective,
    "pseudosphere": suite_pseudosphere,
}


def run_checks(config: RunConfig) -> Recorder:
    rec = Recorder(config)
    names = SUITES if config.suite == "all" else (config.suite,)
    for name in names:
        try:
            SUITE_FUNCTIONS[name](rec)
        except ConfigError:
            raise
        except (ConelabError, ArithmeticError, ValueError) as exc:
            rec.records.append(CheckRecord(f"{name}/setup", "suite setup", None, 0.0, error=f"{type(exc).__name__}: {exc}"))
    rec.records.sort(key=lambda r: r.name)
    return rec
