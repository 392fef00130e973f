"""Command line harness: run verification suites, write report.json, paths and profile series."""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import platform
import sys
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from . import families as F
from . import geodesics as Gd
from .cone import build_cone
from .errors import ConelabError, ConfigError
from .suites import SUITES, RunConfig, build_family, run_checks, unit_line


def environment_stamp() -> dict:
    return {
        "conelab": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "platform": platform.system(),
    }


def build_report(config: RunConfig) -> tuple[dict, dict]:
    rec = run_checks(config)
    records = [r.as_dict() for r in rec.records]
    report = {
        "suite": config.suite,
        "all_pass": all(r["pass"] for r in records),
        "n_checks": len(records),
        "n_failed": sum(not r["pass"] for r in records),
        "checks": records,
        "config": config.as_dict(),
        "environment": environment_stamp(),
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }
    return report, rec.artifacts


def _fmt(v: float) -> str:
    return repr(float(v))


def export_path(path: Gd.GeodesicPath, file) -> None:
    """CSV with columns t, x_i, v_i, energy at round-trip precision; an empty path gives a header only."""
    d = path.points.shape[1]
    header = ["t"] + [f"x_{i}" for i in range(d)] + [f"v_{i}" for i in range(d)] + ["energy"]
    own = isinstance(file, (str, Path))
    fh = open(file, "w", newline="") if own else file
    try:
        w = csv.writer(fh)
        w.writerow(header)
        for k in range(len(path)):
            row = [path.params[k], *path.points[k], *path.velocities[k], path.energies[k]]
            w.writerow([_fmt(v) for v in row])
    finally:
        if own:
            fh.close()


def read_path(file) -> dict[str, np.ndarray]:
    with open(file, newline="") as fh:
        rows = list(csv.reader(fh))
    header, data = rows[0], np.array(rows[1:], dtype=float).reshape(-1, len(rows[0]))
    return {name: data[:, i] for i, name in enumerate(header)}


def write_series(series: np.ndarray, file, columns=("s", "alpha", "profile")) -> None:
    np.savetxt(file, series, fmt="%.17g", header=" ".join(columns))


def write_outputs(report: dict, artifacts: dict, out: Path) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    target = out / "report.json"
    target.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    for name, obj in sorted(artifacts.items()):
        if isinstance(obj, Gd.GeodesicPath):
            export_path(obj, out / f"{name}.csv")
        else:
            write_series(np.asarray(obj), out / f"{name}.dat")
    return target


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return data


def run_suite(config: RunConfig, out: str | Path | None = None) -> dict:
    report, artifacts = build_report(config)
    write_outputs(report, artifacts, Path(out or config.output_dir))
    return report


# -- export-geodesic -------------------------------------------------------------------


def _named_metric(name: str):
    """Metric by instance name: a family fixture, pseudosphere:p,q, warped, or any of these prefixed cone:."""
    if name.startswith("cone:"):
        return build_cone(_named_metric(name[5:])).cone_metric
    if name.startswith("pseudosphere:"):
        p, q = (int(v) for v in name.split(":", 1)[1].split(","))
        return F.build_pseudosphere(p, q).metric
    if name == "warped":
        return F.build_warped_hyperbolic(2, unit_line(), "hyperboloid").g
    return build_family(name).g


def _vector(text: str) -> np.ndarray:
    return np.array([float(v) for v in text.split(",")])


def export_geodesic(args) -> int:
    g = _named_metric(args.instance)
    x0, v0 = _vector(args.p0), _vector(args.v0)
    if x0.size != g.dim or v0.size != g.dim:
        raise ConfigError(f"{args.instance} has dimension {g.dim}")
    try:
        path = Gd.integrate_geodesic(g, x0, v0, (0.0, args.t_end), args.step)
    except ConelabError as exc:
        print(f"integration failed: {exc}", file=sys.stderr)
        path = Gd.GeodesicPath.empty(g.dim, g.name)
    export_path(path, args.out)
    print(f"wrote {len(path)} rows to {args.out}")
    return 0 if len(path) else 1


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="conelab", description="Numerical checks for cones, the Obata equation and projective equivalence.")
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run verification suites and write report.json")
    run.add_argument("--config", help="JSON config file")
    run.add_argument("--suite", choices=("all",) + SUITES)
    run.add_argument("--seed", type=int)
    run.add_argument("--out", help="output directory")
    exp = sub.add_parser("export-geodesic", help="integrate one geodesic and write it as CSV")
    exp.add_argument("--instance", required=True, help="family name, pseudosphere:p,q, warped, or cone:<name>")
    exp.add_argument("--p0", required=True, help="start point, comma separated")
    exp.add_argument("--v0", required=True, help="start velocity, comma separated")
    exp.add_argument("--t-end", type=float, default=1.0)
    exp.add_argument("--step", type=float, default=1e-2)
    exp.add_argument("--out", required=True)
    return ap


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        if args.command == "export-geodesic":
            return export_geodesic(args)
        data = load_config(args.config)
        for key in ("suite", "seed"):
            if getattr(args, key) is not None:
                data[key] = getattr(args, key)
        if args.out is not None:
            data["output_dir"] = args.out
        config = RunConfig.from_dict(data)
        report = run_suite(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    for r in report["checks"]:
        status = "PASS" if r["pass"] else "FAIL"
        print(f"{status} {r['name']} residual={r['residual']} tol={r['tolerance']} ({r['comparison']})")
    print(f"{report['n_checks'] - report['n_failed']}/{report['n_checks']} checks passed; report in {config.output_dir}")
    return 0 if report["all_pass"] else 1


if __name__ == "__main__":
    sys.exit(main())
