import json

import numpy as np
import pytest

from conelab import cli
from conelab.errors import ConfigError
from conelab.geodesics import GeodesicPath, integrate_geodesic, radial_law
from conelab.geometry import Chart, constant_metric
from conelab.suites import RunConfig, run_checks


def _strip(report):
    return {k: v for k, v in report.items() if k != "timestamp"}


def _small(tmp_path, **kw):
    cfg = {"suite": "obata", "families": ["nil_flat", "trig_torus"], "pseudospheres": [[2, 0]], "n_points": 10}
    cfg.update(kw)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    return path


def test_run_writes_report_and_exit_code(tmp_path, capsys):
    cfg = _small(tmp_path)
    code = cli.main(["run", "--config", str(cfg), "--out", str(tmp_path / "out")])
    assert code == 0
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert report["all_pass"]
    names = [c["name"] for c in report["checks"]]
    assert names == sorted(names)
    assert all(c["paper_anchor"] for c in report["checks"])
    assert report["config"]["n_points"] == 10
    ps = [c for c in report["checks"] if c["name"] == "obata/pseudosphere_2_0"][0]
    assert ps["pass"] and ps["residual"] < 1e-9
    assert "PASS obata/pseudosphere_2_0" in capsys.readouterr().out


def test_report_deterministic(tmp_path):
    cfg = _small(tmp_path)
    cli.main(["run", "--config", str(cfg), "--out", str(tmp_path / "a")])
    cli.main(["run", "--config", str(cfg), "--out", str(tmp_path / "b")])
    a = json.loads((tmp_path / "a" / "report.json").read_text())
    b = json.loads((tmp_path / "b" / "report.json").read_text())
    b["config"]["output_dir"] = a["config"]["output_dir"]
    assert _strip(a) == _strip(b)


def test_seed_override_changes_points(tmp_path):
    cfg = _small(tmp_path)
    cli.main(["run", "--config", str(cfg), "--out", str(tmp_path / "a")])
    cli.main(["run", "--config", str(cfg), "--seed", "7", "--out", str(tmp_path / "b")])
    a = json.loads((tmp_path / "a" / "report.json").read_text())
    b = json.loads((tmp_path / "b" / "report.json").read_text())
    assert b["config"]["seed"] == 7
    assert [c["residual"] for c in a["checks"]] != [c["residual"] for c in b["checks"]]


def test_unknown_case_tag_is_config_error(tmp_path):
    bad = {"suite": "family", "families": [{"name": "x", "case": "parabolic", "base": "null_plane"}]}
    with pytest.raises(ConfigError):
        RunConfig.from_dict(bad)
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(bad))
    assert cli.main(["run", "--config", str(path)]) == 2


def test_inadmissible_dims_and_keys():
    with pytest.raises(ConfigError):
        RunConfig(pseudospheres=[[1, 0]])
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"suites": "all"})
    with pytest.raises(ConfigError):
        RunConfig(tolerances={"nonsense": 1.0})


def test_module_errors_become_failed_checks():
    cfg = RunConfig(suite="pseudosphere", pseudospheres=[], n_points=5,
                    perturbed={"p": 2, "q": 1, "center": [0.0, 0.0], "radius": 0.5, "amplitude": -50.0})
    rec = run_checks(cfg)
    assert len(rec.records) == 1
    r = rec.records[0]
    assert not r.passed and r.residual is None and "BumpTooLarge" in r.error


def test_negative_controls_pass_as_gt(tmp_path):
    rec = run_checks(RunConfig(suite="obata", families=["nil_null"], pseudospheres=[], n_points=10))
    neg = [r for r in rec.records if "negative" in r.name]
    assert neg and all(r.comparison == "gt" and r.passed for r in neg)


def test_tolerance_override_flips_pass():
    rec = run_checks(RunConfig(suite="obata", families=[], pseudospheres=[[2, 0]], n_points=5,
                               tolerances={"obata.pseudosphere": 1e-30}))
    assert not rec.records[0].passed


def test_export_three_node_line(tmp_path):
    g = constant_metric(Chart(2, ((-5.0, 5.0),) * 2), np.eye(2))
    path = integrate_geodesic(g, [0.0, 0.0], [1.0 / 3, 0.1], (0.0, 1.0), 0.5)
    out = tmp_path / "line.csv"
    cli.export_path(path, out)
    cols = cli.read_path(out)
    assert list(cols) == ["t", "x_0", "x_1", "v_0", "v_1", "energy"]
    assert len(cols["t"]) == 3
    assert np.all(cols["energy"] == cols["energy"][0])
    # full round-trip precision
    assert np.array_equal(cols["x_0"], path.points[:, 0])
    assert np.array_equal(cols["v_1"], path.velocities[:, 1])


def test_export_empty_path(tmp_path):
    out = tmp_path / "empty.csv"
    cli.export_path(GeodesicPath.empty(3), out)
    assert out.read_text().strip() == "t,x_0,x_1,x_2,v_0,v_1,v_2,energy"
    assert len(cli.read_path(out)["t"]) == 0


def test_export_geodesic_command_cone_radial(tmp_path):
    # purely radial start on the cone over S^{2,0}: r = r0 + t, the alpha0 = 1 radial law
    out = tmp_path / "cone.csv"
    code = cli.main(["export-geodesic", "--instance", "cone:pseudosphere:2,0", "--p0", "1.2,0.3,0.2",
                     "--v0", "1,0,0", "--t-end", "0.5", "--step", "0.05", "--out", str(out)])
    assert code == 0
    cols = cli.read_path(out)
    assert np.allclose(cols["x_0"], 1.2 + cols["t"], atol=1e-14)
    assert np.allclose(cols["x_0"], radial_law(1.0, 1.2, cols["t"]), atol=1e-14)


def test_export_geodesic_left_chart_gives_header_only(tmp_path):
    out = tmp_path / "gone.csv"
    code = cli.main(["export-geodesic", "--instance", "nil_flat", "--p0", "0,0.1,0.1",
                     "--v0", "10,0,0", "--t-end", "1", "--step", "0.1", "--out", str(out)])
    assert code == 1
    assert len(cli.read_path(out)["t"]) == 0


def test_profile_series_written(tmp_path):
    cfg = _small(tmp_path, suite="family", families=["nil_flat"])
    cli.main(["run", "--config", str(cfg), "--out", str(tmp_path / "fam")])
    data = np.loadtxt(tmp_path / "fam" / "profile_nil_flat.dat")
    assert data.shape[1] == 3
    assert np.max(np.abs(data[:, 1] - data[:, 2])) < 1e-6
