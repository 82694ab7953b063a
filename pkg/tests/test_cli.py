import csv
import json
import os
import subprocess
import sys

import pytest

from wkbflow.cli import RunConfig, main
from wkbflow.errors import ConfigError

AIRY = {"Q": [0, 1], "h": [0.2], "eval": {"sample": 1}, "seed": 3}


def write_config(tmp_path, cfg, name="config.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def run_cli(tmp_path, sub, cfg, out="out", extra=()):
    out = str(tmp_path / out)
    code = main([sub, "--config", write_config(tmp_path, cfg), "--out", out, *extra])
    return code, out


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_turning_points_json(tmp_path):
    code, out = run_cli(tmp_path, "turning-points", {**AIRY, "Q": [1, 0, -1]})
    assert code == 0
    data = json.load(open(os.path.join(out, "turning_points.json")))
    assert data == [{"loc": [-1.0, 0.0], "mult": 1}, {"loc": [1.0, 0.0], "mult": 1}]
    report = json.load(open(os.path.join(out, "report.json")))
    assert report["passed"]
    assert report["provenance"]["backend"] in ("python", "cython")


def test_stokes_writes_curves(tmp_path):
    code, out = run_cli(tmp_path, "stokes", AIRY)
    assert code == 0
    assert sorted(os.listdir(os.path.join(out, "curves"))) == ["curve_000.csv", "curve_001.csv",
                                                                "curve_002.csv"]
    data = json.load(open(os.path.join(out, "stokes.json")))
    assert [d["type"] for d in data["domains"]] == ["type1"] * 3


def test_series_and_iterate(tmp_path):
    assert run_cli(tmp_path, "series", AIRY)[0] == 0
    code, out = run_cli(tmp_path, "iterate", AIRY, out="it")
    assert code == 0
    rows = read_csv(os.path.join(out, "iterate.csv"))
    assert rows and all(float(r["abs_G"]) <= float(r["bound"]) * (1 + 1e-9) for r in rows)


def test_solve_rows_and_trajectory_dump(tmp_path):
    code, out = run_cli(tmp_path, "solve", AIRY, extra=["--dump-trajectories"])
    assert code == 0
    rows = read_csv(os.path.join(out, "solution.csv"))
    assert len(rows) == 3 * 2
    assert all(r["status"] == "ok" and float(r["residual_fd"]) < 1e-5 for r in rows)
    dumps = os.listdir(os.path.join(out, "trajectories"))
    assert len(dumps) == 6
    head = open(os.path.join(out, "trajectories", dumps[0])).readline().strip()
    assert head == "t,re_y,im_y,re_sqrt,im_sqrt"


def test_solve_marks_points_outside(tmp_path):
    cfg = {**AIRY, "eval": {"points": [[0.0, 0.0], [-2.0, 0.3]]}}
    code, out = run_cli(tmp_path, "solve", cfg)
    assert code == 0
    rows = read_csv(os.path.join(out, "solution.csv"))
    assert rows[0]["status"] != "ok"


def test_extend(tmp_path):
    cfg = {"Q": [1, 0, -1], "h": [0.1], "options": {"curve": 1},
           "eval": {"points": [[-1.6, 0.9], [-1.6, 1.2]]}}
    code, out = run_cli(tmp_path, "extend", cfg)
    assert code == 0
    rows = read_csv(os.path.join(out, "extend.csv"))
    assert len(rows) == 2


def test_verify_passes_and_is_deterministic(tmp_path):
    code, out1 = run_cli(tmp_path, "verify", {**AIRY, "eval": {"sample": 2}}, out="a")
    assert code == 0
    code, out2 = run_cli(tmp_path, "verify", {**AIRY, "eval": {"sample": 2}}, out="b")
    r1 = json.load(open(os.path.join(out1, "report.json")))
    r2 = json.load(open(os.path.join(out2, "report.json")))
    assert r1["passed"]
    assert r1 == r2
    assert open(os.path.join(out1, "verify_points.csv")).read() == open(os.path.join(out2, "verify_points.csv")).read()


def test_tol_scale_can_fail_a_run(tmp_path):
    code, out = run_cli(tmp_path, "solve", AIRY, extra=["--tol-scale", "1e-12"])
    assert code == 0
    report = json.load(open(os.path.join(out, "report.json")))
    assert not report["passed"]


@pytest.mark.parametrize("cfg,field", [
    ({"h": [0.1], "eval": {"sample": 1}}, "Q"),
    ({"Q": [2.0], "h": [0.1], "eval": {"sample": 1}}, None),
    ({"Q": [0, 1], "h": [-0.1], "eval": {"sample": 1}}, "h"),
    ({"Q": [0, 1], "h": [0.1], "eval": {}}, "eval"),
])
def test_bad_configs_exit_with_code_2(tmp_path, cfg, field):
    code, out = run_cli(tmp_path, "solve", cfg)
    assert code == 2
    err = json.load(open(os.path.join(out, "error.json")))
    assert err["exit_code"] == 2
    if field is not None:
        assert err["context"]["field"].startswith(field)


def test_extend_without_curve_is_a_config_error(tmp_path):
    code, _ = run_cli(tmp_path, "extend", {**AIRY, "eval": {"points": [[1, 1]]}})
    assert code == 2


def test_config_digest_is_stable():
    a = RunConfig.from_dict(AIRY)
    b = RunConfig.from_dict(json.loads(json.dumps(AIRY)))
    assert a.digest() == b.digest()
    assert a.digest() != RunConfig.from_dict({**AIRY, "seed": 4}).digest()
    with pytest.raises(ConfigError):
        RunConfig.from_dict([1, 2])


def test_module_entry_point(tmp_path):
    cfg = write_config(tmp_path, AIRY)
    r = subprocess.run([sys.executable, "-m", "wkbflow", "turning-points", "--config", cfg,
                        "--out", str(tmp_path / "m")], capture_output=True, text=True)
    assert r.returncode == 0
    assert json.loads(r.stdout)["passed"] is True
    r = subprocess.run([sys.executable, "-m", "wkbflow", "solve", "--config", str(tmp_path / "nope.json")],
                       capture_output=True, text=True)
    assert r.returncode == 2
    assert "cannot read configuration" in r.stderr
