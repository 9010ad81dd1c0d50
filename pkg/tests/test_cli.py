import json

import pytest
from click.testing import CliRunner

from famed.cli import main

from conftest import VOL_41


@pytest.fixture
def run():
    runner = CliRunner()

    def go(*args, env=None, input=None):
        return runner.invoke(main, list(args), env=env, input=input, catch_exceptions=False)

    return go


def test_check_exit_codes(run, data_dir, tmp_path):
    assert run("check", str(data_dir / "fig8.json")).exit_code == 0
    assert run("check", str(data_dir / "synthetic_last_column.json")).exit_code == 2
    bad = tmp_path / "bad.json"
    bad.write_text('{"num_tetrahedra": 1}')
    r = run("check", str(bad))
    assert r.exit_code == 1 and "MalformedInput" in r.output


def test_check_not_famed(run, data_dir, tmp_path):
    d = json.loads((data_dir / "synthetic_last_column.json").read_text())
    d["edge_angle_counts"][0] = [[0, 0, 0]] * d["N"]
    p = tmp_path / "nf.json"
    p.write_text(json.dumps(d))
    assert run("check", str(p)).exit_code == 3


def test_check_stdin(run, data_dir):
    r = run("check", input=(data_dir / "fig8.json").read_text())
    assert r.exit_code == 0 and json.loads(r.output)["famed_lm"]


def test_batch(run, data_dir, tmp_path):
    for name in ("fig8.json", "synthetic_last_column.json"):
        (tmp_path / name).write_text((data_dir / name).read_text())
    (tmp_path / "zz_broken.json").write_text("{")
    r = run("check", "--batch", str(tmp_path), "--jobs", "2")
    lines = [json.loads(l) for l in r.output.strip().splitlines()]
    assert [(l["file"], l["exit"]) for l in lines] == [
        ("fig8.json", 0), ("synthetic_last_column.json", 2), ("zz_broken.json", 1)]
    assert r.exit_code == 1


def test_usage_errors_are_input_errors(run, data_dir):
    assert run("solve", str(data_dir / "fig8.json"), "--xi", "abc").exit_code == 1
    assert run("check", "/nonexistent/file.json").exit_code == 1
    assert run("--help").exit_code == 0


def test_solve(run, data_dir):
    r = run("solve", str(data_dir / "fig8.json"), "--xi", "0")
    out = json.loads(r.output)
    assert abs(out["volume"] - VOL_41) < 1e-9
    assert abs(out["tau"]["m"]["modulus"] - 3 ** 0.5 / 2) < 1e-12


def test_solve_far_outside_radius(run, data_dir):
    r = run("solve", str(data_dir / "fig8.json"), "--xi", "5i")
    assert r.exit_code == 4 and "ContinuationBreakdown" in r.output


def test_solve_meridian(run, data_dir):
    out = json.loads(run("solve", str(data_dir / "fig8.json"), "--curve", "m", "--wm", "0.1").output)
    assert out["curve"] == "m" and out["path_steps"] == 20
    assert abs(out["holonomy"]["meridian"][0] - 0.1) < 1e-12


def test_asymptotics_empty_list(run, data_dir):
    r = run("asymptotics", str(data_dir / "fig8.json"), "--hbar-list", "")
    assert r.exit_code == 1 and "InsufficientSamples" in r.output


def test_asymptotics_jones_tsv(run, data_dir, tmp_path):
    tsv = tmp_path / "j.tsv"
    r = run("asymptotics", str(data_dir / "fig8.json"), "--mode", "J", "--hbar-list", "1/8,1/12,1/16,1/24",
            "--tsv", str(tsv))
    out = json.loads(r.output)
    assert out["relative_error"] < 0.05
    rows = tsv.read_text().splitlines()
    assert rows[0].split("\t") == ["hbar", "log_modulus", "scaled"] and len(rows) == 5


def test_tolerance_env(run, data_dir):
    out = json.loads(run("check", str(data_dir / "fig8.json"), env={"FAMED_TOL": "residual=1e-6"}).output)
    assert out["tolerances"]["residual"] == 1e-6
    assert run("check", str(data_dir / "fig8.json"), env={"FAMED_TOL": "bogus=1"}).exit_code == 1


def test_report_deterministic_and_verifies(run, data_dir, tmp_path):
    a = run("report", str(data_dir / "fig8.json")).output
    b = run("report", str(data_dir / "fig8.json")).output
    assert a == b
    p = tmp_path / "rep.json"
    p.write_text(a)
    r = run("report", "--verify", str(p))
    assert r.exit_code == 0 and json.loads(r.output)["verified"]
    rep = json.loads(a)
    rep["structure"]["shapes"][0][0] += 1e-4
    p.write_text(json.dumps(rep))
    r = run("report", "--verify", str(p))
    assert r.exit_code == 5 and not json.loads(r.output)["checks"]["gluing_residual"]


def test_report_matrix_input(run, data_dir, tmp_path):
    r = run("report", str(data_dir / "synthetic_last_column.json"))
    assert r.exit_code == 2
    p = tmp_path / "rep.json"
    p.write_text(r.output)
    assert run("report", "--verify", str(p)).exit_code == 0
