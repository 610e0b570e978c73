import csv
import io
import json

import numpy as np
import pytest

from pathsens.cli import ConfigError, main, parse_perturbation
from pathsens.model import fixture_path


def run(tmp_path, *args, name="out.csv"):
    out = tmp_path / name
    code = main([*args, "--out", str(out)])
    return code, out


def body(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# ")
    return lines[1:]


def rows(path):
    return list(csv.DictReader(io.StringIO("\n".join(body(path)))))


def test_metadata_line(tmp_path):
    code, out = run(tmp_path, "ire", "--model", str(fixture_path("poisson")), "--ensemble", "20", "--seed", "3")
    assert code == 0
    meta = out.read_text().splitlines()[0]
    for key in ("model_sha256=", "theta=k:1.0", "eps=k:0.1", "M=20", "seed=3", "pathsens-"):
        assert key in meta


def test_ire_zero_perturbation(tmp_path):
    code, out = run(tmp_path, "ire", "--model", "poisson", "--ensemble", "10", "--perturb", "k=0")
    assert code == 0
    assert all(float(r["value"]) == 0.0 for r in rows(out))


def test_byte_identical_bodies(tmp_path, monkeypatch):
    args = ("ifim", "--model", "birthdeath", "--ensemble", "30", "--seed", "5", "--grid", "4", "--horizon", "3")
    monkeypatch.setenv("PATHSENS_THREADS", "1")
    _, a = run(tmp_path, *args, name="a.csv")
    monkeypatch.setenv("PATHSENS_THREADS", "3")
    _, b = run(tmp_path, *args, name="b.csv")
    assert body(a) == body(b)


def test_every_command_runs(tmp_path):
    common = ["--model", "birthdeath", "--ensemble", "20", "--horizon", "2", "--grid", "3"]
    for cmd in ("simulate", "ire", "ifim", "avg-re", "rer", "fd-si", "screen"):
        code, out = run(tmp_path, cmd, *common, name=f"{cmd}.csv")
        assert code == 0, cmd
        assert len(body(out)) > 1
    code, out = run(tmp_path, "verify", name="verify.csv")
    assert code == 0
    assert {r["label"] for r in rows(out)} >= {"poisson_rer(1,1.1)", "ou_ifim(1,1,0,1)"}


def test_fd_si_records_denominator(tmp_path):
    code, out = run(tmp_path, "fd-si", "--model", "birthdeath", "--ensemble", "20", "--horizon", "2",
                    "--grid", "3", "--perturb", "gamma=rel:0.1")
    assert code == 0
    assert "denominator=ensemble_mean" in out.read_text().splitlines()[0]
    params = {r["parameter"] for r in rows(out)}
    assert params == {"gamma"}


def test_screen_inert_fixture(tmp_path):
    code, out = run(tmp_path, "screen", "--model", "birthdeath_inert", "--ensemble", "50", "--horizon", "3",
                    "--threshold", "1e-9")
    assert code == 0
    inert = [r for r in rows(out) if r["parameter"] == "k_inert"]
    assert inert and all(r["screened"] == "true" for r in inert)


def test_builtin_ou(tmp_path):
    code, out = run(tmp_path, "ifim", "--model", "builtin:ou", "--horizon", "1", "--dt", "0.01", "--grid", "5",
                    "--ensemble", "50")
    assert code == 0
    assert len(rows(out)) == 5
    code, _ = run(tmp_path, "ifim", "--model", "builtin:ou", "--horizon", "1", "--dt", "0.01", "--grid", "7")
    assert code == 1


def test_parse_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, out = run(tmp_path, "ire", "--model", str(bad))
    assert code == 1 and not out.exists()
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1 and err[0].startswith("pathsens: error code=1 ")


def test_model_invariant_exit_code(tmp_path, capsys):
    doc = json.loads(fixture_path("poisson").read_text())
    doc["parameters"][0]["value"] = -1.0
    bad = tmp_path / "neg.json"
    bad.write_text(json.dumps(doc))
    code, out = run(tmp_path, "ire", "--model", str(bad))
    assert code == 2 and not out.exists()
    assert "code=2" in capsys.readouterr().err


def test_runtime_error_exit_code(tmp_path, capsys):
    code, _ = run(tmp_path, "ire", "--model", "builtin:ou:theta=1e10,sigma=1,x0=1e300", "--horizon", "1",
                  "--dt", "0.5", "--grid", "3", "--ensemble", "2")
    assert code == 3
    assert "kind=NonFiniteState" in capsys.readouterr().err


def test_failed_run_leaves_previous_file(tmp_path):
    out = tmp_path / "keep.csv"
    out.write_text("previous\n")
    assert main(["ire", "--model", "missing.json", "--out", str(out)]) == 1
    assert out.read_text() == "previous\n"


@pytest.mark.parametrize("argv", [
    ["ire"],
    ["ire", "--model", "poisson", "--ensemble", "0"],
    ["ire", "--model", "poisson", "--grid", "1"],
    ["ire", "--model", "poisson", "--perturb", "k=-2"],
    ["bogus"],
])
def test_config_errors(argv, capsys):
    assert main(argv) == 1
    assert capsys.readouterr().err.count("\n") == 1


def test_parse_perturbation():
    theta = np.array([2.0, 4.0])
    names = ("a", "b")
    assert parse_perturbation([], theta, names).tolist() == [0.2, 0.4]
    assert parse_perturbation(["rel:0.5", "b=1"], theta, names).tolist() == [1.0, 1.0]
    assert parse_perturbation(["a=rel:0.25"], theta, names).tolist() == [0.5, 0.0]
    with pytest.raises(ConfigError):
        parse_perturbation(["c=1"], theta, names)
