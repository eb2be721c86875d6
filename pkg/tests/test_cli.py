import json
import math
import subprocess
import sys
from pathlib import Path

import jsonschema
import pytest
from hypothesis import given
from hypothesis import strategies as st

from relkep.cli import RunConfig, UsageError, main, parse_potential
from relkep.loops import Loop

SCHEMAS = Path(__file__).resolve().parents[1] / "schemas"


def schema(name):
    return json.loads((SCHEMAS / f"{name}.json").read_text())


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, command, *argv):
    code, out, err = run(capsys, command, *argv)
    assert code == 0, err
    data = json.loads(out)
    jsonschema.validate(data, schema(command))
    return data


def test_schemas_are_valid():
    names = sorted(p.stem for p in SCHEMAS.glob("*.json"))
    assert names == sorted([
        "action-spectrum", "circular", "classify", "error", "integrate", "loop", "minimize",
        "morse", "rosette", "sweep", "verify",
    ])
    for name in names:
        jsonschema.Draft202012Validator.check_schema(schema(name))


def test_circular(capsys):
    d = run_json(capsys, "circular", "--T", "12.566370614", "--k", "1")
    assert d["R"] == pytest.approx(1.41421, abs=1e-5)
    assert d["omega"] == pytest.approx(0.5, abs=1e-9)
    assert d["action"] == pytest.approx(12.56637, abs=1e-5)
    d = run_json(capsys, "circular", "--T", "25.132741229", "--k", "2")
    assert d["action"] == pytest.approx(25.13274, abs=1e-5)


@pytest.mark.parametrize("argv", [
    ["circular", "--T", "-1", "--k", "1"],
    ["circular", "--T", "1", "--k", "0"],
    ["circular", "--T", "abc", "--k", "1"],
    ["circular", "--k", "1"],
    ["nonsense"],
    ["minimize", "--T", "10", "--k", "1", "--potential", "eps=0.1,zeta=3"],
    ["classify", "--T", "10", "--k", "1", "--format", "csv"],
    ["minimize", "--T", "10", "--k", "1", "--nodes", "many"],
    ["minimize", "--T", "10", "--k", "1", "--study", "-1"],
])
def test_usage_errors(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 2 and out == ""
    data = json.loads(err)
    jsonschema.validate(data, schema("error"))
    assert data["error"] == "usage"


def test_domain_error_exit_code(capsys):
    code, out, err = run(capsys, "rosette", "--T", "5", "--k", "2", "--n", "1")
    assert code == 1
    data = json.loads(err)
    jsonschema.validate(data, schema("error"))
    assert data["error"] == "NoSuchOrbitError"


def test_classify(capsys):
    d = run_json(capsys, "classify", "--T", "25.132741", "--k", "2")
    assert d["i_T"] == 1
    assert d["thresholds"] == [pytest.approx(16 * math.pi / 3**1.5, rel=1e-14)]
    assert run_json(capsys, "classify", "--T", "5", "--k", "2")["i_T"] == 0
    d = run_json(capsys, "classify", "--T", "10", "--k", "1")
    assert d["i_T"] == 0 and d["thresholds"] == []


def test_rosette_and_spectrum(capsys):
    d = run_json(capsys, "rosette", "--T", repr(8 * math.pi), "--k", "2", "--n", "1")
    assert d["h"] == pytest.approx(0.7766271544363808, abs=1e-12)
    assert d["action"] == pytest.approx(24.242796841911057, rel=1e-13)
    d = run_json(capsys, "action-spectrum", "--T", repr(8 * math.pi), "--k", "2")
    assert [s["n"] for s in d["spectrum"]] == [1]
    assert d["minimal"] == "rosette(1,2)"
    assert d["spectrum"][0]["action"] < d["circular_action"]


def test_morse(capsys):
    d = run_json(capsys, "morse", "--T", "12.566371", "--k", "1", "--modes", "64")
    assert d["index"] == 0 and d["conley_zehnder"] == 0
    d = run_json(capsys, "morse", "--T", "40", "--k", "3", "--modes", "24", "--method", "jacobi")
    assert d["index"] == 4


def test_minimize(capsys, tmp_path):
    d = run_json(capsys, "minimize", "--T", "12.566371", "--k", "1", "--nodes", "256")
    assert d["action"]["total"] == pytest.approx(12.5664, abs=1e-4)
    assert d["converged"] and len(d["loop"]["nodes"]) == 256
    jsonschema.validate(d["loop"], schema("loop"))
    out = tmp_path / "loop.json"
    d = run_json(capsys, "minimize", "--T", repr(8 * math.pi), "--k", "2", "--nodes", "128",
                 "--potential", "eps=0.001,q=1,direction=y", "--loop-out", str(out))
    assert "loop" not in d and d["loop_file"] == str(out)
    assert d["winding"] == 2 and d["potential"].startswith("eps=0.001")
    loop = Loop.from_json(out.read_text())
    jsonschema.validate(json.loads(out.read_text()), schema("loop"))
    assert loop.N == 128


def test_minimize_auto_nodes_and_study(capsys):
    d = run_json(capsys, "minimize", "--T", repr(8 * math.pi), "--k", "2", "--nodes", "auto")
    assert d["nodes"] == 512 and d["resolved"]
    d = run_json(capsys, "minimize", "--T", "12.566371", "--k", "1", "--nodes", "128", "--study", "2")
    assert [row["nodes"] for row in d["study"]] == [128, 256, 512]
    assert d["study"][0]["action"] == d["action"]["total"]
    actions = [row["action"] for row in d["study"]]
    assert max(actions) - min(actions) < 1e-9


def test_integrate_csv_and_json(capsys, tmp_path):
    code, out, _ = run(capsys, "integrate", "--T", repr(8 * math.pi), "--k", "2", "--n", "1")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "t,x,y,px,py,h,L"
    assert float(lines[-1].split(",")[0]) == pytest.approx(8 * math.pi, rel=1e-15)
    d = run_json(capsys, "integrate", "--T", repr(8 * math.pi), "--k", "2", "--n", "1", "--format", "json")
    assert d["periodicity_residual"] < 1e-6
    target = tmp_path / "traj.csv"
    code, out, _ = run(capsys, "integrate", "--T", "10", "--k", "1", "--output", str(target))
    assert code == 0 and out == "" and target.read_text().startswith("t,x,y")


def test_verify_worked_case(capsys):
    d = run_json(capsys, "verify", "--T", "25.132741", "--k", "2")
    assert d["all_passed"], [c for c in d["checks"] if not c["passed"]]
    assert d["rosette_actions"][0] == pytest.approx(24.2428, abs=1e-4)
    assert d["circular_action"] == pytest.approx(25.1327, abs=1e-4)
    assert d["rosette_actions"][0] < d["circular_action"]
    assert d["morse_index"] == 2
    code, out, _ = run(capsys, "verify", "--T", "12.566371", "--k", "1", "--format", "csv")
    assert code == 0
    rows = out.splitlines()
    assert rows[0] == "name,passed,value,threshold"
    assert all(",True," in r for r in rows[1:])


def test_sweep(capsys, monkeypatch):
    monkeypatch.setenv("RELKEP_THREADS", "2")
    code, out, _ = run(capsys, "sweep", "--k", "3", "--T-min", "5", "--T-max", "500", "--count", "5", "--modes", "24")
    assert code == 0
    rows = [r.split(",") for r in out.splitlines()]
    assert rows[0] == ["T", "i_T", "morse_index", "formula_index", "conley_zehnder",
                       "circular_action", "min_rosette_action"]
    assert len(rows) == 6
    for r in rows[1:]:
        assert r[2] == r[3] == r[4]
    d = run_json(capsys, "sweep", "--k", "2", "--T-min", "1", "--T-max", "100", "--count", "3", "--format", "json")
    assert d["rows"][0]["min_rosette_action"] is None
    code, _, err = run(capsys, "sweep", "--k", "2", "--T-min", "10", "--T-max", "1")
    assert code == 2


def test_outputs_are_byte_identical():
    argv = [sys.executable, "-m", "relkep.cli", "minimize", "--T", "12.566371", "--k", "1", "--nodes", "128"]
    a = subprocess.run(argv, capture_output=True, check=True).stdout
    b = subprocess.run(argv, capture_output=True, check=True).stdout
    assert a == b and a


def test_console_script_exit_code():
    res = subprocess.run(["relkep", "circular", "--T", "-1", "--k", "1"], capture_output=True, text=True)
    assert res.returncode == 2
    assert json.loads(res.stderr)["error"] == "usage"


def test_parse_potential():
    U = parse_potential("eps=0.5, q=2, phase=0.25, direction=1.5707963267948966", 10.0)
    assert U.value([0.0], [[0.0, 2.0]])[0] == pytest.approx(0.5 * math.cos(0.25) * 2.0)
    assert parse_potential("", 10.0).value([0.0], [[1.0, 1.0]])[0] == 0.0
    for bad in ("eps", "eps=x", "q=1.5", "foo=1"):
        with pytest.raises(UsageError):
            parse_potential(bad, 10.0)


floats = st.floats(1e-3, 1e3, allow_nan=False)


@given(
    st.sampled_from(["circular", "classify", "rosette", "action-spectrum", "morse", "minimize",
                     "integrate", "verify", "sweep"]),
    floats, floats, floats, floats, st.integers(-6, 6).filter(bool), st.integers(16, 80),
    st.sampled_from([None, "json", "csv"]), st.sampled_from([None, "out.txt"]),
)
def test_run_config_round_trip(command, m, c, alpha, T, k, count, fmt, output):
    argv = [command, "--m", repr(m), "--c", repr(c), "--alpha", repr(alpha), "--k", str(k)]
    extra = {
        "rosette": ["--n", "1"],
        "morse": ["--modes", str(count), "--method", "jacobi"],
        "minimize": ["--nodes", str(count + 64), "--gtol", "1e-9", "--potential", "eps=0.1,q=2"],
        "integrate": ["--n", "0", "--periods", "1.5"],
        "verify": ["--modes", str(count)],
        "sweep": ["--T-min", repr(T), "--T-max", repr(2 * T), "--count", str(count)],
    }.get(command, [])
    if command != "sweep":
        argv += ["--T", repr(T)]
    argv += extra
    if fmt:
        argv += ["--format", fmt]
    if output:
        argv += ["--output", output]
    cfg = RunConfig.parse(argv)
    again = RunConfig.parse(cfg.to_argv())
    assert again == cfg
    assert RunConfig.parse(again.to_argv()).to_argv() == cfg.to_argv()
