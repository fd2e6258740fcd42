import json
import subprocess
import sys

import pytest

from vershik_lab import cli


def run(*argv):
    return cli.run(list(argv))


def run_json(*argv):
    code, out = cli.run(list(argv) + ["--format", "json"])
    return code, json.loads(out)


@pytest.fixture(scope="module")
def files(tmp_path_factory):
    d = tmp_path_factory.mktemp("specs")
    out = {}
    for name, ext, extra in (("dyadic_diagram", "bd", []), ("two_max_diagram", "bd", []),
                             ("dh_nested", "ns", ["--depth", "8"]),
                             ("odometer_system", "sys", ["--depth", "6"])):
        path = d / f"{name}.{ext}"
        code, _ = run("examples", "emit", name, "--out", str(path), *extra)
        assert code == 0
        out[name] = str(path)
    return out


def test_successor_from_file(files):
    code, out = run("successor", "--diagram", files["dyadic_diagram"], "--path", "1,1,0")
    assert code == 0 and "result: 0,0,1" in out


def test_cocycle_from_file(files):
    code, data = run_json("diagnose-cocycle", "--nested", files["dh_nested"], "--depth", "8")
    assert code == 1 and data["verdict"] == "Discontinuity"
    assert data["details"]["values"] == [2, 1]


def test_telescope_then_equiv(files, tmp_path):
    tele = tmp_path / "t.bd"
    assert run("telescope", "--diagram", files["dyadic_diagram"], "--cuts", "2,4",
               "--out", str(tele))[0] == 0
    code, data = run_json("equiv", "--diagram", files["dyadic_diagram"], "--other", str(tele))
    assert code == 0 and data["verdict"] == "Equivalent"
    wit = tmp_path / "w.json"
    wit.write_text(json.dumps(data))
    assert run("replay", "--witness", str(wit))[0] == 0


@pytest.mark.parametrize("argv,code", [
    (["validate-diagram", "--diagram", "@dyadic_diagram"], 0),
    (["successor", "--diagram", "@dyadic_diagram", "--path", "1,1,1"], 2),
    (["orbit", "--diagram", "@two_max_diagram", "--path", "0@a,0", "--steps", "3"], 0),
    (["orbit", "--diagram", "@two_max_diagram", "--path", "0,0"], 3),
    (["equiv", "--diagram", "@dyadic_diagram", "--other", "@two_max_diagram"], 1),
    (["check-bs", "--system", "@odometer_system"], 0),
    (["check-bs", "--system", "@fixed_point_system"], 1),
    (["check-bs", "--system", "@broken_system", "--level", "2"], 1),
    (["check-bs", "--system", "@odometer_system", "--U", "1"], 3),
    (["extract-diagram", "--system", "@odometer_system", "--stages", "4"], 0),
    (["verify-conjugacy", "--system", "@nonsemisat_bratteli", "--depth", "6"], 0),
    (["check-afnest", "--nested", "@dh_nested", "--U", "1.1.1", "--V", "0.0.0"], 0),
    (["check-afnest", "--nested", "@full_odometer_nest", "--depth", "8"], 2),
    (["diagnose-cocycle", "--nested", "@odometer_powers", "--depth", "6"], 0),
    (["check-semisat", "--nested", "@nonsemisat_nested"], 1),
    (["check-semisat", "--nested", "@dh_nested"], 0),
    (["diagnose", "--nested", "@broken_nest", "--depth", "6"], 1),
    (["examples", "list"], 0),
    (["export-dot", "--diagram", "@two_max_diagram"], 0),
    (["successor", "--diagram", "@dyadic_diagram", "--path", "2"], 3),
    (["successor", "--diagram", "no/such/file.bd", "--path", "0"], 3),
    (["validate-diagram", "--diagram", "@no_such_builtin"], 3),
    (["check-bs", "--system", "@nonsemisat_space"], 3),
    (["telescope", "--diagram", "@dyadic_diagram", "--cuts", "3,2"], 3),
    (["examples", "emit"], 3),
])
def test_exit_code_matrix(argv, code):
    assert run(*argv)[0] == code


def test_usage_error_exits_three():
    with pytest.raises(SystemExit) as err:
        cli.run(["successor"])
    assert err.value.code == 3


def test_invalid_diagram_file(tmp_path):
    bad = tmp_path / "bad.bd"
    bad.write_text("name bad\nroot o\nvertices 1 v\nedge 1 o v 0\nedge 1 o v 0\n"
                   "extension none\n")
    code, data = run_json("validate-diagram", "--diagram", str(bad))
    assert code == 1 and "fiber-order" in data["details"]["violations"][0]


@pytest.mark.parametrize("argv", [
    ["check-bs", "--system", "@fixed_point_system"],
    ["check-semisat", "--nested", "@nonsemisat_nested"],
    ["diagnose-cocycle", "--nested", "@dh_nested"],
])
def test_witnesses_replay(argv, tmp_path):
    code, data = run_json(*argv)
    assert code == 1 and data["witness"] is not None
    path = tmp_path / "w.json"
    path.write_text(json.dumps(data))
    assert run("replay", "--witness", str(path))[0] == 0


def test_tampered_witness_fails_replay(tmp_path):
    code, data = run_json("diagnose-cocycle", "--nested", "@dh_nested")
    data["witness"]["values"] = [2, 2]
    path = tmp_path / "w.json"
    path.write_text(json.dumps(data))
    assert run("replay", "--witness", str(path))[0] == 1


def test_json_is_deterministic():
    a = run("check-bs", "--system", "@nonsemisat_bratteli", "--probe", "--format", "json")
    b = run("check-bs", "--system", "@nonsemisat_bratteli", "--probe", "--format", "json")
    assert a == b
    data = json.loads(a[1])
    assert data["details"]["probe_disagreements"] == []


def test_depth_from_environment(monkeypatch):
    monkeypatch.setenv("VERSHIK_LAB_DEPTH", "7")
    code, data = run_json("check-bs", "--system", "@odometer_system")
    assert data["parameters"]["depth"] == 7


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "vershik_lab.cli", "successor", "--diagram",
                           "@dyadic_diagram", "--path", "0,1"], capture_output=True, text=True)
    assert proc.returncode == 0 and "result: 1,1" in proc.stdout
