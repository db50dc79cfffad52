import json
import subprocess
import sys

import pytest

from qtmlab.cli import EXIT_ILL_FORMED, EXIT_OK, EXIT_PARSE, EXIT_RUNTIME, RunConfig, run

from conftest import DATA


def run_json(argv):
    code, text = run(argv)
    return code, json.loads(text)


def test_validate_exit_codes():
    code, doc = run_json(["validate", "move-halt"])
    assert code == EXIT_OK and doc["ok"] and doc["isometry_defect"] <= 1e-10
    code, doc = run_json(["validate", str(DATA / "mutated-move-halt.qtm")])
    assert code == EXIT_ILL_FORMED and not doc["ok"] and doc["violations"]
    code, doc = run_json(["validate", str(DATA / "malformed.qtm")])
    assert code == EXIT_PARSE and doc["error"] == "parse"
    assert (doc["line"], doc["column"]) == (5, 19)


def test_missing_file():
    code, doc = run_json(["validate", "no-such-machine"])
    assert code == EXIT_PARSE and doc["error"] == "file"


def test_fixture_path_and_name_agree():
    a = run(["validate", "copy-halt"])
    b = run(["validate", "fixtures/copy-halt.qtm"])
    assert a == b


def test_simulate():
    code, doc = run_json(["simulate", "--machine", "copy-halt", "--input", "01", "--steps", "10"])
    assert code == EXIT_OK and doc["output_pure"]
    assert doc["output_base_length"] == 2


def test_simulate_non_halting_is_runtime_error():
    code, doc = run_json(["simulate", "--machine", "loop-forever", "--input", "0", "--steps", "5"])
    assert code == EXIT_RUNTIME and doc["error"] == "NotHalting"


def test_spectrum_exact_and_approx():
    code, doc = run_json(["spectrum", "--machine", "delay-by-first-bit", "--n", "1", "--tmax", "5"])
    assert [(e["t"], e["dim"]) for e in doc["entries"]] == [(2, 1), (3, 1)]
    assert doc["code_lengths"] == [2, 2] and doc["dimension_bound"]
    code, doc = run_json(
        ["spectrum", "--machine", "move-halt", "--n", "1", "--tmax", "2", "--mode", "approx", "--delta", "1/20"]
    )
    assert code == EXIT_OK and doc["mode"] == {"approx": "1/20"}
    assert [(e["t"], e["dim"]) for e in doc["entries"]] == [(1, 2)]


def test_spectrum_csv():
    code, text = run(["spectrum", "--machine", "delay-by-first-bit", "--n", "2", "--tmax", "5", "--format", "csv"])
    lines = text.strip().splitlines()
    assert lines[0] == "dim,epsilon,t"
    assert lines[1:] == ["2,,2", "2,,3"]


def test_encode_decode_through_file(tmp_path):
    prog = tmp_path / "p.bin"
    code, doc = run_json(
        ["encode", "--machine", "move-to-output", "--input", "01", "--tmax", "10", "--program", str(prog)]
    )
    assert code == EXIT_OK and doc["code_word"] == "0" and doc["quantum_length"] == 3
    code, doc = run_json(["decode", "--program", str(prog), "--tmax", "10"])
    assert code == EXIT_OK and doc["tau"] >= 1 and doc["halting_number"] == 1


def test_roundtrip_and_output_file(tmp_path):
    out = tmp_path / "r.json"
    code, text = run(
        ["roundtrip", "--machine", "hadamard-to-output", "--input", "1", "--tmax", "6", "--output", str(out)]
    )
    doc = json.loads(text)
    assert code == EXIT_OK and doc["within_delta"] and doc["quantum_length"] == 2
    assert out.read_text() == text


def test_roundtrip_non_halting():
    code, doc = run_json(["roundtrip", "--machine", "loop-forever", "--input", "0", "--tmax", "4"])
    assert code == EXIT_RUNTIME and doc["error"] == "NotHalting"


def test_bad_delta_is_usage_error():
    code, doc = run_json(["roundtrip", "--machine", "move-halt", "--input", "0", "--tmax", "4", "--delta", "2"])
    assert code == EXIT_PARSE and doc["error"] == "usage"


def test_run_config_validation():
    with pytest.raises(ValueError):
        RunConfig("validate", tol=0)
    with pytest.raises(ValueError):
        RunConfig("validate", format="xml")


def test_selftest_deterministic_and_forced_failure():
    a = run(["selftest", "--seed", "3"])
    assert a == run(["selftest", "--seed", "3"]) and a[0] == EXIT_OK
    code, doc = run_json(["selftest", "--seed", "3", "--force-failure"])
    assert code == 1 and doc["failed"] == ["machine-isometry"]
    failing = next(s for s in doc["suites"] if s["name"] == "machine-isometry")
    assert any("mutated-move-halt" in f for f in failing["failures"])


def test_console_entry_point():
    r = subprocess.run([sys.executable, "-m", "qtmlab", "validate", "move-halt"], capture_output=True, text=True)
    assert r.returncode == 0 and json.loads(r.stdout)["ok"]


def test_malformed_json_input_is_usage_error():
    code, doc = run_json(["simulate", "--machine", "move-halt", "--input", '{"0": 1}', "--steps", "4"])
    assert code == EXIT_PARSE and doc["error"] == "usage"
