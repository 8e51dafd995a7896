from __future__ import annotations

import copy
import io
import json
import subprocess
import sys

import pytest

from arithbf.cli import EXIT_FAIL, EXIT_INVALID, EXIT_OBSTRUCTION, EXIT_OK, SCHEMA_VERSION, parse_sets, run
from arithbf.suites import SUITES

from conftest import raw_fixture


def call(*argv: str) -> tuple[int, str, str]:
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), out=out, err=err)
    return code, out.getvalue(), err.getvalue()


def call_json(*argv: str) -> tuple[int, dict]:
    code, out, _ = call(*argv, "--format", "json")
    return code, json.loads(out)


def write_fixture(tmp_path, data: dict, name: str = "fx.json") -> str:
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


@pytest.mark.parametrize("suite", SUITES)
def test_f1_every_suite_passes(suite):
    code, rep = call_json("verify", suite, "--fixture", "F1")
    assert code == EXIT_OK
    assert rep["passed"] is True
    assert rep["schema_version"] == SCHEMA_VERSION
    assert rep["config"]["suite"] == suite


def test_onshell_report_f2():
    code, rep = call_json("verify", "onshell", "--fixture", "F2")
    assert code == EXIT_OK
    res = rep["result"]
    assert res["Z_X"] == [4] and res["Z_X_int"] == 4
    assert res["pi_sel_M"] == 2 and res["sel_M1dual"] == 2
    assert res["equal"] is True


def test_check_failure_exits_1():
    code, rep = call_json("verify", "ctp-equals-bf", "--fixture", "F3")
    assert code == EXIT_FAIL
    assert rep["passed"] is False
    assert rep["result"]["misaligned_places"] == ["v2", "v3"]


def test_corrupted_fixture_exits_2_naming_the_axiom(tmp_path):
    d = copy.deepcopy(raw_fixture("F2"))
    d["places"] = d["places"][:2]
    d["boundary_conditions"] = {}
    d["selmer_W"].pop("v3")
    path = write_fixture(tmp_path, d)
    for command in ("validate", "ctp"):
        code, rep = call_json(command, "--fixture", path)
        assert code == EXIT_INVALID
        assert rep["error"]["kind"] == "ValidationError"
        assert rep["error"]["message"] == "reciprocity"
        failed = [a["axiom"] for a in rep["result"]["axioms"] if not a["passed"]]
        assert failed == ["reciprocity"]


def test_malformed_inputs_exit_2(tmp_path):
    code, rep = call_json("validate", "--fixture", str(tmp_path / "missing.json"))
    assert code == EXIT_INVALID and rep["error"]["kind"] == "FileNotFoundError"
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, rep = call_json("validate", "--fixture", str(bad))
    assert code == EXIT_INVALID
    d = copy.deepcopy(raw_fixture("F2"))
    d["places"][0]["subgroup"] = [0, 1]
    code, rep = call_json("validate", "--fixture", write_fixture(tmp_path, d))
    assert code == EXIT_INVALID and rep["error"]["kind"] == "FixtureError"
    code, _, err = call("bf", "--fixture", "F2", "--set", "oops")
    assert code == EXIT_INVALID and "--set" in err


def test_obstruction_exits_3(tmp_path):
    d = copy.deepcopy(raw_fixture("F2"))
    d["boundary_conditions"] = {}
    path = write_fixture(tmp_path, d)
    code, rep = call_json("validate", "--fixture", path)
    assert code == EXIT_OK
    code, rep = call_json("verify", "decomposition", "--fixture", path)
    assert code == EXIT_OBSTRUCTION
    assert rep["error"]["kind"] == "ObstructionNonzero"


def test_commands_produce_results():
    code, rep = call_json("cohomology", "--fixture", "F2", "--module", "M1dual", "--degree", "1")
    assert code == EXIT_OK and rep["result"]["invariant_factors"] == [2, 2]
    code, rep = call_json("cohomology", "--fixture", "F2", "--module", "D", "--degree", "2", "--place", "v1")
    assert code == EXIT_OK and rep["result"]["order"] == 2
    for which in ("M", "M1dual", "M2", "Mdual"):
        code, rep = call_json("selmer", "--fixture", "F3", "--which", which)
        assert code == EXIT_OK and rep["result"]["kernel_route_agrees"]
    code, rep = call_json("ctp", "--fixture", "F3")
    assert code == EXIT_OK and rep["result"]["left_equal"] and rep["result"]["right_equal"]
    code, rep = call_json("bf", "--fixture", "F2")
    assert code == EXIT_OK and len(rep["result"]["table"]) == 4
    code, rep = call_json("bf", "--fixture", "F2", "--set", "S=v2,v3")
    assert code == EXIT_OK and rep["result"]["S"] == ["v2", "v3"] and len(rep["result"]["table"]) == 8
    code, rep = call_json("partition", "--fixture", "F2", "--set", "S=v2,v3")
    assert code == EXIT_OK and sum(x["fields"] for x in rep["result"]["fibers"]) == 8
    code, rep = call_json("partition", "--fixture", "F2")
    assert code == EXIT_OK and rep["result"]["onshell"]["Z_X_int"] == 4


def test_unknown_place_is_invalid():
    code, rep = call_json("bf", "--fixture", "F2", "--set", "S=v9")
    assert code == EXIT_INVALID


def test_human_format():
    code, out, err = call("validate", "--fixture", "F2")
    assert code == EXIT_OK
    assert out.startswith("arithbf validate: PASS")
    assert "exit 0" in err


def test_parse_sets():
    assert parse_sets(["S=v1, v2", "T="]) == {"S": ("v1", "v2"), "T": ()}


def test_json_is_byte_identical_across_processes():
    argv = [sys.executable, "-m", "arithbf", "verify", "ctp-independence", "--fixture", "F2", "--format", "json", "--seed", "0"]
    a = subprocess.run(argv, capture_output=True, check=True)
    b = subprocess.run(argv, capture_output=True, check=True)
    assert a.stdout == b.stdout
    assert json.loads(a.stdout)["passed"] is True


def test_seed_changes_resampled_choices_but_not_verdict():
    _, a = call_json("verify", "ctp-independence", "--fixture", "F3", "--seed", "1", "--resamples", "3")
    _, b = call_json("verify", "ctp-independence", "--fixture", "F3", "--seed", "2", "--resamples", "3")
    assert a["passed"] and b["passed"]
    assert a["config"]["seed"] != b["config"]["seed"]
