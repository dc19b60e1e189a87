import io
import json
from pathlib import Path

import pytest

from pvalgebra.cli import FORMAT_VARIABLE, run

DATA_DIR = Path(__file__).parent / "test_data"


def _run(*argv):
    stdout, stderr = io.StringIO(), io.StringIO()
    code = run(list(argv), stdout=stdout, stderr=stderr)
    return code, stdout.getvalue(), stderr.getvalue()


######################
# check-pva


def test_check_pva_closed_flux():
    code, out, _ = _run("--samples", "2", "check-pva", "--dim", "3", "--flux", str(DATA_DIR / "H3.json"), "--closed")
    assert code == 0, out
    assert "pva_axioms: ok" in out


def test_check_pva_reports_obstruction():
    code, out, _ = _run("--samples", "1", "check-pva", "--dim", "4", "--flux", str(DATA_DIR / "H4.json"))
    assert code == 1
    assert "dH[1,2,3,4]" in out
    assert "FAILED" in out


def test_check_pva_bracket_table():
    code, out, _ = _run("--samples", "2", "check-pva", "--bracket", str(DATA_DIR / "virasoro.json"))
    assert code == 0, out


def test_check_pva_needs_dim_or_bracket():
    code, _, err = _run("check-pva")
    assert code == 2
    assert "--dim" in err


######################
# derive-cd


def test_derive_cd_pairing():
    code, out, _ = _run("derive-cd", "--dim", "1", "--pair", "p1 + d(x1)", "p1 + d(x1)")
    assert code == 0
    assert "pairing[0] = -2" in out


def test_derive_cd_json():
    code, out, _ = _run("--format", "json", "derive-cd", "--dim", "1", "--pair", "p1", "d(x1)")
    assert code == 0
    document = json.loads(out)
    assert document["ok"] is True
    labels = [value["label"] for value in document["values"]]
    assert labels == ["dorfman[0]", "pairing[0]", "courant[0]"]


def test_parse_error_exits_2():
    code, _, err = _run("derive-cd", "--dim", "1", "--pair", "p1 +", "p1")
    assert code == 2
    assert "column 5" in err


######################
# Other subcommands


def test_tdualize_theorem():
    code, out, _ = _run("tdualize", "--pair", str(DATA_DIR / "pair_symbolic.json"), "--check", "theorem")
    assert code == 0, out


def test_tdualize_base_dim_mismatch():
    code, _, _ = _run("tdualize", "--pair", str(DATA_DIR / "pair_symbolic.json"), "--base-dim", "3")
    assert code == 2


def test_quantize_heisenberg():
    code, out, _ = _run("quantize", "--basis", str(DATA_DIR / "heisenberg.json"))
    assert code == 0, out


def test_oracle_generators():
    code, out, _ = _run("--samples", "1", "oracle", "--dim", "2")
    assert code == 0, out


######################
# Input errors


@pytest.mark.parametrize("argv", [[], ["nonsense"], ["check-pva", "--dim", "x"]])
def test_bad_flags(argv):
    code, _, _ = _run(*argv)
    assert code == 2


def test_bad_format_variable(monkeypatch):
    monkeypatch.setenv(FORMAT_VARIABLE, "yaml")
    code, _, err = _run("derive-cd", "--dim", "1")
    assert code == 2
    assert FORMAT_VARIABLE in err


def test_missing_file():
    code, _, _ = _run("quantize", "--basis", str(DATA_DIR / "missing.json"))
    assert code == 2
