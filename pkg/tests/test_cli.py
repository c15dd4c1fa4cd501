import csv
import io
import json
import math
import subprocess
import sys

import pytest

from freevis.cli import SUBCOMMANDS, parse_class_set, run


def call(*argv):
    out = io.StringIO()
    code = run(["--quiet" if a == "-q" else a for a in argv], stdout=out)
    return code, out.getvalue()


def rows(text):
    body = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(body))


def test_lattice_density_csv():
    code, text = call("lattice-density", "--k", "2", "--t", "1", "--r", "1000", "--format", "csv", "--steps", "4")
    assert code == 0
    assert text.startswith("# config: ")
    cfg = json.loads(text.splitlines()[0][len("# config: "):])
    assert cfg["k"] == 2 and cfg["r"] == 1000
    table = rows(text)
    assert [r["r"] for r in table] == ["250", "500", "750", "1000"]
    last = table[-1]
    assert last["density_exact"] == f"{last['hits']}/{last['total']}" or "/" in last["density_exact"]
    assert float(last["theoretical"]) == pytest.approx(6 / math.pi**2, rel=1e-11)
    assert float(last["abs_error"]) <= 5e-3


def test_group_series_visible():
    code, text = call("group-series", "--k", "2", "--set", "visible", "--n-max", "60", "-q")
    assert code == 0
    table = rows(text)
    assert len(table) == 60
    assert table[1]["s_exact"] == "2/3"
    assert float(table[1]["s"]) == pytest.approx(2 / 3)
    assert table[0]["Q"] == ""
    assert abs(float(table[-1]["Q"]) - 6 / math.pi**2) < 0.01


def test_group_series_other_targets():
    code, text = call("group-series", "--set", "1,2", "--n-max", "10", "-q")
    assert code == 0
    assert float(rows(text)[0]["limit"]) == pytest.approx(1.25 * 6 / math.pi**2)
    code, text = call("group-series", "--set", "test-elements", "--n-max", "10", "-q")
    assert code == 0 and rows(text)[1]["s_exact"] == "0"
    code, _ = call("group-series", "--set", "t-visible", "--t", "2", "--k", "3", "--n-max", "6", "-q")
    assert code == 0


def test_test_elements_exact_vs_hybrid():
    _, a = call("test-elements", "--n-max", "8", "--mode", "exact", "-q")
    _, b = call("test-elements", "--n-max", "8", "--mode", "hybrid", "-q")
    assert [r["s_exact"] for r in rows(a)] == [r["s_exact"] for r in rows(b)]


def test_llt_check_and_expected_gcd_json():
    code, text = call("llt-check", "--n", "20", "40", "--format", "json", "-q")
    assert code == 0
    payload = json.loads(text)
    errs = [r["sup_error"] for r in payload["rows"]]
    assert errs[0] > errs[1]
    code, text = call("expected-gcd", "--n-max", "3", "--format", "json", "-q")
    payload = json.loads(text)
    assert payload["rows"][1]["T_prime_exact"] == "4/3"
    assert payload["rows"][1]["T_exact"] == "7/6"


def test_zeta():
    code, text = call("zeta", "--k", "3", "--eps", "1e-9")
    assert code == 0
    assert float(rows(text)[0]["zeta"]) == pytest.approx(1.202056903, abs=1e-9)


def test_sample_json_fields():
    code, text = call("sample", "--n", "30", "--samples", "2000", "--seed", "5", "--format", "json", "--threads", "1")
    assert code == 0
    result = json.loads(text)["result"]
    assert set(result) == {"n", "samples", "estimate", "se", "seed", "predicate"}
    code, text2 = call("sample", "--n", "30", "--samples", "2000", "--seed", "5", "--format", "json", "--threads", "1")
    assert text == text2
    code, _ = call("sample", "--n", "8", "--samples", "200", "--predicate", "test-elements", "--threads", "1")
    assert code == 0


def test_oracle_check_exit_code():
    code, text = call("oracle-check", "--k", "2", "--n-max", "7", "-q")
    assert code == 0
    assert all(r["ok"] == "True" for r in rows(text))


def test_deterministic_output():
    a = call("group-series", "--n-max", "30", "-q", "--threads", "1")
    b = call("group-series", "--n-max", "30", "-q", "--threads", "1")
    assert a == b


def test_plot_data_and_script(tmp_path):
    data = tmp_path / "q.dat"
    script = tmp_path / "q.gp"
    code, _ = call("group-series", "--n-max", "20", "-q", "--format", "plot-data",
                   "--output", str(data), "--plot-script", str(script))
    assert code == 0
    lines = [ln for ln in data.read_text().splitlines() if not ln.startswith("#")]
    assert len(lines) == 19 and len(lines[0].split()) == 2
    assert str(data) in script.read_text()


def test_validation_errors(capsys):
    assert call("bogus")[0] == 2
    assert call("zeta", "--nope")[0] == 2
    assert call("group-series", "--n-max", "0")[0] == 2
    assert call("lattice-density", "--set", "x,y")[0] == 2
    assert call("sample", "--samples", "3")[0] == 2
    assert call("zeta", "--k", "1")[0] == 2
    assert "usage" in capsys.readouterr().err


def test_budget_exit_code(monkeypatch):
    monkeypatch.setenv("FREEVIS_MEMORY_BUDGET", "1000")
    assert call("group-series", "--n-max", "50", "-q")[0] == 3
    monkeypatch.delenv("FREEVIS_MEMORY_BUDGET")
    assert call("group-series", "--n-max", "50", "-q", "--budget", "10")[0] == 3
    assert call("test-elements", "--n-max", "20", "--mode", "exact", "-q")[0] == 3


def test_parse_class_set():
    s = parse_class_set("2,3,inf")
    assert 2 in s and 3 in s and math.inf in s and 1 not in s
    assert 7 in parse_class_set(">=2") and 1 not in parse_class_set(">=2")
    assert 10**6 in parse_class_set("all")


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "freevis", "zeta", "--k", "2"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "1.64493406685" in proc.stdout
    assert len(SUBCOMMANDS) == 8
