import json
import subprocess
import sys

import jsonschema
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from massera.cli import main
from massera.presets import PRESETS
from massera.report import REPORT_SCHEMA, SCHEMA_VERSION


def run(tmp_path, *argv):
    out = tmp_path / "report.json"
    code = main([*argv, "--report", str(out)])
    doc = json.loads(out.read_text()) if out.exists() else None
    if doc is not None:
        jsonschema.validate(doc, REPORT_SCHEMA)
        assert doc["schema"] == SCHEMA_VERSION
    return code, doc


@pytest.mark.parametrize("name", list(PRESETS))
def test_every_preset_validates_and_is_deterministic(tmp_path, name):
    mode = PRESETS[name].kind
    code, doc = run(tmp_path, "analyze", mode, "--preset", name)
    assert code == 0
    first = (tmp_path / "report.json").read_bytes()
    run(tmp_path, "analyze", mode, "--preset", name)
    assert (tmp_path / "report.json").read_bytes() == first
    code, doc = run(tmp_path, "fixed-points", mode, "--preset", name, "--grid", "256")
    assert code == 0


def test_exp1(tmp_path):
    code, doc = run(tmp_path, "analyze", "ode", "--preset", "exP1", "--horizon", "4e5")
    assert code == 0
    assert doc["verdict"] == "NOT_ASYMPTOTICALLY_PERIODIC"
    assert abs(doc["delta"]["alpha"] + 1) < 1e-3 and abs(doc["delta"]["beta"] - 1) < 1e-3


def test_constant_field(tmp_path):
    code, doc = run(tmp_path, "analyze", "ode", "--f", "0", "--tau", "1", "--u0", "2")
    assert code == 0 and doc["verdict"] == "ASYMPTOTICALLY_PERIODIC" and doc["iterate_limit"] == 2.0


def test_beverton_holt_flags(tmp_path):
    code, doc = run(
        tmp_path, "analyze", "map", "--preset", "beverton-holt", "--mu", "2",
        "--K", "8+2*cos(pi*t)+5/(1+t)", "--tau", "2", "--u0", "0.5,5,50",
    )
    assert code == 0
    assert [r["verdict"] for r in doc["runs"]] == ["ASYMPTOTICALLY_PERIODIC"] * 3
    limits = [r["iterate_limit"] for r in doc["runs"]]
    assert max(limits) - min(limits) < 1e-6


def test_fixed_points(tmp_path):
    code, doc = run(tmp_path, "fixed-points", "ode", "--preset", "logistic", "--range", "-0.5", "1.5")
    assert [(round(p["u"], 9), p["stability"]) for p in doc["fixed_points"]] == [
        (0.0, "negatively_asymptotically_stable"),
        (1.0, "positively_asymptotically_stable"),
    ]
    code, doc = run(tmp_path, "fixed-points", "map", "--f", "x", "--tau", "1", "--range", "-1", "1", "--grid", "50")
    assert doc["continuum"] == [[-1.0, 1.0]]
    code, doc = run(tmp_path, "fixed-points", "map", "--K", "100", "--mu", "2", "--tau", "1", "--range", "-1", "200")
    assert [round(p["u"], 6) for p in doc["fixed_points"]] == [0.0, 100.0]
    assert all(p["isolation_gap"] > 99 for p in doc["fixed_points"])


def test_chain(tmp_path):
    edges = tmp_path / "edges.csv"
    code, doc = run(tmp_path, "chain", "--f", "x/2", "--tau", "1", "--range", "0", "1", "--grid", "101", "--eps", "0.01", "--edges", str(edges))
    assert code == 0 and doc["chain"]["recurrent_indices"] == [0]
    assert edges.read_text().startswith("i,j,k_witness")


def test_bebutov(tmp_path):
    code, doc = run(tmp_path, "bebutov", "--phi", "const:0", "--psi", "const:0.25", "--window", "8")
    assert doc["bebutov"]["distance"] == pytest.approx(0.25)
    code, doc = run(tmp_path, "bebutov", "--phi", "expr:t", "--psi", "const:0", "--window", "2", "--eps", "0.5")
    assert doc["bebutov"]["relation"] == "greater"


def test_preset_list(tmp_path):
    code, doc = run(tmp_path, "preset", "list")
    assert [p["name"] for p in doc["presets"]] == ["exP1", "exDP1", "beverton-holt", "logistic", "zero"]


def test_series_export(tmp_path):
    prefix = str(tmp_path / "run_")
    main(["analyze", "ode", "--preset", "logistic", "--series", prefix, "--report", str(tmp_path / "r.json")])
    assert (tmp_path / "run_residuals.csv").read_text().startswith("t,r\n")
    assert (tmp_path / "run_iterates.csv").read_text().startswith("k,u\n0,")


def test_config_file(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"f": "-x + cos(t)", "tau": 6.283185307179586, "u0": [1.0]}))
    code, doc = run(tmp_path, "analyze", "ode", "--config", str(cfg))
    assert code == 0 and doc["iterate_limit"] == pytest.approx(0.5, abs=1e-8)
    cfg.write_text(json.dumps({"g": "x"}))
    assert main(["analyze", "ode", "--config", str(cfg)]) == 1


@pytest.mark.parametrize(
    "argv",
    [
        ["analyze", "ode", "--f", "sqrt(", "--tau", "1"],
        ["analyze", "ode", "--f", "x", "--preset", "zero"],
        ["analyze", "ode", "--f", "x"],
        ["analyze", "ode", "--f", "0", "--tau", "1", "--tol-rel", "-1"],
        ["analyze", "map", "--f", "x", "--tau", "1.5"],
        ["analyze", "ode", "--preset", "nope"],
        ["analyze", "map", "--preset", "exP1"],
        ["analyze", "ode", "--f", "0", "--tau", "1", "--horizon", "5"],
        ["analyze", "ode", "--f", "sqrt(x)", "--tau", "1", "--u0", "-1"],
        ["analyze"],
        ["bogus"],
        ["chain", "--f", "x", "--range", "0", "1", "--eps", "0"],
    ],
)
def test_error_exit_codes(argv, capsys):
    assert main(argv) == 1
    assert "massera:" in capsys.readouterr().err


def test_inconclusive_exit_code(tmp_path):
    code, doc = run(tmp_path, "analyze", "ode", "--f", "1", "--tau", "1")
    assert code == 3 and doc["verdict"] == "INCONCLUSIVE"


@settings(max_examples=40)
@given(
    st.sampled_from(["0", "1", "-x", "x^2", "-x+sin(t)", "cos(t)", "x*(1-x)", "sqrt(", "x+", "log(x)"]),
    st.sampled_from(["1", "0.5", "-1", "0"]),
    st.sampled_from([None, "1e-6", "-1e-6"]),
)
def test_exit_code_contract(tmp_path_factory, f, u0, tol):
    tmp = tmp_path_factory.mktemp("cli")
    argv = ["analyze", "ode", f"--f={f}", "--tau", "6.283185307179586", f"--u0={u0}", "--horizon", "200", "--report", str(tmp / "r.json")]
    if tol:
        argv += ["--tol-s", tol]
    code = main(argv)
    if f in ("sqrt(", "x+") or tol == "-1e-6":
        assert code == 1
        return
    if code == 1:
        # only solver failures may error out on well-formed input
        assert f == "log(x)"
        return
    doc = json.loads((tmp / "r.json").read_text())
    jsonschema.validate(doc, REPORT_SCHEMA)
    assert code == (3 if doc["verdict"] == "INCONCLUSIVE" else 0)


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "massera", "preset", "list"], capture_output=True, text=True)
    assert res.returncode == 0 and '"preset-list"' in res.stdout
