"""End-to-end CLI tests: exit codes, determinism, and the full pipeline."""

import json

import pytest
from click.testing import CliRunner

from icefactor.cli import main
from icefactor.estimation import FitResult
from icefactor.extraction import ExtractedSeries
from icefactor.ingestion import read_panel_csv
from conftest import FIXTURES


@pytest.fixture
def runner():
    return CliRunner()


def _run(runner, args, expect=0):
    result = runner.invoke(main, args, catch_exceptions=False)
    assert result.exit_code == expect, result.output
    return result


def test_ingest_pipeline(runner, tmp_path):
    out = tmp_path / "panel.csv"
    rep = tmp_path / "report.json"
    _run(runner, ["ingest",
                  "--sii", str(FIXTURES / "sii_sample.csv"),
                  "--jaxa", str(FIXTURES / "jaxa_sample.csv"),
                  "--bremen", str(FIXTURES / "bremen_sample.txt"),
                  "--goddard", str(FIXTURES / "goddard_sample.csv"),
                  "-o", str(out), "--report", str(rep)])
    assert out.read_text() == (FIXTURES / "golden_panel.csv").read_text()
    report = json.loads(rep.read_text())
    assert report["overlap_start"] == "1990-01"
    assert report["missing_months"]["SII"] == 1


def test_ingest_requires_a_source(runner, tmp_path):
    result = runner.invoke(main, ["ingest", "-o", str(tmp_path / "p.csv")])
    assert result.exit_code == 1


def test_simulate_is_byte_deterministic(runner, tmp_path):
    a, b, c = (tmp_path / n for n in ("a.csv", "b.csv", "c.csv"))
    args = ["simulate", "--periods", "48", "--seed", "7"]
    _run(runner, args + ["-o", str(a)])
    _run(runner, args + ["-o", str(b)])
    _run(runner, ["simulate", "--periods", "48", "--seed", "8",
                  "-o", str(c)])
    assert a.read_bytes() == b.read_bytes()
    assert a.read_bytes() != c.read_bytes()


def test_simulate_states_and_student_t(runner, tmp_path):
    panel = tmp_path / "panel.csv"
    states = tmp_path / "states.csv"
    _run(runner, ["simulate", "--periods", "36", "--seed", "1",
                  "--noise", "student-t", "--t-dof", "4",
                  "-o", str(panel), "--states-out", str(states)])
    lines = states.read_text().splitlines()
    assert lines[0] == "date,state"
    assert len(lines) == 37
    read_panel_csv(panel, range_check=False)


def test_fit_extract_compare_pipeline(runner, tmp_path):
    panel = tmp_path / "panel.csv"
    _run(runner, ["simulate", "--periods", "240", "--seed", "3",
                  "-o", str(panel)])
    fit_s = tmp_path / "fit_s.json"
    fit_g = tmp_path / "fit_g.json"
    common = [str(panel), "--max-iters", "2000", "--tol", "1e-8",
              "--param-tol", "1e-5", "--no-se"]
    _run(runner, ["fit", *common, "--anchor", "S", "-o", str(fit_s)])
    _run(runner, ["fit", *common, "--anchor", "G", "-o", str(fit_g)])
    result = FitResult.from_json(fit_s.read_text())
    assert result.converged
    assert abs(result.params.rho - 0.704) < 0.15

    ex_s = tmp_path / "ex_s.csv"
    ex_g = tmp_path / "ex_g.csv"
    _run(runner, ["extract", str(fit_s), str(panel), "-o", str(ex_s)])
    _run(runner, ["extract", str(fit_g), str(panel), "-o", str(ex_g)])
    s = ExtractedSeries.from_csv(ex_s.read_text())
    g = ExtractedSeries.from_csv(ex_g.read_text())
    assert s.anchor == "SII" and g.anchor == "Goddard"
    assert len(s.mean) == 240

    comp = tmp_path / "comp.csv"
    out = _run(runner, ["compare", str(ex_s), str(ex_g), "-o", str(comp)])
    assert "min per-month R^2" in out.output
    rows = comp.read_text().splitlines()
    assert rows[0] == "month,intercept,slope,r_squared,n,ok"
    assert len(rows) == 13
    r2 = [float(r.split(",")[3]) for r in rows[1:]]
    assert min(r2) > 0.99


def test_extract_json_format(runner, tmp_path):
    panel = tmp_path / "panel.csv"
    _run(runner, ["simulate", "--periods", "120", "--seed", "4",
                  "-o", str(panel)])
    fit = tmp_path / "fit.json"
    _run(runner, ["fit", str(panel), "--max-iters", "2000", "--tol", "1e-8",
                  "--param-tol", "1e-5", "--no-se", "-o", str(fit)])
    out = tmp_path / "ex.json"
    _run(runner, ["extract", str(fit), str(panel), "--format", "json",
                  "-o", str(out)])
    data = json.loads(out.read_text())
    assert data["anchor"] == "SII" and len(data["mean"]) == 120


def test_input_error_exit_code_and_json(runner, tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("date,SII\nnot-a-month,12.0\n")
    result = runner.invoke(main, ["fit", str(bad), "-o",
                                  str(tmp_path / "f.json")])
    assert result.exit_code == 1
    result = runner.invoke(main, ["--json-errors", "fit", str(bad),
                                  "-o", str(tmp_path / "f.json")])
    assert result.exit_code == 1
    payload = json.loads(result.stderr.splitlines()[-1])
    assert payload["error"] == "InputError"
    assert payload["exit_code"] == 1


def test_mc_command(runner, tmp_path):
    out = tmp_path / "mc.csv"
    _run(runner, ["mc", "--periods", "120", "--reps", "2", "--seed", "5",
                  "--max-iters", "200", "--tol", "1e-6",
                  "--param-tol", "1e-3", "--no-se", "-o", str(out)])
    rows = out.read_text().splitlines()
    assert rows[0] == "param,truth,bias,rmse,median_abs_error,coverage"
    params = {r.split(",")[0] for r in rows[1:]}
    assert {"rho", "sigma2_eta", "lambda_JAXA"} <= params
