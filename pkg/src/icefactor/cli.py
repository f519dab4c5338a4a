"""Command-line interface for the full pipeline.

Exit codes: 0 success, 1 input/format errors, 2 numerical failures.
With ``--json-errors`` a machine-readable error object is printed to
stderr before exiting.
"""

from __future__ import annotations

import functools
import json
import sys

import click

from .errors import IceFactorError, InputError, NumericalError
from .estimation import EMConfig, FitResult, fit_em
from .extraction import ExtractedSeries, compare_normalizations, extract_factor
from .ingestion import (DEFAULT_SOURCES, build_panel, parse_source,
                        read_panel_csv, write_panel_csv)
from .model import ModelParams, anchor_index, build_design_matrix
from .months import format_month, parse_month
from .simulation import (SimConfig, monte_carlo_recovery,
                         reference_params, simulate)


def _handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        ctx = click.get_current_context()
        json_errors = ctx.obj.get("json_errors", False)
        try:
            return fn(*args, **kwargs)
        except IceFactorError as exc:
            code = 2 if isinstance(exc, NumericalError) else 1
            if json_errors:
                payload = {"error": type(exc).__name__, "message": str(exc),
                           "exit_code": code}
                if isinstance(exc, NumericalError):
                    payload["period"] = exc.period
                    payload["block"] = exc.block
                click.echo(json.dumps(payload), err=True)
            else:
                click.echo(f"error: {exc}", err=True)
            sys.exit(code)
    return wrapper


@click.group()
@click.option("--json-errors", is_flag=True,
              help="Emit machine-readable error JSON on stderr.")
@click.pass_context
def main(ctx, json_errors):
    """Combine noisy sea-ice extent indicators into one latent series."""
    ctx.ensure_object(dict)
    ctx.obj["json_errors"] = json_errors


@main.command()
@click.option("--sii", type=click.Path(exists=True), default=None)
@click.option("--jaxa", type=click.Path(exists=True), default=None)
@click.option("--bremen", type=click.Path(exists=True), default=None)
@click.option("--goddard", type=click.Path(exists=True), default=None)
@click.option("--out", "-o", required=True, type=click.Path())
@click.option("--report", type=click.Path(), default=None,
              help="Write the ingestion report JSON here.")
@_handle_errors
def ingest(sii, jaxa, bremen, goddard, out, report):
    """Parse raw source files into the panel CSV."""
    paths = {"SII": sii, "JAXA": jaxa, "Bremen": bremen, "Goddard": goddard}
    series = [parse_source(path, DEFAULT_SOURCES[name])
              for name, path in paths.items() if path]
    if not series:
        raise InputError("at least one source file is required")
    panel, panel_report = build_panel(series)
    write_panel_csv(panel, out)
    if report:
        with open(report, "w", encoding="utf-8") as fh:
            fh.write(panel_report.to_json())
    click.echo(f"wrote {panel.n_periods} months x {panel.n_indicators} "
               f"indicators to {out}")


def _em_config(max_iters, tol, param_tol, no_se):
    return EMConfig(max_iters=max_iters, loglik_tol=tol, param_tol=param_tol,
                    compute_se=not no_se)


@main.command()
@click.argument("panel_csv", type=click.Path(exists=True))
@click.option("--anchor", type=click.Choice(["S", "J", "B", "G"]),
              default="S", show_default=True)
@click.option("--max-iters", type=int, default=5000, show_default=True)
@click.option("--tol", type=float, default=1e-9, show_default=True,
              help="Relative log-likelihood convergence tolerance.")
@click.option("--param-tol", type=float, default=1e-7, show_default=True)
@click.option("--time-origin", default=None,
              help="Month mapped to TIME=1 (YYYY-MM); default first month.")
@click.option("--no-se", is_flag=True, help="Skip standard errors.")
@click.option("--out", "-o", required=True, type=click.Path())
@_handle_errors
def fit(panel_csv, anchor, max_iters, tol, param_tol, time_origin, no_se, out):
    """Estimate the model on a panel CSV; write the fit as JSON."""
    panel = read_panel_csv(panel_csv)
    origin = parse_month(time_origin) if time_origin else panel.dates[0]
    design = build_design_matrix(panel.dates, time_origin=origin)
    idx = anchor_index(anchor, panel.names)
    result = fit_em(panel, design, idx,
                    _em_config(max_iters, tol, param_tol, no_se))
    with open(out, "w", encoding="utf-8") as fh:
        fh.write(result.to_json())
    tail = result.loglik_trace[-1]
    click.echo(f"converged={result.converged} iters="
               f"{result.diagnostics.get('n_iters')} loglik={tail:.6f}")


@main.command()
@click.argument("fit_json", type=click.Path(exists=True))
@click.argument("panel_csv", type=click.Path(exists=True))
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]),
              default="csv", show_default=True)
@click.option("--out", "-o", required=True, type=click.Path())
@_handle_errors
def extract(fit_json, panel_csv, fmt, out):
    """Write the smoothed latent series for a previous fit."""
    with open(fit_json, "r", encoding="utf-8") as fh:
        result = FitResult.from_json(fh.read())
    panel = read_panel_csv(panel_csv)
    design = build_design_matrix(panel.dates,
                                 time_origin=result.time_origin)
    series = extract_factor(result, panel, design)
    text = series.to_csv() if fmt == "csv" else series.to_json()
    with open(out, "w", encoding="utf-8") as fh:
        fh.write(text)
    click.echo(f"wrote extraction ({series.anchor} anchor) to {out}")


@main.command()
@click.argument("extraction_x", type=click.Path(exists=True))
@click.argument("extraction_y", type=click.Path(exists=True))
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]),
              default="csv", show_default=True)
@click.option("--out", "-o", required=True, type=click.Path())
@_handle_errors
def compare(extraction_x, extraction_y, fmt, out):
    """Per-month OLS of extraction Y on extraction X."""
    with open(extraction_x, "r", encoding="utf-8") as fh:
        ex = ExtractedSeries.from_csv(fh.read())
    with open(extraction_y, "r", encoding="utf-8") as fh:
        ey = ExtractedSeries.from_csv(fh.read())
    comp = compare_normalizations(ex, ey)
    with open(out, "w", encoding="utf-8") as fh:
        fh.write(comp.to_csv() if fmt == "csv" else comp.to_json())
    ok = [r for r in comp.records if r.ok]
    if ok:
        click.echo(f"min per-month R^2: {min(r.r_squared for r in ok):.6f}")


def _load_params(path) -> ModelParams:
    if path is None:
        return reference_params()
    with open(path, "r", encoding="utf-8") as fh:
        return ModelParams.from_json(fh.read())


@main.command("simulate")
@click.option("--params", "params_path", type=click.Path(exists=True),
              default=None, help="Truth parameters JSON; default: published "
              "four-indicator estimates.")
@click.option("--periods", type=int, default=506, show_default=True)
@click.option("--start", default="1978-11", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--noise", type=click.Choice(["gaussian", "student-t"]),
              default="gaussian", show_default=True)
@click.option("--t-dof", type=float, default=5.0, show_default=True)
@click.option("--out", "-o", required=True, type=click.Path())
@click.option("--states-out", type=click.Path(), default=None,
              help="Also write the true latent path as CSV.")
@_handle_errors
def simulate_cmd(params_path, periods, start, seed, noise, t_dof, out,
                 states_out):
    """Generate a synthetic panel CSV from model parameters."""
    config = SimConfig(params=_load_params(params_path), periods=periods,
                       start=parse_month(start), seed=seed,
                       noise=noise.replace("-", "_"), t_dof=t_dof)
    panel, states = simulate(config)
    write_panel_csv(panel, out)
    if states_out:
        with open(states_out, "w", encoding="utf-8") as fh:
            fh.write("date,state\n")
            for d, x in zip(panel.dates, states):
                fh.write(f"{format_month(d)},{x!r}\n")
    click.echo(f"wrote simulated panel ({periods} months) to {out}")


@main.command()
@click.option("--params", "params_path", type=click.Path(exists=True),
              default=None)
@click.option("--periods", type=int, default=506, show_default=True)
@click.option("--reps", type=int, default=50, show_default=True)
@click.option("--start", default="1978-11", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--max-iters", type=int, default=500, show_default=True)
@click.option("--tol", type=float, default=1e-9, show_default=True)
@click.option("--param-tol", type=float, default=1e-7, show_default=True)
@click.option("--no-se", is_flag=True,
              help="Skip per-fit standard errors (much faster; no coverage).")
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]),
              default="csv", show_default=True)
@click.option("--out", "-o", required=True, type=click.Path())
@_handle_errors
def mc(params_path, periods, reps, start, seed, max_iters, tol, param_tol,
       no_se, fmt, out):
    """Monte Carlo parameter-recovery study."""
    config = SimConfig(params=_load_params(params_path), periods=periods,
                       start=parse_month(start), seed=seed)
    report = monte_carlo_recovery(
        config, reps, _em_config(max_iters, tol, param_tol, no_se))
    with open(out, "w", encoding="utf-8") as fh:
        fh.write(report.to_csv() if fmt == "csv" else report.to_json())
    click.echo(f"{report.replications} replications "
               f"({report.failed_fits} failed) -> {out}")


if __name__ == "__main__":
    main()
