# hesslab/cli.py
import logging
import uuid
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, Optional

import typer
from pydantic import ValidationError

from hesslab.config import build_run_config, load_settings, read_config_file
from hesslab.errors import AdmissibilityError, ConfigError, DomainError, LiftOrderError
from hesslab.fieldio import write_field
from hesslab.reports import write_summary
from hesslab.repo import Repo
from hesslab.suites import SuiteResult, capacity, cones, integrability, regularity, solve, stability, torus
from hesslab.ui import (
    banner, print_info, print_success, print_warn, print_error, print_criterion,
    error_to_str, kv_table, simple_table, console, setup_logging,
)

log = logging.getLogger(__name__)

app = typer.Typer(help="HessLab: a numerical laboratory for the complex m-Hessian equation", no_args_is_help=True)

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2, 3

RUNNERS = {
    "verify": cones.run,
    "solve": solve.run,
    "torus": torus.run,
    "capacity": capacity.run,
    "stability": stability.run,
    "integrability": integrability.run,
    "regularity": regularity.run,
}


@app.callback()
def main_options(
    ctx: typer.Context,
    threads: Optional[int] = typer.Option(None, "--threads", min=1, help="Worker pool size (default HESSLAB_THREADS)"),
    out_dir: Optional[str] = typer.Option(None, "--out-dir", help="Directory for CSV, summary and field files"),
    no_ledger: bool = typer.Option(False, "--no-ledger", help="Do not record criteria in the SQLite ledger"),
    log_level: Optional[str] = typer.Option(None, "--log-level", help="DEBUG, INFO, WARNING, ..."),
):
    """
    Options shared by every command. Precedence: flags, then --config file, then HESSLAB_* env.
    """
    try:
        settings = load_settings()
    except ConfigError as e:
        print_error(error_to_str(e))
        raise typer.Exit(code=EXIT_USAGE)
    setup_logging(log_level or settings.log_level)
    ctx.obj = {"settings": settings, "threads": threads, "out_dir": out_dir, "ledger": not no_ledger}


def _field_path(out_dir: str, name: str) -> Path:
    p = Path(name)
    return p if p.parent != Path(".") else Path(out_dir) / p


def _emit(ctx: typer.Context, cfg, result: SuiteResult, run_id: str):
    """Reports, fields, summary and ledger rows, in that order."""
    for rep in result.reports:
        path = rep.write(cfg.out_dir)
        log.info("wrote %s (%d rows)", path, len(rep.rows))
    for name, u in result.fields.items():
        path = write_field(_field_path(cfg.out_dir, name), u)
        print_info(f"Field written: {path}")
    for c in result.criteria:
        print_criterion(c.line(), c.passed)
    write_summary(cfg.out_dir, result.criteria)

    if ctx.obj["ledger"] and result.criteria:
        try:
            Repo(ctx.obj["settings"].db_path).record(run_id, cfg.command, result.criteria)
        except Exception as e:
            print_warn(f"Ledger warning: {e}")


def _execute(ctx: typer.Context, command: str, config: Optional[Path], flags: Dict[str, object]):
    settings = ctx.obj["settings"]
    try:
        file_values = read_config_file(config) if config else {}
        defaults = {"threads": settings.threads, "out_dir": settings.out_dir, "seed": settings.seed}
        overrides = {"threads": ctx.obj["threads"], "out_dir": ctx.obj["out_dir"], **flags}
        cfg = build_run_config(command, {**defaults, **file_values}, overrides)
    except (ValidationError, ConfigError) as e:
        print_error(f"Invalid configuration:\n{error_to_str(e)}")
        raise typer.Exit(code=EXIT_USAGE)

    banner(f"hesslab {command}")
    console.print(kv_table("Run", {
        "n, m": f"{cfg.n}, {cfg.m}", "suite": cfg.suite, "grid": cfg.grid if cfg.spacing is None else f"h={cfg.spacing:g}",
        "seed": cfg.seed, "threads": cfg.threads, "out": cfg.out_dir,
    }))
    run_id = uuid.uuid4().hex[:12]
    with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
        try:
            result = RUNNERS[command](cfg, pool)
        except ConfigError as e:
            print_error(f"Invalid configuration:\n{error_to_str(e)}")
            raise typer.Exit(code=EXIT_USAGE)
        except (AdmissibilityError, DomainError, LiftOrderError) as e:
            print_error(f"Numerical failure:\n{error_to_str(e)}")
            if e.partial is not None:
                print_warn(f"Keeping {len(e.partial.reports)} partial report(s).")
                _emit(ctx, cfg, e.partial, run_id)
            raise typer.Exit(code=EXIT_NUMERICAL)

    _emit(ctx, cfg, result, run_id)
    failed = [c for c in result.criteria if not c.passed]
    if failed:
        print_error(f"{len(failed)} of {len(result.criteria)} criteria failed.")
        raise typer.Exit(code=EXIT_FAIL)
    print_success(f"All {len(result.criteria)} criteria passed.")


def _config_option():
    return typer.Option(None, "--config", exists=True, dir_okay=False, help="key=value file; flags win")


@app.command("verify")
def verify_command(
    ctx: typer.Context,
    suite: Optional[str] = typer.Option(None, "--suite", help="cones, bruteforce, radial or all"),
    samples: Optional[int] = typer.Option(None, "--samples", min=1, help="Samples per (n, m) case"),
    seed: Optional[int] = typer.Option(None, "--seed", min=0),
    config: Optional[Path] = _config_option(),
):
    """
    Cone algebra, brute-force equivalence and radial identities.
    """
    _execute(ctx, "verify", config, {"suite": suite, "samples": samples, "seed": seed})


@app.command("solve")
def solve_command(
    ctx: typer.Context,
    n: Optional[int] = typer.Option(None, "--n"),
    m: Optional[int] = typer.Option(None, "--m"),
    f: Optional[str] = typer.Option(None, "--f", help="const:c, quad:c, radial:G, radial:log, bump:a,r, sing:a"),
    phi: Optional[str] = typer.Option(None, "--phi", help="Boundary data, same syntax as --f"),
    grid: Optional[int] = typer.Option(None, "--grid", help="Points per axis"),
    spacing: Optional[float] = typer.Option(None, "--spacing", help="Grid spacing h (overrides --grid)"),
    domain: Optional[str] = typer.Option(None, "--domain", help="ball or box"),
    suite: Optional[str] = typer.Option(None, "--suite", help="single, ladder or all"),
    tol: Optional[float] = typer.Option(None, "--tol"),
    max_iter: Optional[int] = typer.Option(None, "--max-iter"),
    output: Optional[str] = typer.Option(None, "--output", help="HESSFIELD file for the solution"),
    input_path: Optional[str] = typer.Option(None, "--input", help="HESSFIELD file giving grid and boundary data"),
    config: Optional[Path] = _config_option(),
):
    """
    Dirichlet problem σ_m(u) = f, u = φ on the boundary.
    """
    _execute(ctx, "solve", config, {
        "n": n, "m": m, "f": f, "phi": phi, "grid": grid, "spacing": spacing, "domain": domain,
        "suite": suite, "tol": tol, "max_iter": max_iter, "output": output, "input": input_path,
    })


@app.command("torus")
def torus_command(
    ctx: typer.Context,
    n: Optional[int] = typer.Option(None, "--n"),
    m: Optional[int] = typer.Option(None, "--m"),
    f: Optional[str] = typer.Option(None, "--f", help="cos:a perturbation of the constant density"),
    grid: Optional[int] = typer.Option(None, "--grid", help="Points per period"),
    spacing: Optional[float] = typer.Option(None, "--spacing"),
    tol: Optional[float] = typer.Option(None, "--tol"),
    max_iter: Optional[int] = typer.Option(None, "--max-iter"),
    config: Optional[Path] = _config_option(),
):
    """
    Flat torus equation with mean-normalized density and max u = 0 gauge.
    """
    _execute(ctx, "torus", config, {"n": n, "m": m, "f": f, "grid": grid, "spacing": spacing,
                                     "tol": tol, "max_iter": max_iter})


@app.command("capacity")
def capacity_command(
    ctx: typer.Context,
    n: Optional[int] = typer.Option(None, "--n"),
    m: Optional[int] = typer.Option(None, "--m"),
    grid: Optional[int] = typer.Option(None, "--grid"),
    spacing: Optional[float] = typer.Option(None, "--spacing"),
    radii: Optional[str] = typer.Option(None, "--radii", help="Radii of the compact balls, e.g. 0.3,0.4,0.5"),
    p_sweep: Optional[str] = typer.Option(None, "--p-sweep", help="Volume-capacity exponents"),
    suite: Optional[str] = typer.Option(None, "--suite", help="balls, frontier, sublevel or all"),
    config: Optional[Path] = _config_option(),
):
    """
    m-capacities of balls, the volume-capacity frontier and sublevel estimates.
    """
    _execute(ctx, "capacity", config, {"n": n, "m": m, "grid": grid, "spacing": spacing,
                                        "radii": radii, "p_sweep": p_sweep, "suite": suite})


@app.command("stability")
def stability_command(
    ctx: typer.Context,
    n: Optional[int] = typer.Option(None, "--n"),
    m: Optional[int] = typer.Option(None, "--m"),
    grid: Optional[int] = typer.Option(None, "--grid"),
    spacing: Optional[float] = typer.Option(None, "--spacing"),
    q_sweep: Optional[str] = typer.Option(None, "--q-sweep", help="First value is the L^q exponent"),
    delta_sweep: Optional[str] = typer.Option(None, "--delta-sweep", help="Perturbation sizes"),
    suite: Optional[str] = typer.Option(None, "--suite", help="sweep, equicontinuity or all"),
    config: Optional[Path] = _config_option(),
):
    """
    Stability of solutions under L^q perturbations of the density.
    """
    _execute(ctx, "stability", config, {"n": n, "m": m, "grid": grid, "spacing": spacing,
                                         "q_sweep": q_sweep, "delta_sweep": delta_sweep, "suite": suite})


@app.command("integrability")
def integrability_command(
    ctx: typer.Context,
    n: Optional[int] = typer.Option(None, "--n"),
    m: Optional[int] = typer.Option(None, "--m"),
    q_sweep: Optional[str] = typer.Option(None, "--q-sweep", help="e.g. 2.0:6.5:0.5"),
    p_sweep: Optional[str] = typer.Option(None, "--p-sweep", help="Exponents for σ_m(log|z|)"),
    delta_sweep: Optional[str] = typer.Option(None, "--delta-sweep", help="Shell radii"),
    config: Optional[Path] = _config_option(),
):
    """
    L^q growth of the m-Green profile and of σ_m(log|z|) near the pole.
    """
    _execute(ctx, "integrability", config, {"n": n, "m": m, "q_sweep": q_sweep, "p_sweep": p_sweep,
                                             "delta_sweep": delta_sweep})


@app.command("regularity")
def regularity_command(
    ctx: typer.Context,
    n: Optional[int] = typer.Option(None, "--n"),
    m: Optional[int] = typer.Option(None, "--m"),
    grid: Optional[int] = typer.Option(None, "--grid"),
    spacing: Optional[float] = typer.Option(None, "--spacing"),
    eps_sweep: Optional[str] = typer.Option(None, "--eps-sweep", help="Averaging radii in units of h"),
    suite: Optional[str] = typer.Option(None, "--suite", help="tepsilon, comparison, garding or all"),
    seed: Optional[int] = typer.Option(None, "--seed", min=0),
    config: Optional[Path] = _config_option(),
):
    """
    T_ε identities, comparison principles and weak Gårding on solver outputs.
    """
    _execute(ctx, "regularity", config, {"n": n, "m": m, "grid": grid, "spacing": spacing,
                                          "eps_sweep": eps_sweep, "suite": suite, "seed": seed})


@app.command("history")
def history_command(
    ctx: typer.Context,
    criterion: str = typer.Argument(..., help="Criterion id, e.g. solve.residual"),
    limit: int = typer.Option(20, "--limit", min=1, show_default=True),
):
    """
    Past measurements of one criterion from the ledger.
    """
    try:
        rows = Repo(ctx.obj["settings"].db_path).history(criterion)
    except Exception as e:
        print_error(f"Ledger error:\n{e}")
        raise typer.Exit(code=EXIT_FAIL)
    if not rows:
        print_warn(f"No ledger entries for {criterion}.")
        return
    data = [{"run": r.run_id, "command": r.command, "measured": f"{r.measured:.6g}", "bound": f"{r.bound:.6g}",
             "result": "PASS" if r.passed else "FAIL", "when": r.created_at.isoformat(timespec="seconds")}
            for r in rows[-limit:]]
    console.print(simple_table(f"History of {criterion}", ["run", "command", "measured", "bound", "result", "when"], data))


def main():
    app()


if __name__ == "__main__":
    main()
