# hesslab/suites/solve.py
"""solve: one Dirichlet solve from named data, plus the radial refinement ladder."""
import logging
import math
from concurrent.futures import Executor

import numpy as np

from hesslab.config import RunConfig, grid_points
from hesslab.errors import ConfigError
from hesslab.field import INTERIOR, GridDomain, GridField, msh_certificate
from hesslab.fieldio import read_field
from hesslab.funcs import make_field, parse_spec
from hesslab.radial import solve_radial
from hesslab.reports import Criterion, CsvReport
from hesslab.solver import SolveConfig, poisson_solve, premollify, solve_dirichlet
from hesslab.suites import SuiteResult, make_domain, ordered_map

log = logging.getLogger(__name__)

DIAG_COLUMNS = ["iter", "residual", "step", "violations"]


def solve_config(cfg: RunConfig) -> SolveConfig:
    return SolveConfig(max_iter=cfg.max_iter, tol_residual=cfg.tol)


def _exact_quadratic(cfg: RunConfig, dom: GridDomain):
    """c|z|² when f = const:C(n,m)c^m and φ = quad:c, else None."""
    f, phi = parse_spec(cfg.f), parse_spec(cfg.phi)
    if f.kind != "const" or phi.kind != "quad":
        return None
    c = phi.params[0]
    if c <= 0 or not math.isclose(f.params[0], math.comb(cfg.n, cfg.m) * c ** cfg.m, rel_tol=1e-12):
        return None
    return GridField.from_function(dom, lambda x: c * np.sum((x - dom.center) ** 2, axis=-1))


def run_single(cfg: RunConfig, pool: Executor) -> SuiteResult:
    """With `input` set, the HESSFIELD file supplies both the grid and the boundary data."""
    if cfg.input:
        phi = read_field(cfg.input)
        dom = phi.domain
        if dom.n != cfg.n or dom.kind == "torus":
            raise ConfigError(f"{cfg.input} holds a {dom.kind} field with n={dom.n}",
                              detail=f"solve needs a box or ball field with n={cfg.n}")
    else:
        dom = make_domain(cfg.domain, cfg.n, grid_points(cfg))
        phi = make_field(cfg.phi, dom, cfg.m)
    f = make_field(cfg.f, dom, cfg.m)
    if parse_spec(cfg.f).kind == "sing":
        f = premollify(f)
    report = solve_dirichlet(f, phi, cfg.m, solve_config(cfg))
    u = report.solution

    diag = CsvReport("solve_diagnostics", DIAG_COLUMNS)
    diag.extend(report.diagnostics_rows())
    criteria = [
        Criterion.at_most("solve.residual", report.residual, cfg.tol),
        Criterion.at_most("solve.certificate", float(len(msh_certificate(u, cfg.m, 0.0))), 0.0),
    ]
    if report.lifts:
        # f + ε_last with ε_last ≤ tol moves f^{1/m} by at most tol^{1/m}
        criteria.append(Criterion.at_most("solve.unlifted_residual", report.target_residual,
                                          cfg.tol ** (1.0 / cfg.m) + cfg.tol))
    exact = None if cfg.input else _exact_quadratic(cfg, dom)
    interior = dom.mask == INTERIOR
    if exact is not None:
        err = float(np.max(np.abs(u.values - exact.values)[interior]))
        criteria.append(Criterion.at_most("solve.quadratic", err, max(1e-8, 10.0 * dom.h ** 2)))
    if cfg.m == 1:
        ref = poisson_solve(f, phi)
        err = float(np.max(np.abs(u.values - ref.values)[interior]))
        criteria.append(Criterion.at_most("solve.poisson", err, 1e-8))
    return SuiteResult(criteria=criteria, reports=[diag], fields={cfg.output or "solution.hf": u})


def _radial_density(t):
    return 1.0 + np.asarray(t, dtype=float)


def _ladder_step(args):
    points, oracle, tol = args
    dom = GridDomain.ball(2, points)
    f = GridField.from_function(dom, lambda x: _radial_density(np.sum(x * x, axis=-1)))
    phi = GridField.from_function(dom, lambda x: oracle.g(np.sum(x * x, axis=-1)))
    report = solve_dirichlet(f, phi, 2, SolveConfig(tol_residual=tol))
    interior = dom.mask == INTERIOR
    t = np.sum(dom.points()[interior] ** 2, axis=-1)
    err = float(np.max(np.abs(report.solution.values[interior] - oracle.g(t))))
    return {"points": points, "h": dom.h, "max_error": err, "iterations": report.wall_iterations,
            "residual": report.residual}


def run_ladder(cfg: RunConfig, pool: Executor) -> SuiteResult:
    """n=2, m=2, f = 1 + |z|² on the unit ball against the radial ODE solution."""
    oracle = solve_radial(_radial_density, 2, 2, boundary_value=0.0)
    rows = ordered_map(pool, _ladder_step, [(p, oracle, cfg.tol) for p in (17, 25, 33)])
    rep = CsvReport("solve_ladder", ["points", "h", "max_error", "iterations", "residual"])
    rep.extend(rows)
    a, b = rows[-2], rows[-1]
    order = math.log(a["max_error"] / b["max_error"]) / math.log(a["h"] / b["h"])
    return SuiteResult(criteria=[Criterion.at_least("solve.radial_order", order, 1.8)], reports=[rep])


def run(cfg: RunConfig, pool: Executor) -> SuiteResult:
    if cfg.suite in ("all", "single"):
        return run_single(cfg, pool)
    if cfg.suite == "ladder":
        return run_ladder(cfg, pool)
    raise ConfigError(f"unknown solve suite {cfg.suite!r}", detail="choose from single, ladder")
