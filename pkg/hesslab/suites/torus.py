# hesslab/suites/torus.py
"""torus: the periodic equation, its gauge, symmetries and comparison."""
import logging
import math
from concurrent.futures import Executor

import numpy as np

from hesslab.config import RunConfig
from hesslab.field import GridDomain, GridField
from hesslab.funcs import make_field, parse_spec
from hesslab.potential import torus_comparison_check
from hesslab.reports import Criterion, CsvReport
from hesslab.solver import SolveConfig, solve_torus
from hesslab.suites import SuiteResult, ordered_map

log = logging.getLogger(__name__)

COLUMNS = ["case", "points", "h", "residual", "target_residual", "iterations", "max_u", "kappa"]


def torus_points(cfg: RunConfig) -> int:
    if cfg.spacing is None:
        return cfg.grid
    return max(5, int(round(1.0 / cfg.spacing)))


def _solve(args):
    label, f, m, cfg = args
    return label, solve_torus(f, m, cfg)


def run(cfg: RunConfig, pool: Executor) -> SuiteResult:
    n, m = cfg.n, cfg.m
    dom = GridDomain.torus(n, torus_points(cfg))
    scfg = SolveConfig(max_iter=cfg.max_iter, tol_residual=min(cfg.tol, 1e-9))
    perturbed = cfg.f if parse_spec(cfg.f).kind == "cos" else "cos:0.1"
    f = make_field(perturbed, dom, m)
    shift = max(1, dom.shape[0] // 3)
    f_shifted = f.with_values(np.roll(f.values, shift, axis=0))
    partner = make_field("cos:0.05", dom, m)
    partner = partner.with_values(np.roll(partner.values, shift, axis=0))

    jobs = [
        ("constant", GridField.constant(dom, float(math.comb(n, m))), m, scfg),
        ("perturbed", f, m, scfg),
        ("shifted", f_shifted, m, scfg),
        ("partner", partner, m, scfg),
    ]
    reports = dict(ordered_map(pool, _solve, jobs))

    rep = CsvReport("torus", COLUMNS)
    for label, r in reports.items():
        rep.add(case=label, points=dom.shape[0], h=dom.h, residual=r.residual, target_residual=r.target_residual,
                iterations=r.wall_iterations, max_u=float(np.max(r.solution.values)), kappa=r.normalization_constant)

    u0 = reports["constant"].solution.values
    u = reports["perturbed"].solution.values
    criteria = [
        Criterion.at_most("torus.constant", float(np.max(np.abs(u0))), 1e-10),
        Criterion.at_most("torus.residual", reports["perturbed"].residual, 1e-7),
        Criterion.at_most("torus.gauge", abs(float(np.max(u))), 0.0),
    ]

    # cos data depends on x_1 only, so must the solution
    drift = 0.0
    for axis in range(1, dom.dim):
        drift = max(drift, float(np.max(np.abs(u - np.roll(u, 1, axis=axis)))))
    criteria.append(Criterion.at_most("torus.symmetry", drift, 1e-8))

    moved = reports["shifted"].solution.values
    criteria.append(Criterion.at_most("torus.translation",
                                      float(np.max(np.abs(moved - np.roll(u, shift, axis=0)))), 1e-6))

    uf = reports["perturbed"].solution
    vf = reports["partner"].solution
    offset = float(np.median(uf.values - vf.values))
    lhs, rhs = torus_comparison_check(uf, vf + offset, m)
    log.info("torus comparison lhs=%.6g rhs=%.6g", lhs, rhs)
    criteria.append(Criterion.at_most("torus.comparison", lhs - rhs, dom.h))
    return SuiteResult(criteria=criteria, reports=[rep], fields={"torus_solution.hf": uf})
