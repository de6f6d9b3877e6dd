# hesslab/suites/stability.py
"""stability: δ-sweeps of the density and norm estimates, and the equicontinuity moduli."""
import logging
import math
from concurrent.futures import Executor

import numpy as np

from hesslab.config import RunConfig, grid_points
from hesslab.errors import ConfigError
from hesslab.field import GridDomain, GridField
from hesslab.funcs import make_field
from hesslab.potential import (
    equicontinuity_probe,
    linfty_bound,
    stability_exponents,
    stability_norm,
    stability_sweep,
)
from hesslab.reports import Criterion, CsvReport
from hesslab.solver import SolveConfig, solve_dirichlet
from hesslab.suites import SuiteResult, run_parts

log = logging.getLogger(__name__)

DEFAULT_DELTAS = (1e-1, 3e-2, 1e-2, 3e-3, 1e-3)
FAMILY = (1, 2, 4)


def default_q(n: int, m: int) -> float:
    return 2.0 * n / m


def default_p_prime(n: int, m: int, q: float) -> float:
    q_conj = q / (q - 1.0)
    if m == n:
        return 2.0 * q_conj
    return 0.5 * (q_conj + n / (n - m))


def run_sweep(cfg: RunConfig, dom: GridDomain, scfg: SolveConfig, q: float) -> SuiteResult:
    n, m = cfg.n, cfg.m
    f = GridField.constant(dom, float(math.comb(n, m)))
    w = make_field("bump:1,0.5", dom, m)
    phi = make_field("quad:1", dom, m)
    deltas = sorted(cfg.delta_sweep or DEFAULT_DELTAS, reverse=True)

    base = solve_dirichlet(f, phi, m, scfg).solution
    rows, fit = stability_sweep(f, w, phi, m, q, deltas, scfg, base=base)

    p_prime = default_p_prime(n, m, q)
    q_conj, p, expo = stability_exponents(n, m, q, p_prime)
    log.info("stability exponents q'=%.6g p'=%.6g p=%.6g exponent=%.6g", q_conj, p_prime, p, expo)

    rep = CsvReport("stability", ["delta", "sup_diff", "density_bound", "norm_lhs", "norm_rhs", "norm_ratio"])
    ratios = []
    for r in rows:
        lhs, rhs = stability_norm(r.solution, base, q, p_prime, m)
        ratio = lhs / rhs if rhs > 0 else 0.0
        ratios.append(ratio)
        rep.add(delta=r.delta, sup_diff=r.lhs, density_bound=r.rhs, norm_lhs=lhs, norm_rhs=rhs, norm_ratio=ratio)

    spread = max(ratios) / min(ratios) if min(ratios) > 0 else math.inf
    log.info("stability norm ratios %s, max/min %.4g", ", ".join(f"{r:.4g}" for r in ratios), spread)
    criteria = [
        Criterion.at_least("stability.density_slope", fit.slope, 1.0 / m - 0.15),
        Criterion.at_most("stability.norm_ratio", spread, 10.0),
    ]
    if not fit.reliable:
        log.warning("stability fit unreliable (r2=%.3f, %d samples)", fit.r2, len(fit.samples))
    fit_rep = CsvReport("stability_fit", ["q", "p_prime", "p", "exponent", "slope", "r2", "reliable"])
    fit_rep.add(q=q, p_prime=p_prime, p=p, exponent=expo, slope=fit.slope, r2=fit.r2, reliable=fit.reliable)

    bound = linfty_bound(f, phi, m, q, scfg)
    bound_rep = CsvReport("stability_linfty", ["q", "sup_abs", "f_norm", "gap_norm"])
    bound_rep.add(q=q, sup_abs=bound.sup_abs, f_norm=bound.f_norm, gap_norm=bound.gap_norm)
    return SuiteResult(criteria=criteria, reports=[rep, fit_rep, bound_rep])


def run_equicontinuity(cfg: RunConfig, dom: GridDomain, scfg: SolveConfig, q: float) -> SuiteResult:
    n, m = cfg.n, cfg.m
    c = float(math.comb(n, m))
    fs = [GridField.from_function(dom, lambda x, k=k: c + np.sin(k * x[..., 0]) / k) for k in FAMILY]
    phi = make_field("quad:1", dom, m)
    rows, norms, decays = equicontinuity_probe(fs, phi, m, q, scfg)

    rep = CsvReport("equicontinuity", ["cells", "scale", "modulus"])
    for r in rows:
        rep.add(cells=r.cells, scale=r.scale, modulus=r.modulus)
    norm_rep = CsvReport("equicontinuity_norms", ["k", "lq_norm"])
    for k, v in zip(FAMILY, norms):
        norm_rep.add(k=k, lq_norm=v)

    by_cells = {r.cells: r.modulus for r in rows}
    if 16 in by_cells and by_cells[16] > 0:
        ratio = by_cells.get(4, 0.0) / by_cells[16]
    else:
        ratio = 0.0 if decays else math.inf
    return SuiteResult(criteria=[Criterion.at_most("stability.equicontinuity", ratio, 1.0)],
                       reports=[rep, norm_rep])


def run(cfg: RunConfig, pool: Executor) -> SuiteResult:
    if cfg.suite not in ("all", "sweep", "equicontinuity"):
        raise ConfigError(f"unknown stability suite {cfg.suite!r}", detail="choose from sweep, equicontinuity")
    dom = GridDomain.ball(cfg.n, grid_points(cfg))
    scfg = SolveConfig(max_iter=cfg.max_iter, tol_residual=cfg.tol)
    q = cfg.q_sweep[0] if cfg.q_sweep else default_q(cfg.n, cfg.m)
    parts = []
    if cfg.suite in ("all", "sweep"):
        parts.append(("sweep", lambda: run_sweep(cfg, dom, scfg, q)))
    if cfg.suite in ("all", "equicontinuity"):
        parts.append(("equicontinuity", lambda: run_equicontinuity(cfg, dom, scfg, q)))
    return run_parts(parts)
