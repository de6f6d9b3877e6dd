# hesslab/suites/regularity.py
"""regularity: T_ε identities and bounds, comparison principles and weak Gårding on solver outputs."""
import logging
import math
from concurrent.futures import Executor

import numpy as np

from hesslab.config import RunConfig, grid_points
from hesslab.errors import ConfigError
from hesslab.field import EXTERIOR, GridDomain, GridField, t_epsilon
from hesslab.funcs import make_field
from hesslab.potential import (
    comparison_check,
    convolution_hessian_check,
    interior_laplacian_bound,
    weak_garding_check,
)
from hesslab.reports import Criterion, CsvReport
from hesslab.solver import SolveConfig, solve_dirichlet
from hesslab.suites import SuiteResult, ordered_map, run_parts

log = logging.getLogger(__name__)

PAIRS = 20
TUPLES = 10
GARDING_POOL = 5
GARDING_SHARE = 0.999


def _bump(x: np.ndarray, center: np.ndarray, radius: float) -> np.ndarray:
    r2 = np.sum((x - center) ** 2, axis=-1) / radius ** 2
    return np.clip(1.0 - r2, 0.0, None) ** 3


def random_density(dom: GridDomain, m: int, rng: np.random.Generator) -> GridField:
    """C(n,m)(a + b·bump) with the bump centered in |x| < 0.4."""
    c = math.comb(dom.n, m)
    a = rng.uniform(0.5, 1.5)
    b = rng.uniform(0.0, 1.0)
    center = rng.uniform(-0.4, 0.4, size=dom.dim) / math.sqrt(dom.dim)
    radius = rng.uniform(0.3, 0.6)
    return GridField.from_function(dom, lambda x: c * (a + b * _bump(x, center, radius)))


# --- T_ε ---------------------------------------------------------------------

def run_quadratic(cfg: RunConfig) -> SuiteResult:
    n = min(cfg.n, 2)
    dom = GridDomain.box(n, 19)
    u = GridField.from_function(dom, lambda x: np.sum(x * x, axis=-1))
    rep = CsvReport("tepsilon_quadratic", ["n", "eps_cells", "points", "max_error"])
    worst = 0.0
    for cells in (4, 8):
        t = t_epsilon(u, cells * dom.h)
        sel = t.domain.mask != EXTERIOR
        err = float(np.max(np.abs(t.values[sel] - n)))
        worst = max(worst, err)
        rep.add(n=n, eps_cells=cells, points=int(sel.sum()), max_error=err)
    return SuiteResult(criteria=[Criterion.at_most("tepsilon.quadratic", worst, 1e-10)], reports=[rep])


def _smooth_solve(args):
    n, m, points, scfg = args
    dom = GridDomain.ball(n, points)
    c = math.comb(n, m)
    psi = GridField.from_function(dom, lambda x: c * (1.0 + _bump(x, np.zeros(dom.dim), 0.6)))
    u = solve_dirichlet(psi, make_field("quad:1", dom, m), m, scfg).solution
    return u, psi


def run_convolution(cfg: RunConfig, u: GridField, psi: GridField) -> SuiteResult:
    h = u.domain.h
    rep = CsvReport("tepsilon_convolution", ["eps_cells", "points", "worst_gap", "bound"])
    criteria = []
    for cells in cfg.eps_sweep or (2.0, 3.0):
        eps = cells * h
        lhs, rhs = convolution_hessian_check(u, psi, cfg.m, eps)
        gap = float(np.max(rhs - lhs))
        bound = h * h + h * h / (eps * eps)
        rep.add(eps_cells=cells, points=len(lhs), worst_gap=gap, bound=bound)
        criteria.append(Criterion.at_most(f"tepsilon.convolution.eps{cells:g}h", gap, bound))
    return SuiteResult(criteria=criteria, reports=[rep])


def run_laplacian(cfg: RunConfig, scfg: SolveConfig, coarse_job) -> SuiteResult:
    """Fixed physical ε = 2h_coarse on the grid and its refinement, over |z| ≤ 0.5."""
    n, m = cfg.n, cfg.m
    coarse_pts = grid_points(cfg)
    fine_pts = 2 * coarse_pts - 1
    fine_job = _smooth_solve((n, m, fine_pts, scfg))
    rep = CsvReport("tepsilon_laplacian", ["points", "h", "eps", "sup_t", "defect", "c1"])
    bounds = []
    for u, psi in (coarse_job, fine_job):
        dom = u.domain
        eps = 2.0 * (2.0 / (coarse_pts - 1))
        region = dom.radius_squared() <= 0.25
        b = interior_laplacian_bound(u, psi, m, eps=eps, region=region)
        bounds.append(b)
        rep.add(points=dom.shape[0], h=dom.h, eps=b.eps, sup_t=b.sup_t, defect=b.defect, c1=b.c1)
    a, b = bounds
    variation = abs(a.sup_t - b.sup_t) / max(abs(b.sup_t), 1e-300)
    criteria = [
        Criterion.at_most("tepsilon.laplacian_stability", variation, 0.10),
        Criterion.at_least("tepsilon.laplacian_defect", min(x.defect + x.c1 for x in bounds), 0.0),
    ]
    return SuiteResult(criteria=criteria, reports=[rep])


def run_tepsilon(cfg: RunConfig, scfg: SolveConfig) -> SuiteResult:
    coarse = _smooth_solve((cfg.n, cfg.m, grid_points(cfg), scfg))
    result = run_quadratic(cfg)
    result.merge(run_convolution(cfg, *coarse))
    return result.merge(run_laplacian(cfg, scfg, coarse))


# --- comparison ----------------------------------------------------------------

def _pair_job(args):
    """Even index: f_v ≥ f_u and u ≥ v on ∂Ω, so v ≤ u must hold pointwise."""
    i, n, m, points, seed, scfg = args
    rng = np.random.default_rng(seed * 1000 + i)
    dom = GridDomain.ball(n, points)
    phi = make_field("quad:1", dom, m)
    f_u = random_density(dom, m, rng)
    extra = random_density(dom, m, rng)
    ordered = i % 2 == 0
    f_v = f_u + extra * 0.5 if ordered else extra
    lift = rng.uniform(0.0, 0.05)
    u = solve_dirichlet(f_u, phi + lift, m, scfg).solution
    v = solve_dirichlet(f_v, phi, m, scfg).solution
    lhs, rhs = comparison_check(u, v, m)
    interior = dom.mask != EXTERIOR
    return {"pair": i, "ordered": ordered, "lhs": lhs, "rhs": rhs,
            "sup_v_minus_u": float(np.max((v.values - u.values)[interior]))}


def run_comparison(cfg: RunConfig, pool: Executor, scfg: SolveConfig) -> SuiteResult:
    points = grid_points(cfg)
    h = 2.0 / (points - 1)
    jobs = [(i, cfg.n, cfg.m, points, cfg.seed, scfg) for i in range(PAIRS)]
    rows = ordered_map(pool, _pair_job, jobs)
    rep = CsvReport("comparison", ["pair", "ordered", "lhs", "rhs", "sup_v_minus_u"])
    rep.extend(rows)
    integral_gap = max(r["lhs"] - r["rhs"] for r in rows)
    pointwise_gap = max(r["sup_v_minus_u"] for r in rows if r["ordered"])
    criteria = [
        Criterion.at_most("comparison.integral", integral_gap, 5.0 * h * h),
        Criterion.at_most("comparison.pointwise", pointwise_gap, 5.0 * h * h),
    ]
    return SuiteResult(criteria=criteria, reports=[rep])


# --- weak Gårding ---------------------------------------------------------------

def _garding_solve(args):
    i, n, m, points, seed, scfg = args
    rng = np.random.default_rng(seed * 7919 + i)
    dom = GridDomain.ball(n, points)
    f = random_density(dom, m, rng)
    return solve_dirichlet(f, make_field("quad:1", dom, m), m, scfg).solution


def run_garding(cfg: RunConfig, pool: Executor, scfg: SolveConfig) -> SuiteResult:
    points = grid_points(cfg)
    jobs = [(i, cfg.n, cfg.m, points, cfg.seed, scfg) for i in range(GARDING_POOL)]
    sols = ordered_map(pool, _garding_solve, jobs)
    h = sols[0].domain.h
    rng = np.random.default_rng(cfg.seed)
    rep = CsvReport("garding", ["tuple", "members", "points", "share", "worst_gap"])
    worst_share = 1.0
    for t in range(TUPLES):
        pick = sorted(int(k) for k in rng.choice(GARDING_POOL, size=cfg.m, replace=False))
        lhs, rhs = weak_garding_check([sols[k] for k in pick], cfg.m)
        ok = lhs >= rhs - 5.0 * h * h
        share = float(np.mean(ok))
        worst_share = min(worst_share, share)
        rep.add(tuple=t, members="-".join(map(str, pick)), points=len(lhs), share=share,
                worst_gap=float(np.max(rhs - lhs)))
    return SuiteResult(criteria=[Criterion.at_least("garding.weak", worst_share, GARDING_SHARE)], reports=[rep])


SUITES = ("tepsilon", "comparison", "garding")


def run(cfg: RunConfig, pool: Executor) -> SuiteResult:
    names = list(SUITES) if cfg.suite == "all" else [cfg.suite]
    for name in names:
        if name not in SUITES:
            raise ConfigError(f"unknown regularity suite {name!r}", detail="choose from " + ", ".join(SUITES))
    scfg = SolveConfig(max_iter=cfg.max_iter, tol_residual=cfg.tol)
    parts = {
        "tepsilon": lambda: run_tepsilon(cfg, scfg),
        "comparison": lambda: run_comparison(cfg, pool, scfg),
        "garding": lambda: run_garding(cfg, pool, scfg),
    }
    return run_parts((name, parts[name]) for name in names)
