# hesslab/suites/capacity.py
"""capacity: m-capacities of balls, the volume-capacity frontier and sublevel estimates."""
import logging
from concurrent.futures import Executor
from typing import List

import numpy as np

from hesslab.config import RunConfig, grid_points
from hesslab.errors import ConfigError
from hesslab.field import INTERIOR, GridDomain, GridField
from hesslab.potential import (
    capacity,
    sublevel_estimates,
    unit_mass_density,
    volume_capacity_frontier,
)
from hesslab.reports import Criterion, CsvReport
from hesslab.solver import SolveConfig, solve_dirichlet
from hesslab.suites import SuiteResult, ordered_map

log = logging.getLogger(__name__)

DEFAULT_RADII = (0.3, 0.4, 0.5, 0.6)
SUBLEVELS = (1.0, 2.0, 4.0, 8.0)


def default_p(n: int, m: int) -> float:
    """0.8 of the n/(n-m) threshold; any p works when m = n, 2 is used."""
    return 2.0 if m == n else 0.8 * n / (n - m)


def sublevels(depth: float) -> List[float]:
    """The standard levels below depth = -min u; dyadic fractions of depth when fewer than two fit."""
    levels = [s for s in SUBLEVELS if s < depth]
    if len(levels) >= 2 or depth <= 0:
        return levels or list(SUBLEVELS)
    return [depth * 2.0 ** -k for k in (4, 3, 2, 1)]


def ball_set(dom: GridDomain, r: float) -> np.ndarray:
    return (dom.mask == INTERIOR) & (dom.radius_squared() <= r * r)


def _capacity_job(args):
    K, dom, m, scfg = args
    return capacity(K, dom, m, scfg)


def _setup(cfg: RunConfig):
    dom = GridDomain.ball(cfg.n, grid_points(cfg))
    scfg = SolveConfig(max_iter=cfg.max_iter, tol_residual=cfg.tol, normalization="raw")
    return dom, scfg


def run_balls(cfg: RunConfig, pool: Executor, dom: GridDomain, scfg: SolveConfig):
    radii = sorted(cfg.radii or DEFAULT_RADII)
    Ks = [ball_set(dom, r) for r in radii]
    if not all(K.any() for K in Ks):
        raise ConfigError("a radius is below the grid spacing", detail=f"h={dom.h:g}")
    estimates = ordered_map(pool, _capacity_job, [(K, dom, cfg.m, scfg) for K in Ks])

    rep = CsvReport("capacity", ["r", "points", "extremal", "lower", "volume", "normalization"])
    for r, K, est in zip(radii, Ks, estimates):
        rep.add(r=r, points=int(K.sum()), extremal=est.extremal, lower=est.lower,
                volume=float(K.sum()) * dom.cell_volume, normalization=est.normalization)

    caps = [e.extremal for e in estimates]
    shrink = max((a / b for a, b in zip(caps, caps[1:])), default=0.0)
    sandwich = max(e.lower / e.extremal for e in estimates)
    criteria = [
        Criterion.at_most("capacity.monotone", shrink, 1.0 + dom.h),
        Criterion.at_most("capacity.sandwich", sandwich, 1.0 + 5.0 * dom.h),
    ]
    return Ks, caps, criteria, rep


def run_frontier(cfg: RunConfig, dom: GridDomain, scfg: SolveConfig, Ks: List[np.ndarray], caps: List[float]):
    n, m = cfg.n, cfg.m
    ps = cfg.p_sweep or [default_p(n, m)]
    rows = volume_capacity_frontier(Ks, dom, m, ps, scfg, caps=caps)
    rep = CsvReport("frontier", ["p", "slope", "r2", "reliable", "max_ratio", "min_ratio", "below_threshold"])
    vols = np.array([np.count_nonzero(K) * dom.cell_volume for K in Ks])
    spread = 0.0
    for row in rows:
        ratios = vols / np.asarray(caps) ** row.p
        rep.add(p=row.p, slope=row.fit.slope if row.fit else None, r2=row.fit.r2 if row.fit else None,
                reliable=bool(row.fit and row.fit.reliable), max_ratio=row.max_ratio,
                min_ratio=float(np.min(ratios)), below_threshold=row.below_threshold)
        if row.below_threshold:
            spread = max(spread, row.max_ratio / float(np.min(ratios)))
    criteria = [Criterion.at_most("capacity.frontier", spread, 10.0)]
    return rows, criteria, rep


def run_sublevel(cfg: RunConfig, dom: GridDomain, scfg: SolveConfig, bound: float):
    """Unit-mass solution of f = 0.05 + bump; bound is the frontier constant at p."""
    n, m = cfg.n, cfg.m
    p = default_p(n, m)
    raw = GridField.from_function(dom, lambda x: 0.05 + np.clip(1.0 - np.sum(x * x, axis=-1) / 0.25, 0.0, None) ** 3)
    f = unit_mass_density(raw, m)
    u = solve_dirichlet(f, GridField.constant(dom, 0.0), m, scfg).solution
    levels = sublevels(-u.min(dom.mask == INTERIOR))
    rows = sublevel_estimates(u, m, levels, p, scfg)

    rep = CsvReport("sublevel", ["s", "cap", "cap_bound", "volume", "volume_shape"])
    for r in rows:
        rep.add(s=r.s, cap=r.cap, cap_bound=r.cap_bound, volume=r.volume, volume_shape=r.volume_shape)
    filled = [r for r in rows if r.volume > 0]
    cap_ratio = max((r.cap / r.cap_bound for r in filled), default=0.0)
    vol_ratio = max((r.volume / r.volume_shape for r in filled), default=0.0)
    criteria = [
        Criterion.at_least("sublevel.nonempty", float(len(filled)), 2.0),
        Criterion.at_most("sublevel.capacity", cap_ratio, 1.0 + 5.0 * dom.h),
        Criterion.at_most("sublevel.volume", vol_ratio, bound),
    ]
    return criteria, rep, u


def run(cfg: RunConfig, pool: Executor) -> SuiteResult:
    if cfg.suite not in ("all", "balls", "frontier", "sublevel"):
        raise ConfigError(f"unknown capacity suite {cfg.suite!r}", detail="choose from balls, frontier, sublevel")
    dom, scfg = _setup(cfg)
    result = SuiteResult()
    Ks, caps, criteria, rep = run_balls(cfg, pool, dom, scfg)
    if cfg.suite in ("all", "balls"):
        result.merge(SuiteResult(criteria=criteria, reports=[rep]))
    if cfg.suite == "balls":
        return result

    rows, criteria, rep = run_frontier(cfg, dom, scfg, Ks, caps)
    if cfg.suite in ("all", "frontier"):
        result.merge(SuiteResult(criteria=criteria, reports=[rep]))
    if cfg.suite == "frontier":
        return result

    p = default_p(cfg.n, cfg.m)
    p_ratio = max((r.max_ratio for r in rows if r.p == p), default=None)
    if p_ratio is None:
        vols = np.array([np.count_nonzero(K) * dom.cell_volume for K in Ks])
        p_ratio = float(np.max(vols / np.asarray(caps) ** p))
    criteria, rep, u = run_sublevel(cfg, dom, scfg, p_ratio)
    log.info("sublevel volume constant C(p=%.4g)=%.6g", p, p_ratio)
    return result.merge(SuiteResult(criteria=criteria, reports=[rep], fields={"unit_mass_solution.hf": u}))
