# hesslab/suites/cones.py
"""verify: cone algebra, brute-force equivalence and the radial identities."""
import logging
import math
from concurrent.futures import Executor

import numpy as np

from hesslab.config import RunConfig
from hesslab.errors import ConfigError
from hesslab.field import GridDomain, GridField, RadialProfile, hessian_density, INTERIOR
from hesslab.hermlin import mixed_sigma, mixed_sigma_diagonal_bruteforce
from hesslab.reports import Criterion, CsvReport
from hesslab.suites import SuiteResult, ordered_map, run_parts
from hesslab.symmfunc import elem_sym, elem_sym_all, elem_sym_bruteforce, sample_cone

log = logging.getLogger(__name__)

SLACK = 1e-10


def _pairing_sides(lam: np.ndarray, mu: np.ndarray, m: int):
    reduced = np.empty_like(lam)
    for i in range(lam.shape[-1]):
        w = lam.copy()
        w[:, i] = 0.0
        reduced[:, i] = elem_sym_all(w, m - 1)[:, m - 1]
    lhs = np.sum(mu * reduced, axis=-1)
    s_lam = elem_sym_all(lam, m)[:, m]
    s_mu = elem_sym_all(mu, m)[:, m]
    rhs = m * s_mu ** (1.0 / m) * s_lam ** ((m - 1.0) / m)
    return lhs, rhs


def _cone_case(args):
    n, m, samples, seed = args
    rng = np.random.default_rng(seed)
    lam = sample_cone(rng, n, m, samples)
    mu = sample_cone(rng, n, m, samples)
    s = elem_sym_all(lam, m)[:, 1:]
    means = np.stack([(s[:, k - 1] / math.comb(n, k)) ** (1.0 / k) for k in range(1, m + 1)], axis=-1)
    if m > 1:
        rises = (means[:, 1:] - means[:, :-1]) / np.maximum(1.0, means[:, :-1])
        maclaurin = float(np.max(rises))
    else:
        maclaurin = -math.inf
    root = lambda v: elem_sym_all(v, m)[:, m] ** (1.0 / m)
    mid = root(0.5 * (lam + mu))
    avg = 0.5 * (root(lam) + root(mu))
    concavity = float(np.max((avg - mid) / np.maximum(1.0, avg)))
    lhs, rhs = _pairing_sides(lam, mu, m)
    pairing = float(np.max((rhs - lhs) / np.maximum(1.0, np.abs(rhs))))
    return {"n": n, "m": m, "samples": samples, "maclaurin_worst": maclaurin,
            "concavity_worst": concavity, "pairing_worst": pairing}


def run_cones(cfg: RunConfig, pool: Executor) -> SuiteResult:
    cases = [(n, m, cfg.samples, cfg.seed * 1000 + 10 * n + m) for n in range(1, 5) for m in range(1, n + 1)]
    rows = ordered_map(pool, _cone_case, cases)
    rep = CsvReport("cones", ["n", "m", "samples", "maclaurin_worst", "concavity_worst", "pairing_worst"])
    rep.extend(rows)
    worst = lambda key: max(r[key] for r in rows)
    return SuiteResult(
        criteria=[
            Criterion.at_most("cones.maclaurin", max(worst("maclaurin_worst"), 0.0), SLACK),
            Criterion.at_most("cones.concavity", max(worst("concavity_worst"), 0.0), SLACK),
            Criterion.at_most("cones.pairing", max(worst("pairing_worst"), 0.0), SLACK),
        ],
        reports=[rep],
    )


def run_bruteforce(cfg: RunConfig, pool: Executor) -> SuiteResult:
    rng = np.random.default_rng(cfg.seed)
    worst_sym = 0.0
    worst_mixed = 0.0
    rows = []
    for i in range(cfg.samples):
        n = int(rng.integers(1, 7))
        k = int(rng.integers(0, n + 1))
        lam = rng.uniform(-3.0, 3.0, size=n)
        scale = max(1.0, elem_sym_bruteforce(np.abs(lam), k))
        err = abs(elem_sym(lam, k) - elem_sym_bruteforce(lam, k)) / scale
        worst_sym = max(worst_sym, err)

        nm = int(rng.integers(1, 5))
        m = int(rng.integers(1, nm + 1))
        diags = rng.uniform(-2.0, 2.0, size=(m, nm))
        oracle = mixed_sigma_diagonal_bruteforce(diags.tolist())
        scale = max(1.0, mixed_sigma_diagonal_bruteforce(np.abs(diags).tolist()))
        got = mixed_sigma([np.diag(d) for d in diags], n=nm)
        worst_mixed = max(worst_mixed, abs(got - oracle) / scale)
        if i < 50:
            rows.append({"case": i, "n": n, "k": k, "sym_err": err, "mixed_n": nm, "mixed_m": m,
                         "mixed_err": abs(got - oracle) / scale})
    rep = CsvReport("bruteforce", ["case", "n", "k", "sym_err", "mixed_n", "mixed_m", "mixed_err"])
    rep.extend(rows)
    return SuiteResult(
        criteria=[
            Criterion.at_most("bruteforce.elem_sym", worst_sym, 1e-12),
            Criterion.at_most("bruteforce.mixed_sigma", worst_mixed, 1e-12),
        ],
        reports=[rep],
    )


def _offset_box(n: int, points: int) -> GridDomain:
    """[0.5, 1.5]^{2n}: far enough from the origin that the singular profiles are smooth."""
    return GridDomain.box(n, points, lower=0.5, upper=1.5)


def _sigma_of(profile: RadialProfile, dom: GridDomain, m: int) -> np.ndarray:
    u = GridField.from_function(dom, lambda x: profile.g(np.sum(x * x, axis=-1)))
    return hessian_density(u, m).values[dom.mask == INTERIOR]


def run_radial(cfg: RunConfig, pool: Executor) -> SuiteResult:
    rep = CsvReport("radial", ["n", "m", "profile", "points", "h", "max_error"])
    criteria = []
    for n, m in ((2, 1), (2, 2), (3, 2)):
        ladder = (5, 7, 9) if n == 3 else (9, 17, 33)
        errs, hs = [], []
        for pts in ladder:
            dom = _offset_box(n, pts)
            err = float(np.max(np.abs(_sigma_of(RadialProfile.green(n, m), dom, m))))
            errs.append(err)
            hs.append(dom.h)
            rep.add(n=n, m=m, profile="G", points=pts, h=dom.h, max_error=err)
        if errs[-1] <= 1e-12:
            order = math.inf
        else:
            order = math.log(errs[-2] / errs[-1]) / math.log(hs[-2] / hs[-1])
        criteria.append(Criterion.at_least(f"radial.green_order.n{n}m{m}", order, 1.8))

    for n, m, pts in ((2, 1, 17), (3, 2, 11)):
        dom = _offset_box(n, pts)
        t = np.sum(dom.points()[dom.mask == INTERIOR] ** 2, axis=-1)
        exact = math.comb(n - 1, m) * (2.0 * t) ** (-m)
        got = _sigma_of(RadialProfile.log(), dom, m)
        rel = float(np.max(np.abs(got - exact) / exact))
        rep.add(n=n, m=m, profile="log", points=pts, h=dom.h, max_error=rel)
        criteria.append(Criterion.at_most(f"radial.log_density.n{n}m{m}", rel, 0.02))
    return SuiteResult(criteria=criteria, reports=[rep])


SUITES = {"cones": run_cones, "bruteforce": run_bruteforce, "radial": run_radial}


def run(cfg: RunConfig, pool: Executor) -> SuiteResult:
    names = list(SUITES) if cfg.suite == "all" else [cfg.suite]
    for name in names:
        if name not in SUITES:
            raise ConfigError(f"unknown verify suite {name!r}", detail="choose from " + ", ".join(SUITES))
    return run_parts((name, lambda fn=SUITES[name]: fn(cfg, pool)) for name in names)
