# hesslab/suites/integrability.py
"""integrability: growth of L^q integrals of G and of σ_m(log|z|) near the pole."""
import logging
import math
from concurrent.futures import Executor

from hesslab.config import RunConfig
from hesslab.errors import ConfigError
from hesslab.field import RadialProfile, density_lq_growth
from hesslab.reports import Criterion, CsvReport
from hesslab.suites import SuiteResult, ordered_map

log = logging.getLogger(__name__)

DEFAULT_DELTAS = tuple(2.0 ** -k for k in range(1, 9))
FIT_TOLERANCE = 0.10


def green_exponent(n: int, m: int, q: float) -> float:
    """Growth exponent of ∫_{δ≤|z|≤2δ} |G|^q in 1/δ."""
    return q * (2.0 * n / m - 2.0) - 2.0 * n


def log_density_exponent(n: int, m: int, p: float) -> float:
    return 2.0 * m * p - 2.0 * n


def _green_job(args):
    n, m, q, deltas = args
    vals, slope = density_lq_growth(RadialProfile.green(n, m), n, q, deltas)
    return q, slope


def _log_job(args):
    n, m, p, deltas = args
    vals, slope = density_lq_growth(RadialProfile.log(), n, p, deltas, m=m)
    return p, slope


def _rel_error(got: float, exact: float) -> float:
    return abs(got - exact) / max(abs(exact), 1e-12)


def run(cfg: RunConfig, pool: Executor) -> SuiteResult:
    n, m = cfg.n, cfg.m
    if m == n:
        raise ConfigError("integrability needs m < n", detail="G degenerates to log|z| when m = n")
    deltas = sorted(cfg.delta_sweep or DEFAULT_DELTAS, reverse=True)
    threshold = m * n / (n - m)
    qs = cfg.q_sweep or [q for q in (threshold + k * 0.5 for k in range(-8, 2)) if q > 0]

    rows = ordered_map(pool, _green_job, [(n, m, q, deltas) for q in qs])
    rep = CsvReport("integrability", ["q", "slope", "exact", "rel_error", "integrable"])
    worst = 0.0
    for q, slope in rows:
        exact = green_exponent(n, m, q)
        rep.add(q=q, slope=slope, exact=exact, rel_error=_rel_error(slope, exact), integrable=q < threshold)
        if not math.isclose(q, threshold):
            worst = max(worst, _rel_error(slope, exact))

    below = [(q, s) for q, s in rows if q < threshold and not math.isclose(q, threshold)]
    above = [(q, s) for q, s in rows if q > threshold and not math.isclose(q, threshold)]
    if not below or not above:
        raise ConfigError(f"q sweep must bracket the threshold {threshold:g}")
    q_lo, s_lo = max(below)
    q_hi, s_hi = min(above)
    log.info("threshold %.4g bracketed by q=%.4g (slope %.4g) and q=%.4g (slope %.4g)",
             threshold, q_lo, s_lo, q_hi, s_hi)
    criteria = [
        Criterion.at_most("integrability.below", s_lo, 0.0),
        Criterion.at_least("integrability.above", s_hi, 0.0),
        Criterion.at_most("integrability.fit_error", worst, FIT_TOLERANCE),
    ]

    p_threshold = n / m
    ps = cfg.p_sweep or [p_threshold - 0.5, p_threshold - 0.25, p_threshold + 0.25, p_threshold + 0.5]
    log_rows = ordered_map(pool, _log_job, [(n, m, p, deltas) for p in ps])
    log_rep = CsvReport("log_density", ["p", "slope", "exact", "rel_error", "integrable"])
    worst_log = 0.0
    for p, slope in log_rows:
        exact = log_density_exponent(n, m, p)
        log_rep.add(p=p, slope=slope, exact=exact, rel_error=_rel_error(slope, exact), integrable=p < p_threshold)
        if not math.isclose(p, p_threshold):
            worst_log = max(worst_log, _rel_error(slope, exact))
    criteria.append(Criterion.at_most("integrability.log_density", worst_log, FIT_TOLERANCE))
    return SuiteResult(criteria=criteria, reports=[rep, log_rep])
