# hesslab/potential.py
"""
Capacities and the measurement harness around the solvers.

Every Hessian mass in here is form-normalized, (m!(n-m)!/n!)·σ_m·h^{2n}, so
that numbers are comparable across m.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from hesslab.errors import DomainError, require
from hesslab.field import (
    EXTERIOR,
    INTERIOR,
    GridDomain,
    GridField,
    ball_average,
    complex_hessian,
    cross_offsets,
    hessian_density,
    interior_distance,
    lq_norm,
    real_hessian,
    sublevel_volume,
    t_epsilon,
)
from hesslab.hermlin import cominor_batch, eigvalsh_batch, mixed_sigma_batch
from hesslab.solver import SolveConfig, maximal_solution, solve_dirichlet
from hesslab.symmfunc import elem_sym_all

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CapacityEstimate:
    lower: float
    extremal: float
    K: np.ndarray
    Omega: GridDomain
    m: int
    normalization: str = "form"


@dataclass(frozen=True)
class ExponentFit:
    samples: Tuple[Tuple[float, float], ...]  # (log x, log y)
    slope: float
    intercept: float
    r2: float

    @property
    def reliable(self) -> bool:
        return len(self.samples) >= 4 and self.r2 >= 0.9


def fit_exponent(xs: Sequence[float], ys: Sequence[float]) -> ExponentFit:
    """Least squares of log y against log x."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    require(x.shape == y.shape and x.size >= 2, "need at least two (x, y) pairs")
    require(bool(np.all(x > 0) and np.all(y > 0)), "log-log fit needs positive samples")
    lx, ly = np.log(x), np.log(y)
    if np.ptp(lx) == 0:
        raise DomainError("all x samples coincide")
    fit = stats.linregress(lx, ly)
    r2 = float(min(max(fit.rvalue ** 2, 0.0), 1.0)) if np.isfinite(fit.rvalue) else 0.0
    return ExponentFit(tuple(zip(lx.tolist(), ly.tolist())), float(fit.slope), float(fit.intercept), r2)


def mass(u: GridField, m: int, region: Optional[np.ndarray] = None, shift: float = 0.0) -> float:
    """Σ_region form-normalized σ_m(u) h^{2n}; region defaults to the interior."""
    dens = hessian_density(u, m, normalization="form", shift=shift)
    sel = (u.domain.mask == INTERIOR) if region is None else (np.asarray(region, bool) & (u.domain.mask == INTERIOR))
    return float(np.sum(dens.values[sel]) * u.domain.cell_volume)


def dilate(mask: np.ndarray) -> np.ndarray:
    """mask plus every point one cross-stencil step away."""
    out = mask.copy()
    axes = tuple(range(mask.ndim))
    for off in cross_offsets(mask.ndim):
        out |= np.roll(mask, shift=off, axis=axes)
    return out


# --- capacity --------------------------------------------------------------------

def _check_compact(K: np.ndarray, omega: GridDomain) -> np.ndarray:
    K = np.asarray(K, dtype=bool)
    require(K.shape == omega.shape, "K mask shape differs from the domain")
    require(bool(K.any()), "K is empty")
    if np.any(K & (omega.mask != INTERIOR)):
        raise DomainError("K touches the boundary of Ω")
    return K


def extremal_function(K: np.ndarray, Omega: GridDomain, m: int, cfg: Optional[SolveConfig] = None) -> GridField:
    """Relative extremal function: -1 on K, 0 on ∂Ω, maximal (σ_m = 0) on Ω∖K."""
    K = np.asarray(K, dtype=bool)
    interior = Omega.mask == INTERIOR
    zero = GridField.constant(Omega, 0.0)
    if np.all(K[interior]):
        return zero.with_values(np.where(interior, -1.0, 0.0))
    K = _check_compact(K, Omega)
    report = maximal_solution(zero, m, cfg, fixed=K, fixed_values=GridField.constant(Omega, -1.0))
    if not report.converged:
        log.warning("extremal function solve did not converge (residual %.3e)", report.residual)
    return report.solution.map(lambda v: np.clip(v, -1.0, 0.0))


def _candidates(u_star: GridField, Omega: GridDomain) -> List[GridField]:
    q = Omega.radius_squared()
    inside = Omega.mask != EXTERIOR
    reach = float(np.max(q[inside]))
    quad = GridField(Omega, np.where(inside, q / reach - 1.0, np.nan))
    out = [quad]
    for tau in (0.0, 0.25, 0.5):
        out.append(u_star.map(lambda v, t=tau: np.maximum((1.0 + t) * v, -1.0)))
    return out


def capacity(K: np.ndarray, Omega: GridDomain, m: int, cfg: Optional[SolveConfig] = None) -> CapacityEstimate:
    """
    extremal = mass of u* on K and its stencil ring (where the kink of u* sits);
    lower = best mass on the same set over a small family of admissible functions
    with values in [-1, 0].
    """
    K = np.asarray(K, dtype=bool)
    u_star = extremal_function(K, Omega, m, cfg)
    region = dilate(K)
    extremal = mass(u_star, m, region)
    lower = max(0.0, max(mass(v, m, region) for v in _candidates(u_star, Omega)))
    log.info("cap_%d: extremal=%.6g lower=%.6g (|K|=%d)", m, extremal, lower, int(K.sum()))
    return CapacityEstimate(lower=lower, extremal=extremal, K=K, Omega=Omega, m=m)


@dataclass(frozen=True)
class FrontierRow:
    p: float
    fit: Optional[ExponentFit]
    max_ratio: float
    below_threshold: bool


def volume_capacity_frontier(Ks: Sequence[np.ndarray], Omega: GridDomain, m: int, ps: Sequence[float],
                             cfg: Optional[SolveConfig] = None,
                             caps: Optional[Sequence[float]] = None) -> List[FrontierRow]:
    """
    Per p: fit of log V(K) on log cap_m(K) and the largest V/cap^p across the family.
    Pass `caps` to reuse capacities already computed for the same sets.
    """
    if not Ks:
        raise DomainError("empty family of compact sets")
    n = Omega.n
    if caps is None:
        caps = [capacity(K, Omega, m, cfg).extremal for K in Ks]
    require(len(caps) == len(Ks), "one capacity per compact set")
    caps = np.asarray(caps, dtype=float)
    vols = np.array([np.count_nonzero(K) * Omega.cell_volume for K in Ks])
    require(bool(np.all(caps > 0)), "a compact set has zero discrete capacity")
    threshold = math.inf if m == n else n / (n - m)
    rows = []
    for p in ps:
        ratios = vols / caps ** p
        if not np.all(np.isfinite(ratios)):
            raise DomainError(f"volume/capacity ratio is not finite for p={p}")
        fit = fit_exponent(caps, vols) if len(Ks) > 1 else None
        rows.append(FrontierRow(p, fit, float(np.max(ratios)), p < threshold))
    return rows


# --- comparison ------------------------------------------------------------------

def comparison_check(u: GridField, v: GridField, m: int) -> Tuple[float, float]:
    """(∫_{u<v} σ_m(v), ∫_{u<v} σ_m(u)); needs u ≥ v on the boundary ring."""
    dom = u.domain
    ring = dom.mask != INTERIOR
    ring &= dom.mask != EXTERIOR
    scale = max(1.0, float(np.max(np.abs(u.values[ring]), initial=0.0)))
    if np.any(u.values[ring] < v.values[ring] - 1e-12 * scale):
        raise DomainError("comparison needs u >= v on the boundary")
    region = u.values < v.values
    return mass(v, m, region), mass(u, m, region)


def torus_comparison_check(u: GridField, v: GridField, m: int) -> Tuple[float, float]:
    """Masses of (β + dd^c v) and (β + dd^c u) on {u < v}."""
    require(u.domain.kind == "torus", "torus_comparison_check needs torus fields")
    region = u.values < v.values
    return mass(v, m, region, shift=1.0), mass(u, m, region, shift=1.0)


# --- stability -------------------------------------------------------------------

def stability_density(u_f: GridField, u_g: GridField, f: GridField, g: GridField,
                      q: float, m: int) -> Tuple[float, float]:
    """(sup(u_g - u_f) - sup_∂(u_g - u_f), ‖f - g‖_q^{1/m}), signed differences."""
    n = u_f.domain.n
    if q <= n / m:
        raise DomainError(f"q={q:g} must exceed n/m={n / m:g}")
    diff = u_g.values - u_f.values
    dom = u_f.domain
    interior = dom.mask == INTERIOR
    ring = (dom.mask != INTERIOR) & (dom.mask != EXTERIOR)
    edge = float(np.max(diff[ring])) if ring.any() else 0.0
    lhs = float(np.max(diff[interior])) - edge
    return lhs, lq_norm(f - g, q) ** (1.0 / m)


@dataclass(frozen=True)
class SweepRow:
    delta: float
    lhs: float
    rhs: float
    solution: Optional[GridField] = field(default=None, repr=False, compare=False)


def stability_sweep(f: GridField, w: GridField, phi: GridField, m: int, q: float,
                    deltas: Sequence[float], cfg: Optional[SolveConfig] = None,
                    base: Optional[GridField] = None) -> Tuple[List[SweepRow], ExponentFit]:
    """
    Solve with g = f + δ·w for each δ and fit the sup-difference against δ; rows keep u_g.
    With w ≥ 0 the perturbed solution lies below u_f, so it enters stability_density
    as the first solution and sup(u_f - u_g) is the nonnegative side.
    """
    base = base if base is not None else solve_dirichlet(f, phi, m, cfg).solution
    rows = []
    for d in deltas:
        g = f + d * w
        other = solve_dirichlet(g, phi, m, cfg, initial=base)
        lhs, rhs = stability_density(other.solution, base, g, f, q, m)
        rows.append(SweepRow(float(d), lhs, rhs, other.solution))
        log.info("stability delta=%.3e lhs=%.6g rhs=%.6g", d, lhs, rhs)
    fit = fit_exponent([r.delta for r in rows], [max(r.lhs, 1e-300) for r in rows])
    return rows, fit


def stability_exponents(n: int, m: int, q: float, p_prime: float) -> Tuple[float, float, float]:
    """(q', p, p/(n + p(m+1))) after checking q > n/m and q' < p' < n/(n-m)."""
    if q <= n / m:
        raise DomainError(f"q={q:g} must exceed n/m={n / m:g}")
    q_conj = q / (q - 1.0)
    upper = math.inf if m == n else n / (n - m)
    if not q_conj < p_prime < upper:
        raise DomainError(f"p'={p_prime:g} outside ({q_conj:g}, {upper:g})")
    p = p_prime / q_conj
    return q_conj, p, p / (n + p * (m + 1))


def stability_norm(u: GridField, v: GridField, q: float, p_prime: float, m: int) -> Tuple[float, float]:
    """(sup(v - u), ‖(v - u)_+‖_{q'}^{p/(n+p(m+1))})."""
    n = u.domain.n
    q_conj, _, expo = stability_exponents(n, m, q, p_prime)
    gap = v - u
    interior = u.domain.mask == INTERIOR
    lhs = float(np.max(gap.values[interior]))
    pos = gap.map(lambda x: np.maximum(x, 0.0))
    return lhs, lq_norm(pos, q_conj) ** expo


# --- equicontinuity --------------------------------------------------------------

@dataclass(frozen=True)
class ModulusRow:
    cells: int
    scale: float
    modulus: float


def oscillation(u: GridField, cells: int) -> float:
    """max |u(p + k e_a) - u(p)| over axes a and pairs of non-exterior points."""
    dom = u.domain
    best = 0.0
    inside = dom.mask != EXTERIOR
    for a in range(dom.dim):
        if cells >= dom.shape[a]:
            continue
        lo = [slice(None)] * dom.dim
        hi = [slice(None)] * dom.dim
        lo[a] = slice(0, dom.shape[a] - cells)
        hi[a] = slice(cells, None)
        both = inside[tuple(lo)] & inside[tuple(hi)]
        if both.any():
            d = np.abs(u.values[tuple(hi)] - u.values[tuple(lo)])[both]
            best = max(best, float(np.max(d)))
    return best


def equicontinuity_probe(fs: Sequence[GridField], phi: GridField, m: int, q: float,
                         cfg: Optional[SolveConfig] = None,
                         cells: Sequence[int] = (1, 2, 4, 8, 16)) -> Tuple[List[ModulusRow], List[float], bool]:
    """
    Shared modulus of continuity over dyadic separations, the L^q norms of the
    family, and whether the modulus at 4h lies below the one at 16h.
    """
    n = phi.domain.n
    if q <= n / m:
        raise DomainError(f"q={q:g} must exceed n/m={n / m:g}")
    sols = [solve_dirichlet(f, phi, m, cfg).solution for f in fs]
    norms = [lq_norm(f, q) for f in fs]
    h = phi.domain.h
    rows = [ModulusRow(int(c), c * h, max(oscillation(u, int(c)) for u in sols)) for c in cells]
    by_cells = {r.cells: r.modulus for r in rows}
    decays = by_cells.get(4, 0.0) < by_cells.get(16, math.inf)
    return rows, norms, decays


# --- interior Laplacian bound ----------------------------------------------------

@dataclass(frozen=True)
class LaplacianBound:
    sup_t: float
    defect: float
    c1: float
    eps: float

    @property
    def holds(self) -> bool:
        return self.defect >= -self.c1


def _positions(sub: np.ndarray, full: np.ndarray) -> np.ndarray:
    return np.searchsorted(full, sub)


def interior_laplacian_bound(u: GridField, psi: GridField, m: int, eps: Optional[float] = None,
                             region: Optional[np.ndarray] = None) -> LaplacianBound:
    """
    sup over Ω' of T_ε u and min over Ω' of tr(G(Hu) · H(T_ε u)). The bound on the
    defect is m · sup ψ^{(m-1)/m} · 2n · max|D²ψ^{1/m}| plus a grid allowance.
    """
    dom = u.domain
    interior = dom.mask == INTERIOR
    pvals = psi.values[interior]
    if np.min(pvals) <= 0:
        raise DomainError("ψ must be bounded below by a positive constant")
    eps = 2.0 * dom.h if eps is None else eps
    t_field = t_epsilon(u, eps)
    tdom = t_field.domain
    sel = (tdom.mask == INTERIOR) & (interior_distance(dom) > eps + 1e-9 * dom.h)
    if region is not None:
        sel &= np.asarray(region, dtype=bool)
    require(bool(sel.any()), "Ω' has no points where T_ε is defined")
    sup_t = float(np.max(t_field.values[sel]))

    h_t = complex_hessian(t_field).matrices
    h_u = complex_hessian(u).matrices
    t_idx = tdom.interior_index
    g = cominor_batch(h_u[_positions(t_idx, dom.interior_index)], m)
    contraction = np.real(np.einsum("pij,pji->p", g, h_t))
    keep = sel.ravel()[t_idx]
    defect = float(np.min(contraction[keep]))

    root = psi.map(lambda x: np.abs(x) ** (1.0 / m))
    curv = float(np.max(np.abs(eigvalsh_batch(real_hessian(root).astype(complex))), initial=0.0))
    c1 = m * float(np.max(pvals)) ** ((m - 1.0) / m) * 2 * dom.n * curv + 10.0 * dom.h ** 2 / eps ** 2
    return LaplacianBound(sup_t=sup_t, defect=defect, c1=c1, eps=eps)


# --- mixed densities and convolution --------------------------------------------

def weak_garding_check(fields: Sequence[GridField], m: int) -> Tuple[np.ndarray, np.ndarray]:
    """Per interior point: mixed σ_m of the Hessians against Π σ_m(u_i)^{1/m}."""
    require(len(fields) == m, f"need exactly m={m} fields")
    dom = fields[0].domain
    for u in fields:
        require(u.domain.shape == dom.shape and np.array_equal(u.domain.mask, dom.mask),
                "fields live on different domains")
    mats = [complex_hessian(u).matrices for u in fields]
    lhs = mixed_sigma_batch(mats)
    rhs = np.ones(lhs.shape)
    for a in mats:
        rhs = rhs * np.clip(elem_sym_all(eigvalsh_batch(a), m)[:, m], 0.0, None) ** (1.0 / m)
    return lhs, rhs


def convolution_hessian_check(u: GridField, psi: GridField, m: int, eps: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    S_m(λ(H(u_(ε))))^{1/m} against (ψ^{1/m})_(ε) at the interior points of the averaged
    domain whose closed ε-ball holds interior points of u only.
    """
    avg = ball_average(u, eps)
    root = ball_average(psi.map(lambda x: np.abs(x) ** (1.0 / m)), eps)
    idx = avg.domain.interior_index
    keep = interior_distance(u.domain).ravel()[idx] > eps + 1e-9 * u.domain.h
    require(bool(keep.any()), f"no point lies {eps:g} inside the interior")
    lam = complex_hessian(avg).eigenvalues()[keep]
    lhs = np.clip(elem_sym_all(lam, m)[:, m], 0.0, None) ** (1.0 / m)
    rhs = root.values.ravel()[idx[keep]]
    return lhs, rhs


# --- a priori bounds and sublevel sets -------------------------------------------

@dataclass(frozen=True)
class LinftyBound:
    sup_abs: float
    f_norm: float
    gap_norm: float


def linfty_bound(f: GridField, phi: GridField, m: int, q: float,
                 cfg: Optional[SolveConfig] = None) -> LinftyBound:
    """sup|u|, ‖f‖_q and ‖(v - u)_+‖_{q'} with v the maximal function for the same φ."""
    n = f.domain.n
    if q <= n / m:
        raise DomainError(f"q={q:g} must exceed n/m={n / m:g}")
    u = solve_dirichlet(f, phi, m, cfg).solution
    v = maximal_solution(phi, m, cfg).solution
    interior = f.domain.mask == INTERIOR
    gap = (v - u).map(lambda x: np.maximum(x, 0.0))
    return LinftyBound(
        sup_abs=float(np.max(np.abs(u.values[interior]))),
        f_norm=lq_norm(f, q),
        gap_norm=lq_norm(gap, q / (q - 1.0)),
    )


def unit_mass_density(f: GridField, m: int) -> GridField:
    """Rescale f ≥ 0 so that Σ (m!(n-m)!/n!) f h^{2n} = 1 over the interior; returns raw σ_m data."""
    dom = f.domain
    interior = dom.mask == INTERIOR
    total = float(np.sum(f.values[interior])) * dom.cell_volume / math.comb(dom.n, m)
    require(total > 0, "density has zero mass")
    return f * (1.0 / total)


@dataclass(frozen=True)
class SublevelRow:
    s: float
    cap: float
    cap_bound: float
    volume: float
    volume_shape: float


def sublevel_estimates(u: GridField, m: int, s_values: Sequence[float], p: float,
                       cfg: Optional[SolveConfig] = None) -> List[SublevelRow]:
    """For u of unit mass: cap_m(U(s)) against s^{-m} and V(U(s)) against s^{-pm}."""
    dom = u.domain
    interior = dom.mask == INTERIOR
    rows = []
    for s in s_values:
        U = interior & (u.values < -s)
        cap = capacity(U, dom, m, cfg).extremal if U.any() else 0.0
        rows.append(SublevelRow(float(s), cap, float(s) ** (-m), sublevel_volume(u, s), float(s) ** (-p * m)))
    return rows
