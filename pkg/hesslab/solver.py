# hesslab/solver.py
"""
Dirichlet and periodic solvers for σ_m(u_{z z̄}) = f.

Newton runs on the concave form F(u) = S_m(λ(Hu))^{1/m} - f^{1/m}. Its
linearization is (1/m) S_m^{(1-m)/m} tr(G · H δu) with G the cominor matrix,
assembled as a sparse operator on the free grid points.
"""
import copy
import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, field_validator
from scipy import sparse
from scipy.sparse import linalg as spla

from hesslab.errors import AdmissibilityError, DomainError, LiftOrderError, require
from hesslab.field import (
    BOUNDARY,
    GridField,
    INTERIOR,
    mollify,
    real_hessian_values,
)
from hesslab.hermlin import cominor_batch, complex_from_real, eigvalsh_batch, real_form
from hesslab.stencil import apply_operator, is_symmetric, operator_matrix
from hesslab.symmfunc import elem_sym_all, in_cone

log = logging.getLogger(__name__)

POISSON_RTOL = 1e-12
GMRES_RESTART = 60
DIRECT_LIMIT = 20_000  # unknowns; above this a stalled Krylov solve is not retried with LU


class SolveConfig(BaseModel):
    max_iter: int = Field(40, ge=1)
    tol_residual: float = Field(1e-8, gt=0)
    damping: float = Field(1.0, gt=0, le=1)
    admissibility_margin: float = Field(0.0, ge=0)
    degenerate_lift: Tuple[float, ...] = ()
    linear_rtol: float = Field(1e-10, gt=0, lt=1)
    max_halvings: int = Field(30, ge=0)
    max_doublings: int = Field(20, ge=0)
    normalization: str = "raw"

    @field_validator("degenerate_lift")
    @classmethod
    def _lift_decreasing(cls, v):
        if any(e <= 0 for e in v):
            raise ValueError("lift values must be positive")
        if any(b >= a for a, b in zip(v, v[1:])):
            raise ValueError("lift sequence must be strictly decreasing")
        return v

    @field_validator("normalization")
    @classmethod
    def _known_normalization(cls, v):
        if v not in ("raw", "form"):
            raise ValueError("normalization must be 'raw' or 'form'")
        return v


@dataclass
class SolveReport:
    """
    `residual` is the Newton residual of the last problem solved: f + ε_last on
    the lift path, s^m f̃ on the torus. `target_residual` measures the same
    sup-norm against the problem as posed (unlifted f, unscaled f̃).
    """
    solution: GridField
    residual_history: List[float]
    admissibility: List[int]
    converged: bool
    wall_iterations: int
    steps: List[float] = field(default_factory=list)
    normalization: str = "raw"
    normalization_constant: float = 1.0
    lifts: List[float] = field(default_factory=list)
    target_residual: Optional[float] = None

    @property
    def residual(self) -> float:
        return self.residual_history[-1] if self.residual_history else math.inf

    def diagnostics_rows(self) -> List[dict]:
        rows = []
        for i, (res, viol) in enumerate(zip(self.residual_history, self.admissibility)):
            step = self.steps[i - 1] if 0 < i <= len(self.steps) else 0.0
            rows.append({"iter": i, "residual": res, "step": step, "violations": viol})
        return rows


# --- pointwise pieces ------------------------------------------------------------

def _hessians(domain, flat: np.ndarray, shift: float) -> np.ndarray:
    mats = complex_from_real(real_hessian_values(domain, flat))
    if shift:
        mats = mats + shift * np.eye(domain.n)
    return mats


def _signed_root(s: np.ndarray, m: int) -> np.ndarray:
    return np.sign(s) * np.abs(s) ** (1.0 / m)


def _raw_density(f: GridField, m: int, cfg: SolveConfig) -> np.ndarray:
    vals = f.interior_values()
    if cfg.normalization == "form":
        vals = vals * math.comb(f.domain.n, m)
    return vals


# --- linear algebra ----------------------------------------------------------------

def _jacobi(diag: np.ndarray) -> spla.LinearOperator:
    inv = 1.0 / diag
    return spla.LinearOperator((diag.size, diag.size), matvec=lambda r: inv * np.ravel(r), dtype=float)


def _krylov_fallback(a: sparse.spmatrix, b: np.ndarray, x: np.ndarray, method: str, info: int) -> np.ndarray:
    if b.size <= DIRECT_LIMIT:
        log.debug("%s returned info=%d, falling back to a direct solve", method, info)
        return spla.spsolve(a.tocsc(), b)
    log.warning("%s stopped with info=%d on %d unknowns", method, info, b.size)
    return x


def _linear_solve(a: sparse.csr_matrix, b: np.ndarray, rtol: float) -> np.ndarray:
    """
    a is an elliptic operator with negative diagonal. -a x = -b goes to
    Jacobi-preconditioned CG when -a is symmetric, BiCGSTAB and then GMRES when not.
    """
    neg = (-a).tocsr()
    diag = neg.diagonal()
    if np.any(diag <= 0):
        raise DomainError("linearized operator lost ellipticity")
    precond = _jacobi(diag)
    maxiter = 20 * b.size
    if is_symmetric(neg):
        x, info = spla.cg(neg, -b, rtol=rtol, atol=0.0, maxiter=maxiter, M=precond)
        method = "cg"
    else:
        x, info = spla.bicgstab(neg, -b, rtol=rtol, atol=0.0, maxiter=maxiter, M=precond)
        method = "bicgstab"
        if info != 0:
            start = x if np.all(np.isfinite(x)) else None
            x, info = spla.gmres(neg, -b, x0=start, rtol=rtol, atol=0.0, restart=GMRES_RESTART,
                                 maxiter=max(50, b.size // GMRES_RESTART), M=precond)
            method = "gmres"
    if info != 0:
        x = _krylov_fallback(a, b, x, method, info)
    return x


def _bordered_solve(system: sparse.csr_matrix, rhs: np.ndarray, rtol: float) -> np.ndarray:
    """GMRES on [[J, c], [r, 0]]; Jacobi on the J block, identity on the border."""
    diag = system.diagonal().copy()
    diag[diag == 0] = 1.0
    x, info = spla.gmres(system, rhs, rtol=rtol, atol=0.0, restart=GMRES_RESTART,
                         maxiter=max(50, rhs.size // GMRES_RESTART), M=_jacobi(diag))
    if info != 0:
        x = _krylov_fallback(system, rhs, x, "gmres", info)
    return x


# --- Dirichlet problems ------------------------------------------------------------

class _Problem:
    """Free/fixed bookkeeping for one Dirichlet solve."""

    def __init__(self, f: GridField, phi: GridField, m: int, cfg: SolveConfig,
                 fixed: Optional[np.ndarray], fixed_values: Optional[GridField]):
        dom = f.domain
        require(dom.kind in ("box", "ball"), f"Dirichlet problems need a box or ball, got {dom.kind}")
        require(1 <= m <= dom.n, f"m={m} out of range [1, {dom.n}]")
        require(phi.domain.shape == dom.shape, "f and phi live on different lattices")
        self.domain, self.m, self.cfg = dom, m, cfg
        mask = dom.mask.ravel()
        pinned = np.zeros(dom.size, dtype=bool)
        if fixed is not None:
            pinned = np.asarray(fixed, dtype=bool).ravel() & (mask == INTERIOR)
        self.free = np.flatnonzero((mask == INTERIOR) & ~pinned)
        self.free_pos = np.searchsorted(dom.interior_index, self.free)
        data = np.where(mask == BOUNDARY, phi.values.ravel(), 0.0)
        if pinned.any():
            require(fixed_values is not None, "fixed points need fixed_values")
            data = np.where(pinned, fixed_values.values.ravel(), data)
        data[mask == 0] = np.nan
        self.data = data
        self.fixed = np.flatnonzero((mask == BOUNDARY) | pinned)

    def with_cfg(self, cfg: SolveConfig) -> "_Problem":
        other = copy.copy(self)
        other.cfg = cfg
        return other

    def laplace_coeff(self) -> np.ndarray:
        n = self.domain.n
        return np.broadcast_to(real_form(np.eye(n)), (self.domain.interior_index.size, 2 * n, 2 * n))

    def poisson(self, rhs_free: np.ndarray, data: np.ndarray) -> np.ndarray:
        coeff = self.laplace_coeff()
        base = data.copy()
        base[self.free] = 0.0
        r = rhs_free - apply_operator(self.domain, coeff, base)[self.free_pos]
        a = operator_matrix(self.domain, coeff, self.free)
        base[self.free] = _linear_solve(a, r, POISSON_RTOL)
        return base

    def violations(self, lam: np.ndarray) -> int:
        ok = in_cone(lam[self.free_pos], self.m, tol=-self.cfg.admissibility_margin)
        return int(np.count_nonzero(~ok))

    def residual(self, flat: np.ndarray, f_root: np.ndarray) -> float:
        lam = eigvalsh_batch(_hessians(self.domain, flat, 0.0))
        s = elem_sym_all(lam[self.free_pos], self.m)[:, self.m]
        return float(np.max(np.abs(_signed_root(s, self.m) - f_root), initial=0.0))


def poisson_solve(f: GridField, phi: GridField, fixed: Optional[np.ndarray] = None,
                  fixed_values: Optional[GridField] = None) -> GridField:
    """Σ_j u_{z_j z̄_j} = f at free interior points, u = φ on the boundary; Jacobi-preconditioned CG."""
    prob = _Problem(f, phi, 1, SolveConfig(), fixed, fixed_values)
    if prob.free.size == 0:
        return GridField(f.domain, prob.data.reshape(f.domain.shape))
    out = prob.poisson(f.values.ravel()[prob.free], prob.data)
    return GridField(f.domain, out.reshape(f.domain.shape))


def _bowl(prob: _Problem) -> np.ndarray:
    """|z - z₀|² - R² with R² the largest value on the lattice domain, so ≤ 0 there."""
    q = prob.domain.radius_squared().ravel()
    inside = ~np.isnan(prob.data)
    return np.where(inside, q - np.max(q[inside]), np.nan)


def _initial_guess(prob: _Problem, f_raw_free: np.ndarray) -> np.ndarray:
    """
    u₀ = A·bowl + P(φ) with A doubled until u₀ is admissible and σ_m(u₀) ≥ sup f.
    The bowl has Hessian exactly I, so u₀ does not match φ on the lattice boundary;
    `_release_bowl` walks the fixed values back to the data.
    """
    dom, m, cfg = prob.domain, prob.m, prob.cfg
    p_phi = prob.poisson(np.zeros(prob.free.size), prob.data)
    bowl = _bowl(prob)
    top = max(float(np.max(f_raw_free, initial=0.0)), 0.0)
    a = max((top / math.comb(dom.n, m)) ** (1.0 / m), 1e-3)
    for k in range(cfg.max_doublings + 1):
        u0 = p_phi + a * bowl
        lam = eigvalsh_batch(_hessians(dom, u0, 0.0))
        bad = prob.violations(lam)
        if bad == 0 and float(np.min(elem_sym_all(lam[prob.free_pos], m)[:, m])) >= top:
            log.debug("bowl coefficient A=%.6g after %d doublings", a, k)
            break
        a *= 2.0
    else:
        raise AdmissibilityError("no admissible initial guess", iteration=0, violations=bad)
    return _release_bowl(prob, u0, a * bowl, np.maximum(f_raw_free, 0.0) ** (1.0 / m))


def _release_bowl(prob: _Problem, u0: np.ndarray, gap: np.ndarray, f_root: np.ndarray) -> np.ndarray:
    """
    u0 holds data + gap on the fixed points. Shrink the gap in stages that keep the
    iterate admissible, with a loose Newton solve after each stage to move back
    inside Γ_m. Returns an admissible field equal to the data on the fixed points.
    """
    fixed, cfg = prob.fixed, prob.cfg
    if not np.any(gap[fixed]):
        return u0
    loose_tol = max(cfg.tol_residual, 1e-6 * max(1.0, float(np.max(f_root, initial=0.0))))
    loose = prob.with_cfg(cfg.model_copy(update={"tol_residual": loose_tol}))
    flat = u0
    t, dt = 0.0, 1.0
    while True:
        last = dt >= 1.0 - t
        step = 1.0 - t if last else dt
        trial = flat.copy()
        trial[fixed] = prob.data[fixed] + (0.0 if last else 1.0 - t - step) * gap[fixed]
        bad = prob.violations(eigvalsh_batch(_hessians(prob.domain, trial, 0.0)))
        if bad:
            dt *= 0.5
            if dt < 2.0 ** (-cfg.max_halvings):
                raise AdmissibilityError("no admissible initial guess", iteration=0, violations=bad,
                                         detail=f"boundary data stuck {t:.3e} of the way to φ")
            continue
        if last:
            return trial
        t += step
        flat = _newton(loose, trial, f_root).solution.values.ravel().copy()
        log.debug("boundary homotopy at t=%.4f", t)
        dt = min(2.0 * dt, 1.0)


def _newton(prob: _Problem, u0: np.ndarray, f_root: np.ndarray) -> SolveReport:
    dom, m, cfg = prob.domain, prob.m, prob.cfg
    free, pos = prob.free, prob.free_pos

    def evaluate(flat):
        mats = _hessians(dom, flat, 0.0)
        lam = eigvalsh_batch(mats)
        s = elem_sym_all(lam[pos], m)[:, m]
        return mats, lam, s

    flat = u0.copy()
    mats, lam, s = evaluate(flat)
    viol = prob.violations(lam)
    if viol:
        raise AdmissibilityError("initial iterate is not admissible", iteration=0, violations=viol)
    fval = _signed_root(s, m) - f_root
    res = float(np.max(np.abs(fval), initial=0.0))
    history, adm, steps = [res], [viol], []
    converged = res <= cfg.tol_residual
    it = 0
    while not converged and it < cfg.max_iter:
        it += 1
        g = cominor_batch(mats[pos], m)
        weight = np.maximum(s, 1e-300) ** ((1.0 - m) / m) / m
        coeff = np.zeros((dom.interior_index.size, 2 * dom.n, 2 * dom.n))
        coeff[pos] = weight[:, None, None] * real_form(g)
        jac = operator_matrix(dom, coeff, free)
        delta = _linear_solve(jac, -fval, cfg.linear_rtol)

        t = cfg.damping
        accepted = False
        admissible_seen = False
        for _ in range(cfg.max_halvings + 1):
            trial = flat.copy()
            trial[free] += t * delta
            t_mats, t_lam, t_s = evaluate(trial)
            t_viol = prob.violations(t_lam)
            if t_viol == 0:
                admissible_seen = True
                t_f = _signed_root(t_s, m) - f_root
                t_res = float(np.max(np.abs(t_f), initial=0.0))
                if t_res <= res:
                    accepted = True
                    break
            t *= 0.5
        if not accepted:
            if not admissible_seen:
                raise AdmissibilityError(
                    f"admissibility lost at iteration {it}",
                    iteration=it, violations=t_viol, residual_history=history,
                )
            log.warning("Newton stalled at iteration %d (residual %.3e)", it, res)
            break
        flat, mats, lam, s, fval, res = trial, t_mats, t_lam, t_s, t_f, t_res
        history.append(res)
        adm.append(0)
        steps.append(t)
        log.debug("newton it=%d residual=%.3e step=%.3g", it, res, t)
        converged = res <= cfg.tol_residual

    return SolveReport(
        solution=GridField(dom, flat.reshape(dom.shape)),
        residual_history=history,
        admissibility=adm,
        converged=converged,
        wall_iterations=it,
        steps=steps,
        normalization=cfg.normalization,
    )


def default_lifts(scale: float, floor: float = 1e-8) -> Tuple[float, ...]:
    """ε_k = 2^{-k} · scale for k = 0, 1, ... through the first ε_k ≤ floor."""
    require(floor > 0, "lift floor must be positive")
    eps = scale if scale > 0 else 1.0
    out = [eps]
    while eps > floor:
        eps *= 0.5
        out.append(eps)
    return tuple(out)


def solve_dirichlet(
    f: GridField,
    phi: GridField,
    m: int,
    cfg: Optional[SolveConfig] = None,
    initial: Optional[GridField] = None,
    fixed: Optional[np.ndarray] = None,
    fixed_values: Optional[GridField] = None,
) -> SolveReport:
    """
    σ_m(u) = f in the interior, u = φ on the boundary (and u = fixed_values on the
    optional `fixed` interior mask). Densities with zeros go through the lift
    sequence f + ε_k, which runs down to the residual tolerance.
    """
    cfg = cfg or SolveConfig()
    prob = _Problem(f, phi, m, cfg, fixed, fixed_values)
    f_raw = _raw_density(f, m, cfg)[prob.free_pos]
    if np.any(f_raw < 0):
        raise DomainError("density f must be nonnegative", detail=f"min f = {f_raw.min():.3e}")
    if prob.free.size == 0:
        sol = GridField(f.domain, prob.data.reshape(f.domain.shape))
        return SolveReport(sol, [0.0], [0], True, 0, normalization=cfg.normalization, target_residual=0.0)

    if np.min(f_raw) > 0 and not cfg.degenerate_lift:
        u0 = initial.values.ravel().copy() if initial is not None else _initial_guess(prob, f_raw)
        u0[prob.fixed] = prob.data[prob.fixed]
        report = _newton(prob, u0, f_raw ** (1.0 / m))
        report.target_residual = report.residual
        return report

    lifts = cfg.degenerate_lift or default_lifts(float(np.max(f_raw)), cfg.tol_residual)
    return _lift_sequence(prob, f_raw, lifts, initial)


def _lift_sequence(prob: _Problem, f_raw: np.ndarray, lifts, initial: Optional[GridField]) -> SolveReport:
    """
    Warm-started solves for f + ε_k. Each solution must lie above its predecessor
    up to an h² slack, otherwise LiftOrderError carries the offending solve.
    """
    dom = prob.domain
    slack = 10.0 * dom.h ** 2
    if initial is not None:
        flat = initial.values.ravel().copy()
        flat[prob.fixed] = prob.data[prob.fixed]
    else:
        flat = _initial_guess(prob, f_raw + lifts[0])
    report = None
    prev = None
    for eps in lifts:
        report = _newton(prob, flat, (f_raw + eps) ** (1.0 / prob.m))
        flat = report.solution.values.ravel().copy()
        if prev is not None:
            drop = float(np.max(prev[prob.free] - flat[prob.free]))
            if drop > slack * max(1.0, float(np.max(np.abs(flat[prob.free])))):
                report.lifts = [e for e in lifts if e >= eps]
                raise LiftOrderError(f"lift {eps:.3e} decreased the solution by {drop:.3e}",
                                     lift=eps, drop=drop, report=report,
                                     detail=f"allowed slack {slack:.3e}")
        prev = flat
        log.debug("lift %.3e: residual %.3e in %d iterations", eps, report.residual, report.wall_iterations)
    report.lifts = list(lifts)
    report.target_residual = prob.residual(flat, f_raw ** (1.0 / prob.m))
    log.info("lift sequence down to %.3e: residual %.3e against the unlifted density",
             lifts[-1], report.target_residual)
    return report


def maximal_solution(phi: GridField, m: int, cfg: Optional[SolveConfig] = None,
                     fixed: Optional[np.ndarray] = None,
                     fixed_values: Optional[GridField] = None) -> SolveReport:
    """σ_m(u) = 0 with u = φ on the boundary, through the lifts f = ε_k."""
    zero = GridField.constant(phi.domain, 0.0)
    cfg = cfg or SolveConfig()
    prob = _Problem(zero, phi, m, cfg, fixed, fixed_values)
    if prob.free.size == 0:
        return SolveReport(GridField(phi.domain, prob.data.reshape(phi.domain.shape)), [0.0], [0], True, 0,
                           target_residual=0.0)
    lifts = cfg.degenerate_lift or default_lifts(1.0, cfg.tol_residual)
    return _lift_sequence(prob, np.zeros(prob.free.size), lifts, None)


def premollify(f: GridField, h: Optional[float] = None) -> GridField:
    """Mollify at scale 2h; points without a full stencil keep their values."""
    h = f.domain.h if h is None else h
    smooth = mollify(f, 2.0 * h)
    keep = np.isfinite(smooth.values)
    return f.with_values(np.where(keep, smooth.values, f.values))


# --- torus -----------------------------------------------------------------------

def solve_torus(f: GridField, m: int, cfg: Optional[SolveConfig] = None) -> SolveReport:
    """
    (β + dd^c u)^m ∧ β^{n-m} = f β^n on the unit flat torus, i.e. σ_m(I + Hu) = f̃
    with f̃ = C(n,m) f / mean(f). Newton is bordered by a scale unknown s
    (f̃ ← s^m f̃) and the gauge row Σ δu = 0; the result is shifted so max u = 0.
    """
    cfg = cfg or SolveConfig()
    dom = f.domain
    require(dom.kind == "torus", "solve_torus needs a torus domain")
    n = dom.n
    require(1 <= m <= n, f"m={m} out of range [1, {n}]")
    vals = f.values.ravel()
    if np.any(vals < 0):
        raise DomainError("density f must be nonnegative")
    mean = float(np.mean(vals))
    if mean <= 0:
        raise DomainError("f vanishes identically; mean normalization impossible")
    target = math.comb(n, m) * vals / mean
    root = target ** (1.0 / m)
    every = dom.interior_index
    N = every.size
    margin = cfg.admissibility_margin

    def evaluate(flat, s_scale):
        mats = _hessians(dom, flat, 1.0)
        lam = eigvalsh_batch(mats)
        sig = elem_sym_all(lam, m)[:, m]
        viol = int(np.count_nonzero(~in_cone(lam, m, tol=-margin)))
        fval = _signed_root(sig, m) - s_scale * root
        return mats, sig, viol, fval

    flat = np.zeros(N)
    s_scale = 1.0
    mats, sig, viol, fval = evaluate(flat, s_scale)
    res = float(np.max(np.abs(fval)))
    history, adm, steps = [res], [viol], []
    converged = res <= cfg.tol_residual and viol == 0
    it = 0
    border_row = sparse.csr_matrix(np.full((1, N), 1.0 / N))
    border_col = sparse.csr_matrix(-root.reshape(-1, 1))
    while not converged and it < cfg.max_iter:
        it += 1
        g = cominor_batch(mats, m)
        weight = np.maximum(sig, 1e-300) ** ((1.0 - m) / m) / m
        coeff = weight[:, None, None] * real_form(g)
        jac = operator_matrix(dom, coeff, every)
        system = sparse.bmat([[jac, border_col], [border_row, None]], format="csr")
        step = _bordered_solve(system, np.concatenate([-fval, [0.0]]), cfg.linear_rtol)
        du, ds = step[:N], step[N]

        t = cfg.damping
        accepted = False
        for _ in range(cfg.max_halvings + 1):
            t_flat = flat + t * du
            t_s = s_scale + t * ds
            t_mats, t_sig, t_viol, t_f = evaluate(t_flat, t_s)
            if t_viol == 0 and t_s > 0:
                t_res = float(np.max(np.abs(t_f)))
                if t_res <= res:
                    accepted = True
                    break
            t *= 0.5
        if not accepted:
            if t_viol:
                raise AdmissibilityError(f"torus iterate left Γ_{m} at iteration {it}",
                                         iteration=it, violations=t_viol, residual_history=history)
            log.warning("torus Newton stalled at iteration %d (residual %.3e)", it, res)
            break
        flat, s_scale, mats, sig, fval, res = t_flat, t_s, t_mats, t_sig, t_f, t_res
        history.append(res)
        adm.append(0)
        steps.append(t)
        log.debug("torus it=%d residual=%.3e step=%.3g scale=%.12g", it, res, t, s_scale)
        converged = res <= cfg.tol_residual

    flat = flat - np.max(flat)
    unscaled = float(np.max(np.abs(_signed_root(sig, m) - root)))
    log.info("torus scale s^m=%.12g, residual against f̃ %.3e", s_scale ** m, unscaled)
    return SolveReport(
        solution=GridField(dom, flat.reshape(dom.shape)),
        residual_history=history,
        admissibility=adm,
        converged=converged,
        wall_iterations=it,
        steps=steps,
        normalization=cfg.normalization,
        normalization_constant=s_scale ** m,
        target_residual=unscaled,
    )
