import math

import numpy as np
import pytest
from pydantic import ValidationError

from conftest import quadratic
from hesslab import solver
from hesslab.errors import AdmissibilityError, DomainError, LiftOrderError
from hesslab.field import BOUNDARY, INTERIOR, GridDomain, GridField, hessian_density, msh_certificate
from hesslab.solver import (
    SolveConfig,
    SolveReport,
    default_lifts,
    maximal_solution,
    poisson_solve,
    premollify,
    solve_dirichlet,
    solve_torus,
)


@pytest.mark.parametrize("n,m,points", [(1, 1, 9), (2, 1, 9), (2, 2, 9)])
def test_quadratic_data_are_reproduced_exactly(n, m, points):
    dom = GridDomain.ball(n, points)
    c = 0.8
    f = GridField.constant(dom, math.comb(n, m) * c ** m)
    rep = solve_dirichlet(f, quadratic(dom, c), m, SolveConfig(tol_residual=1e-11))
    assert rep.converged
    assert rep.target_residual == rep.residual
    assert np.allclose(rep.solution.values, quadratic(dom, c).values, atol=1e-9, equal_nan=True)


def test_form_normalization():
    dom = GridDomain.ball(2, 9)
    f = GridField.constant(dom, 0.25)
    rep = solve_dirichlet(f, quadratic(dom, 0.5), 2, SolveConfig(normalization="form"))
    dens = hessian_density(rep.solution, 2, normalization="form")
    assert np.allclose(dens.interior_values(), 0.25, rtol=1e-7)


def test_laplace_case_agrees_with_poisson(disk):
    f = GridField.from_function(disk, lambda x: 1.0 + 0.5 * x[..., 0])
    phi = GridField.from_function(disk, lambda x: x[..., 0] * x[..., 1])
    rep = solve_dirichlet(f, phi, 1, SolveConfig(tol_residual=1e-11))
    ref = poisson_solve(f, phi)
    assert rep.converged
    sel = disk.mask != 0
    assert np.max(np.abs(rep.solution.values[sel] - ref.values[sel])) < 1e-9


def test_nonquadratic_density_converges(ball2):
    f = GridField.from_function(ball2, lambda x: 1.0 + 0.5 * np.cos(np.pi * x[..., 0]))
    rep = solve_dirichlet(f, quadratic(ball2, 1.0), 2)
    assert rep.converged
    assert rep.residual <= 1e-8
    assert all(0 < s <= 1 for s in rep.steps)
    assert [r["iter"] for r in rep.diagnostics_rows()] == list(range(len(rep.residual_history)))


def test_maximal_solution_is_harmonic_for_m_one(disk):
    phi = GridField.from_function(disk, lambda x: x[..., 0] ** 2 - 0.3 * x[..., 1])
    rep = maximal_solution(phi, 1)
    harmonic = poisson_solve(GridField.constant(disk, 0.0), phi)
    sel = disk.mask != 0
    assert np.max(np.abs(rep.solution.values[sel] - harmonic.values[sel])) < 1e-6
    assert rep.lifts == list(default_lifts(1.0, SolveConfig().tol_residual))
    assert rep.target_residual <= 3e-8


def test_lifts_halve():
    assert default_lifts(3.0, 0.375) == (3.0, 1.5, 0.75, 0.375)
    assert default_lifts(3.0, 0.4) == (3.0, 1.5, 0.75, 0.375)
    with pytest.raises(DomainError):
        default_lifts(1.0, 0.0)


def test_degenerate_density_lifts_down_to_tolerance():
    dom = GridDomain.ball(2, 9)
    f = GridField.from_function(dom, lambda x: 2.0 * np.maximum(x[..., 0], 0.0))
    cfg = SolveConfig(tol_residual=1e-8)
    rep = solve_dirichlet(f, GridField.constant(dom, 0.0), 2, cfg)
    assert rep.converged
    assert rep.lifts[-1] <= cfg.tol_residual
    assert rep.target_residual <= cfg.tol_residual ** 0.5 + cfg.tol_residual


def test_lift_order_is_enforced(disk, monkeypatch):
    calls = []

    def sinking(prob, u0, f_root):
        calls.append(f_root)
        flat = u0.copy()
        flat[prob.free] -= len(calls)
        return SolveReport(GridField(prob.domain, flat.reshape(prob.domain.shape)), [0.0], [0], True, 1)

    monkeypatch.setattr(solver, "_newton", sinking)
    zero = GridField.constant(disk, 0.0)
    cfg = SolveConfig(degenerate_lift=(1.0, 0.5, 0.25))
    with pytest.raises(LiftOrderError) as info:
        solve_dirichlet(zero, quadratic(disk), 1, cfg, initial=quadratic(disk))
    assert info.value.lift == 0.5
    assert info.value.drop == pytest.approx(2.0)
    assert info.value.report.lifts == [1.0, 0.5]
    assert len(calls) == 2


def test_smaller_lift_gives_larger_solution(ball2):
    phi = quadratic(ball2, 1.0)
    big = maximal_solution(phi, 2, SolveConfig(degenerate_lift=(0.5,))).solution
    small = maximal_solution(phi, 2, SolveConfig(degenerate_lift=(0.1,))).solution
    sel = ball2.mask == INTERIOR
    assert np.all(big.values[sel] <= small.values[sel] + ball2.h ** 2)
    assert np.max(small.values[sel] - big.values[sel]) > 0


def test_larger_density_gives_smaller_solution(ball2):
    phi = quadratic(ball2, 1.0)
    f = GridField.constant(ball2, 2.0)
    g = GridField.from_function(ball2, lambda x: 2.0 + np.exp(-4.0 * np.sum(x * x, axis=-1)))
    u = solve_dirichlet(f, phi, 2).solution
    v = solve_dirichlet(g, phi, 2).solution
    sel = ball2.mask == INTERIOR
    assert np.all(u.values[sel] >= v.values[sel] - ball2.h ** 2)
    assert np.max(u.values[sel] - v.values[sel]) > 0


def test_higher_boundary_data_give_higher_solution(ball2):
    f = GridField.constant(ball2, 1.0)
    low = GridField.from_function(ball2, lambda x: x[..., 0] * x[..., 1])
    high = GridField.from_function(ball2, lambda x: x[..., 0] * x[..., 1] + 0.1 * (1.0 + x[..., 0]))
    u = solve_dirichlet(f, low, 2).solution
    v = solve_dirichlet(f, high, 2).solution
    sel = ball2.mask == INTERIOR
    assert np.all(u.values[sel] <= v.values[sel] + ball2.h ** 2)


@pytest.mark.parametrize("points", [11, 13])
def test_initial_guess_on_finer_balls(points):
    dom = GridDomain.ball(2, points)
    rep = solve_dirichlet(GridField.constant(dom, 1.0), GridField.constant(dom, 0.0), 2)
    assert rep.converged
    assert not msh_certificate(rep.solution, 2, 0.0)


def test_nonquadratic_boundary_data():
    dom = GridDomain.ball(2, 11)
    phi = GridField.from_function(dom, lambda x: x[..., 0] * x[..., 1] + x[..., 2] ** 2 + 0.3 * np.sin(3 * x[..., 3]))
    rep = solve_dirichlet(GridField.constant(dom, 1.0), phi, 2)
    assert rep.converged
    assert rep.residual <= 1e-8
    edge = dom.mask == BOUNDARY
    assert np.array_equal(rep.solution.values[edge], phi.values[edge])
    assert not msh_certificate(rep.solution, 2, 0.0)


def test_poisson_solve_reproduces_quadratic(ball2):
    u = poisson_solve(GridField.constant(ball2, 2.0), quadratic(ball2, 1.0))
    sel = ball2.mask != 0
    assert np.allclose(u.values[sel], quadratic(ball2, 1.0).values[sel], atol=1e-9)


def test_negative_density_is_rejected(disk):
    f = GridField.from_function(disk, lambda x: x[..., 0])
    with pytest.raises(DomainError):
        solve_dirichlet(f, quadratic(disk), 1)


def test_nonadmissible_initial_field(disk):
    f = GridField.constant(disk, 1.0)
    with pytest.raises(AdmissibilityError) as info:
        solve_dirichlet(f, quadratic(disk), 1, initial=quadratic(disk, -1.0))
    assert info.value.iteration == 0
    assert info.value.violations > 0


def test_torus_is_refused_by_the_dirichlet_solver():
    dom = GridDomain.torus(1, 8)
    with pytest.raises(DomainError):
        solve_dirichlet(GridField.constant(dom, 1.0), GridField.constant(dom, 0.0), 1)


def test_config_validation():
    with pytest.raises(ValidationError):
        SolveConfig(degenerate_lift=(0.5, 1.0))
    with pytest.raises(ValidationError):
        SolveConfig(normalization="volume")
    with pytest.raises(ValidationError):
        SolveConfig(damping=0.0)


def test_premollify_keeps_edge_values(disk):
    f = GridField.from_function(disk, lambda x: 1.0 + x[..., 0] ** 2)
    g = premollify(f)
    sel = disk.mask != 0
    assert np.all(np.isfinite(g.values[sel]))
    assert g.values[8, 0] == f.values[8, 0]


def test_torus_constant_density():
    dom = GridDomain.torus(1, 8)
    rep = solve_torus(GridField.constant(dom, 2.0), 1)
    assert rep.converged
    assert np.allclose(rep.solution.values, 0.0, atol=1e-12)
    assert rep.normalization_constant == pytest.approx(1.0)


@pytest.mark.parametrize("n,m,points", [(1, 1, 16), (2, 2, 8)])
def test_torus_cosine_density(n, m, points):
    dom = GridDomain.torus(n, points)
    f = GridField.from_function(dom, lambda x: 1.0 + 0.1 * np.cos(2 * np.pi * x[..., 0]))
    rep = solve_torus(f, m, SolveConfig(tol_residual=1e-10))
    assert rep.converged
    assert rep.solution.max() == 0.0
    assert rep.solution.min() < 0.0
    assert rep.normalization_constant > 0
    # σ_m = s^m f̃ leaves exactly |s - 1| f̃^{1/m} against f̃ itself
    root = (math.comb(n, m) * f.values / np.mean(f.values)) ** (1.0 / m)
    s = rep.normalization_constant ** (1.0 / m)
    assert rep.target_residual == pytest.approx(abs(s - 1.0) * np.max(root), abs=1e-9)


def test_torus_constant_density_has_no_unscaled_residual():
    dom = GridDomain.torus(2, 6)
    rep = solve_torus(GridField.constant(dom, 3.0), 2)
    assert rep.target_residual == pytest.approx(0.0, abs=1e-12)


def test_torus_rejects_bad_data():
    dom = GridDomain.torus(1, 8)
    with pytest.raises(DomainError):
        solve_torus(GridField.constant(dom, 0.0), 1)
    with pytest.raises(DomainError):
        solve_torus(GridField.constant(GridDomain.ball(1, 9), 1.0), 1)
