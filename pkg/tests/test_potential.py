import math

import numpy as np
import pytest

from conftest import quadratic
from hesslab.errors import DomainError
from hesslab.field import BOUNDARY, INTERIOR, GridDomain, GridField, hessian_density, lq_norm
from hesslab.potential import (
    capacity,
    comparison_check,
    convolution_hessian_check,
    dilate,
    equicontinuity_probe,
    extremal_function,
    fit_exponent,
    interior_laplacian_bound,
    linfty_bound,
    mass,
    oscillation,
    stability_density,
    stability_exponents,
    stability_sweep,
    sublevel_estimates,
    torus_comparison_check,
    unit_mass_density,
    volume_capacity_frontier,
    weak_garding_check,
)
from hesslab.solver import SolveConfig


def disk_set(dom: GridDomain, r: float) -> np.ndarray:
    return (dom.radius_squared() <= r * r) & (dom.mask == INTERIOR)


def test_fit_exponent_recovers_a_power_law():
    xs = [1.0, 2.0, 4.0, 8.0]
    fit = fit_exponent(xs, [3.0 * x ** 2 for x in xs])
    assert fit.slope == pytest.approx(2.0)
    assert fit.intercept == pytest.approx(math.log(3.0))
    assert fit.reliable
    with pytest.raises(DomainError):
        fit_exponent([1.0, 2.0], [1.0, -1.0])
    with pytest.raises(DomainError):
        fit_exponent([2.0, 2.0], [1.0, 3.0])


def test_dilate_adds_the_cross_stencil():
    mask = np.zeros((7, 7), dtype=bool)
    mask[3, 3] = True
    assert np.count_nonzero(dilate(mask)) == 9


def test_mass_of_quadratic(disk):
    # form-normalized σ_1(c|z|²) = c at every interior point
    u = quadratic(disk, 2.0)
    expected = 2.0 * np.count_nonzero(disk.mask == INTERIOR) * disk.cell_volume
    assert mass(u, 1) == pytest.approx(expected)


def test_extremal_function_range():
    dom = GridDomain.ball(1, 17)
    K = disk_set(dom, 0.25)
    u = extremal_function(K, dom, 1)
    inside = dom.mask != 0
    assert np.all(u.values[inside] >= -1.0) and np.all(u.values[inside] <= 0.0)
    assert np.allclose(u.values[K], -1.0)
    assert np.allclose(u.values[dom.mask == BOUNDARY], 0.0)


def test_compact_set_must_avoid_the_boundary(disk):
    with pytest.raises(DomainError):
        capacity(disk.mask == BOUNDARY, disk, 1)
    with pytest.raises(DomainError):
        capacity(np.zeros(disk.shape, dtype=bool), disk, 1)


@pytest.mark.slow
def test_planar_capacity_of_a_disk():
    # cap_1 of |z| ≤ r in the unit disk is π / (2 log(1/r)) in this normalization
    dom = GridDomain.ball(1, 33)
    est = capacity(disk_set(dom, 0.5), dom, 1)
    assert est.extremal == pytest.approx(math.pi / (2.0 * math.log(2.0)), rel=0.25)
    assert est.lower <= est.extremal * (1.0 + 5.0 * dom.h)


def test_capacity_grows_with_the_set():
    dom = GridDomain.ball(1, 17)
    small = capacity(disk_set(dom, 0.3), dom, 1).extremal
    large = capacity(disk_set(dom, 0.5), dom, 1).extremal
    assert 0.0 < small < large


def test_frontier_with_known_capacities(disk):
    Ks = [disk_set(disk, 0.3), disk_set(disk, 0.5)]
    rows = volume_capacity_frontier(Ks, disk, 1, [0.5, 1.0], caps=[1.0, 2.0])
    assert [r.p for r in rows] == [0.5, 1.0]
    assert all(r.below_threshold for r in rows)
    vols = [np.count_nonzero(K) * disk.cell_volume for K in Ks]
    assert rows[1].max_ratio == pytest.approx(max(vols[0] / 1.0, vols[1] / 2.0))
    with pytest.raises(DomainError):
        volume_capacity_frontier(Ks, disk, 1, [1.0], caps=[1.0, 0.0])


def test_comparison_of_equal_functions(disk):
    u = quadratic(disk, 1.0)
    assert comparison_check(u, u, 1) == (0.0, 0.0)
    with pytest.raises(DomainError):
        comparison_check(u, u + 1.0, 1)


def test_torus_comparison_of_equal_functions():
    dom = GridDomain.torus(1, 8)
    u = GridField.constant(dom, 0.0)
    assert torus_comparison_check(u, u, 1) == (0.0, 0.0)


def test_stability_exponents():
    q_conj, p, expo = stability_exponents(2, 1, 4.0, 5.0 / 3.0)
    assert q_conj == pytest.approx(4.0 / 3.0)
    assert p == pytest.approx(1.25)
    assert expo == pytest.approx(1.25 / 4.5)
    with pytest.raises(DomainError):
        stability_exponents(2, 1, 2.0, 1.5)
    with pytest.raises(DomainError):
        stability_exponents(2, 1, 4.0, 2.5)


def test_stability_density_needs_large_q(disk):
    u = quadratic(disk, 1.0)
    f = GridField.constant(disk, 1.0)
    with pytest.raises(DomainError):
        stability_density(u, u, f, f, 1.0, 1)
    lhs, rhs = stability_density(u, u, f, f, 2.0, 1)
    assert lhs == 0.0 and rhs == 0.0


def test_oscillation_of_a_linear_function(square):
    u = GridField.from_function(square, lambda x: x[..., 0])
    assert oscillation(u, 2) == pytest.approx(2 * square.h)
    assert oscillation(u, 100) == 0.0


def test_weak_garding_at_first_order(disk):
    lhs, rhs = weak_garding_check([quadratic(disk, 3.0)], 1)
    assert np.allclose(lhs, 3.0) and np.allclose(rhs, 3.0)
    with pytest.raises(DomainError):
        weak_garding_check([quadratic(disk)], 2)


def test_weak_garding_for_two_quadratics(ball2):
    lhs, rhs = weak_garding_check([quadratic(ball2, 1.0), quadratic(ball2, 4.0)], 2)
    # mixed σ_2(I, 4I) = 4, and σ_2(I)^{1/2} σ_2(4I)^{1/2} = 1 · 4
    assert np.allclose(lhs, 4.0) and np.allclose(rhs, 4.0)


def test_laplacian_bound_for_a_quadratic(disk):
    c = 1.5
    bound = interior_laplacian_bound(quadratic(disk, c), GridField.constant(disk, c), 1)
    assert bound.sup_t == pytest.approx(c, abs=1e-10)
    assert bound.defect == pytest.approx(0.0, abs=1e-8)
    assert bound.holds
    with pytest.raises(DomainError):
        interior_laplacian_bound(quadratic(disk), GridField.constant(disk, 0.0), 1)


def test_unit_mass_density(ball2):
    f = unit_mass_density(GridField.constant(ball2, 3.0), 2)
    interior = ball2.mask == INTERIOR
    assert np.sum(f.values[interior]) * ball2.cell_volume / math.comb(2, 2) == pytest.approx(1.0)
    with pytest.raises(DomainError):
        unit_mass_density(GridField.constant(ball2, 0.0), 2)


def test_sublevel_estimates(disk):
    u = quadratic(disk, 1.0) - 1.0
    rows = sublevel_estimates(u, 1, [0.5, 2.0], p=1.0)
    assert rows[0].cap > 0 and rows[0].volume > 0
    assert rows[1].cap == 0.0 and rows[1].volume == 0.0
    assert rows[0].cap_bound == pytest.approx(2.0)


def test_linfty_bound_for_m_one(disk):
    f = GridField.constant(disk, 1.0)
    phi = GridField.constant(disk, 0.0)
    est = linfty_bound(f, phi, 1, 2.0)
    # u is |z|² minus its harmonic extension, v is zero up to the last lift
    assert 0.5 < est.sup_abs <= 1.0
    assert est.f_norm == pytest.approx(math.sqrt(np.count_nonzero(disk.mask == INTERIOR) * disk.cell_volume))
    assert est.gap_norm > 0
    with pytest.raises(DomainError):
        linfty_bound(f, phi, 1, 1.0)


def test_stability_density_is_signed(disk):
    u = quadratic(disk, 1.0)
    lower = u.with_values(np.where(disk.mask == INTERIOR, u.values - 0.5, u.values))
    f = GridField.constant(disk, 1.0)
    assert stability_density(u, lower, f, f, 2.0, 1)[0] == pytest.approx(-0.5)
    assert stability_density(lower, u, f, f, 2.0, 1)[0] == pytest.approx(0.5)


def test_stability_sweep_is_linear_for_m_one(disk):
    f = GridField.constant(disk, 1.0)
    w = GridField.from_function(disk, lambda x: np.exp(-8.0 * np.sum(x * x, axis=-1)))
    phi = GridField.constant(disk, 0.0)
    rows, fit = stability_sweep(f, w, phi, 1, 2.0, [1e-1, 1e-2, 1e-3], SolveConfig(tol_residual=1e-11))
    assert [r.delta for r in rows] == [1e-1, 1e-2, 1e-3]
    assert all(r.lhs > 0 for r in rows)
    assert all(np.nanmax(r.solution.values) <= 1e-12 for r in rows)
    assert fit.slope == pytest.approx(1.0, abs=0.01)
    # ‖δ w‖_2 is linear in δ too
    assert rows[0].rhs / rows[1].rhs == pytest.approx(10.0)


def test_equicontinuity_moduli(disk):
    fs = [GridField.from_function(disk, lambda x, k=k: 1.0 + np.sin(k * x[..., 0]) / k) for k in (1, 2)]
    phi = quadratic(disk, 1.0)
    rows, norms, decays = equicontinuity_probe(fs, phi, 1, 2.0, cells=(1, 2, 4))
    assert [r.cells for r in rows] == [1, 2, 4]
    assert [r.scale for r in rows] == pytest.approx([disk.h, 2 * disk.h, 4 * disk.h])
    assert 0 < rows[0].modulus <= rows[1].modulus <= rows[2].modulus
    assert norms == pytest.approx([lq_norm(f, 2.0) for f in fs])
    assert decays
    with pytest.raises(DomainError):
        equicontinuity_probe(fs, phi, 1, 1.0)


def test_convolution_commutes_with_the_laplacian(disk):
    u = GridField.from_function(disk, lambda x: x[..., 0] ** 2 + 0.5 * x[..., 1] ** 2 + 0.1 * np.exp(x[..., 0]))
    lhs, rhs = convolution_hessian_check(u, hessian_density(u, 1), 1, 2 * disk.h)
    assert lhs.size > 0
    assert np.allclose(lhs, rhs, atol=1e-10)


def test_averaged_hessian_dominates_averaged_density():
    dom = GridDomain.ball(2, 13)
    u = quadratic(dom, 0.5).map(np.exp)
    lhs, rhs = convolution_hessian_check(u, hessian_density(u, 2), 2, 2 * dom.h)
    assert lhs.size > 0
    assert np.all(lhs >= rhs - 1e-10)
    with pytest.raises(DomainError):
        convolution_hessian_check(u, hessian_density(u, 2), 2, 0.9)


@pytest.mark.slow
def test_capacity_on_a_finer_four_dimensional_ball():
    dom = GridDomain.ball(2, 13)
    est = capacity(disk_set(dom, 0.4), dom, 2)
    assert est.extremal > 0
    assert est.lower <= est.extremal * (1.0 + 5.0 * dom.h)
