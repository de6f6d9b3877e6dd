import math

import numpy as np
import pytest

from conftest import quadratic
from hesslab.errors import DomainError
from hesslab.field import (
    BOUNDARY,
    EXTERIOR,
    INTERIOR,
    GridDomain,
    GridField,
    RadialProfile,
    ball_average,
    complex_hessian,
    density_lq_growth,
    hessian_density,
    integral,
    interior_distance,
    lq_norm,
    mollify,
    msh_certificate,
    radial_hessian_eigenvalues,
    radial_sigma,
    sphere_area,
    sublevel_volume,
    t_epsilon,
)
from hesslab.potential import fit_exponent


def test_box_mask(square):
    assert square.shape == (9, 9)
    assert square.h == pytest.approx(0.25)
    assert np.count_nonzero(square.mask == INTERIOR) == 49
    assert np.count_nonzero(square.mask == BOUNDARY) == 32
    assert np.count_nonzero(square.mask == EXTERIOR) == 0


def test_ball_mask(disk):
    r2 = disk.radius_squared()
    assert np.all(disk.mask[r2 > 1.0 + 1e-9] == EXTERIOR)
    assert disk.mask[8, 8] == INTERIOR
    assert np.all(disk.center == 0.0)


def test_torus_is_all_interior():
    t = GridDomain.torus(1, 8)
    assert t.h == pytest.approx(1.0 / 8)
    assert np.all(t.mask == INTERIOR)
    with pytest.raises(DomainError):
        GridDomain.torus(1, 3)


def test_excluded_core_is_exterior():
    dom = GridDomain.ball(1, 17, exclude_radius=0.3)
    assert dom.mask[8, 8] == EXTERIOR


def test_field_exterior_is_nan_and_inside_must_be_finite(disk):
    u = GridField.constant(disk, 1.0)
    assert np.isnan(u.values[0, 0])
    vals = np.ones(disk.shape)
    vals[8, 8] = np.inf
    with pytest.raises(DomainError):
        GridField(disk, vals)


def test_field_arithmetic(square):
    u = quadratic(square, 1.0)
    v = 2.0 - u * 3.0 + u
    assert np.allclose(v.values, 2.0 - 2.0 * u.values)
    assert (-u).max() == pytest.approx(-u.min())


def test_complex_hessian_of_squared_modulus(ball2):
    u = quadratic(ball2, 1.0)
    mats = complex_hessian(u).matrices
    assert np.allclose(mats, np.eye(2), atol=1e-10)


@pytest.mark.parametrize("m", [1, 2])
def test_density_of_quadratic(ball2, m):
    c = 0.7
    dens = hessian_density(quadratic(ball2, c), m)
    assert np.allclose(dens.interior_values(), math.comb(2, m) * c ** m, rtol=1e-10)
    form = hessian_density(quadratic(ball2, c), m, normalization="form")
    assert np.allclose(form.interior_values(), c ** m, rtol=1e-10)


def test_density_rejects_bad_arguments(ball2):
    u = quadratic(ball2, 1.0)
    with pytest.raises(DomainError):
        hessian_density(u, 3)
    with pytest.raises(DomainError):
        hessian_density(u, 1, normalization="volume")


def test_certificate(disk):
    assert msh_certificate(quadratic(disk, 1.0), 1).shape == (0, 2)
    bad = msh_certificate(quadratic(disk, -1.0), 1)
    assert len(bad) == disk.interior_index.size


def test_t_epsilon_of_squared_modulus(ball2):
    t = t_epsilon(quadratic(ball2, 1.0), 2 * ball2.h)
    sel = t.domain.mask != EXTERIOR
    assert sel.any()
    assert np.allclose(t.values[sel], 2.0, atol=1e-10)


def test_eps_below_stencil_reach(disk):
    u = quadratic(disk, 1.0)
    with pytest.raises(DomainError):
        t_epsilon(u, disk.h)
    with pytest.raises(DomainError):
        ball_average(u, 1.5 * disk.h)
    with pytest.raises(DomainError):
        mollify(u, 0.5 * disk.h)


def test_mollify_preserves_constants(disk):
    out = mollify(GridField.constant(disk, 3.0), 3 * disk.h)
    sel = out.domain.mask != EXTERIOR
    assert np.allclose(out.values[sel], 3.0)
    assert out.domain.interior_index.size < disk.interior_index.size


def test_integrals_on_the_torus():
    dom = GridDomain.torus(1, 16)
    one = GridField.constant(dom, 1.0)
    assert integral(one) == pytest.approx(1.0)
    assert lq_norm(GridField.constant(dom, 2.0), 3.0) == pytest.approx(2.0)
    assert sublevel_volume(GridField.constant(dom, -1.0), 0.5) == pytest.approx(1.0)
    with pytest.raises(DomainError):
        lq_norm(one, 0.5)


def test_radial_eigenvalues():
    spec = radial_hessian_eigenvalues(RadialProfile.quadratic(2.0), 0.3, 3)
    assert np.allclose(spec.values, [2.0, 2.0, 2.0])
    with pytest.raises(DomainError):
        radial_hessian_eigenvalues(RadialProfile.log(), 0.0, 2)


@pytest.mark.parametrize("n,m", [(2, 1), (3, 1), (3, 2), (2, 2)])
def test_green_function_is_maximal_away_from_origin(n, m):
    g = RadialProfile.green(n, m)
    t = np.linspace(0.1, 1.0, 7)
    assert np.allclose(radial_sigma(g, t, n, m), 0.0, atol=1e-10)
    assert g.consistency_error(np.linspace(0.5, 1.0, 6)) < 1e-5


def test_sphere_area():
    assert sphere_area(1) == pytest.approx(2 * math.pi)
    assert sphere_area(2) == pytest.approx(2 * math.pi ** 2)


def test_green_lq_growth_slope():
    # q(2n/m - 2) - 2n with n=3, m=2, q=6.5
    deltas = [2.0 ** -k for k in range(2, 9)]
    _, slope = density_lq_growth(RadialProfile.green(3, 2), 3, 6.5, deltas)
    assert slope == pytest.approx(0.5, abs=1e-6)


def test_convex_combinations_stay_subharmonic(ball2):
    u = GridField.from_function(ball2, lambda x: 1.5 * (x[..., 0] ** 2 + x[..., 1] ** 2)
                                - 0.5 * (x[..., 2] ** 2 + x[..., 3] ** 2))
    v = GridField.from_function(ball2, lambda x: -0.5 * (x[..., 0] ** 2 + x[..., 1] ** 2)
                                + 1.5 * (x[..., 2] ** 2 + x[..., 3] ** 2))
    assert len(msh_certificate(u, 2)) > 0
    for t in (0.0, 0.3, 0.7, 1.0):
        assert len(msh_certificate(t * u + (1.0 - t) * v, 1)) == 0


def test_convex_increasing_composition(ball2):
    u = GridField.from_function(ball2, lambda x: 1.5 * (x[..., 0] ** 2 + x[..., 1] ** 2)
                                - 0.5 * (x[..., 2] ** 2 + x[..., 3] ** 2))
    assert len(msh_certificate(u.map(np.exp), 1)) == 0
    assert len(msh_certificate(quadratic(ball2, 0.5).map(np.exp), 2)) == 0


def test_mollify_keeps_subharmonicity(disk):
    u = GridField.from_function(disk, lambda x: x[..., 0] ** 2 - 0.5 * x[..., 1] ** 2 + 0.2 * np.exp(x[..., 0]))
    assert len(msh_certificate(u, 1)) == 0
    smooth = mollify(u, 2 * disk.h)
    assert smooth.domain.interior_index.size > 0
    assert len(msh_certificate(smooth, 1)) == 0


@pytest.mark.parametrize("eps_cells", [2, 3])
def test_averages_only_where_the_ball_fits(disk, eps_cells):
    eps = eps_cells * disk.h
    dist = interior_distance(disk)
    out = t_epsilon(quadratic(disk, 1.0), eps)
    kept = out.domain.mask != EXTERIOR
    assert np.all(dist[kept] >= eps - 1e-12)
    assert np.array_equal(kept, dist >= eps - 1e-12)


def test_discrete_eigenvalues_of_radial_samples_converge_at_second_order():
    profile = RadialProfile(lambda t: t + t ** 2, lambda t: 1.0 + 2.0 * t,
                            lambda t: 2.0 + 0.0 * np.asarray(t, float), "t+t^2")
    hs, errs = [], []
    for points in (17, 33, 65):
        dom = GridDomain.ball(1, points)
        lam = complex_hessian(profile.sample(dom)).eigenvalues()[:, 0]
        t = dom.radius_squared().ravel()[dom.interior_index]
        near = t <= 0.5
        exact = np.array([radial_hessian_eigenvalues(profile, s, 1).values[0] if s > 0 else 1.0 for s in t[near]])
        hs.append(dom.h)
        errs.append(float(np.max(np.abs(lam[near] - exact))))
    assert fit_exponent(hs, errs).slope >= 1.8
