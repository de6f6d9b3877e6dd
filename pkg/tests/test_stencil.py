import numpy as np

from conftest import quadratic
from hesslab.field import real_hessian
from hesslab.hermlin import real_form
from hesslab.stencil import apply_operator, is_symmetric, operator_matrix


def test_identity_coefficients_give_the_laplacian(square):
    dom = square
    coeff = np.broadcast_to(np.eye(2), (dom.interior_index.size, 2, 2)).copy()
    u = quadratic(dom, 1.0)
    assert np.allclose(apply_operator(dom, coeff, u.values.ravel()), 4.0)


def test_matrix_matches_apply_on_zero_boundary(square, rng):
    dom = square
    free = dom.interior_index
    coeff = np.broadcast_to(np.array([[2.0, 0.3], [0.3, 1.0]]), (free.size, 2, 2)).copy()
    flat = np.zeros(dom.size)
    flat[free] = rng.normal(size=free.size)
    mat = operator_matrix(dom, coeff, free)
    assert np.allclose(mat @ flat[free], apply_operator(dom, coeff, flat))


def test_constant_coefficient_operator_is_symmetric(ball2):
    free = ball2.interior_index
    coeff = np.broadcast_to(real_form(np.eye(2)), (free.size, 4, 4)).copy()
    assert is_symmetric(operator_matrix(ball2, coeff, free))


def test_real_hessian_of_quadratic(disk):
    d2 = real_hessian(quadratic(disk, 1.5))
    assert d2.shape == (disk.interior_index.size, 2, 2)
    assert np.allclose(d2, 3.0 * np.eye(2))


def test_free_subset_drops_couplings(square):
    dom = square
    free = dom.interior_index[::2]
    coeff = np.broadcast_to(np.eye(2), (dom.interior_index.size, 2, 2)).copy()
    mat = operator_matrix(dom, coeff, free)
    assert mat.shape == (free.size, free.size)
    assert np.allclose(mat.diagonal(), -4.0 / dom.h ** 2)
