# hesslab/stencil.py
"""Sparse assembly of frozen-coefficient second-order operators on a grid."""
from typing import Optional

import numpy as np
from scipy import sparse

from hesslab.field import GridDomain, real_hessian_values


def operator_matrix(domain: GridDomain, coeff: np.ndarray, free: np.ndarray) -> sparse.csr_matrix:
    """
    Rows and columns are the free points (flat indices, a subset of the interior).
    Row p applies Σ_ab coeff[p]_ab D_ab with the cross-stencil differences;
    couplings to non-free points are dropped (they carry fixed data).
    coeff has shape (N_interior, 2n, 2n) ordered like domain.interior_index.
    """
    d = domain.dim
    h2 = domain.h * domain.h
    interior = domain.interior_index
    pos = np.searchsorted(interior, free)
    col_of = np.full(domain.size, -1, dtype=np.int64)
    col_of[free] = np.arange(free.size)
    eye = np.eye(d, dtype=int)

    rows, cols, vals = [], [], []

    def add(offset, weight):
        nb = domain.neighbors(offset)[pos]
        c = col_of[nb]
        keep = c >= 0
        rows.append(np.arange(free.size)[keep])
        cols.append(c[keep])
        vals.append(weight[keep])

    cm = coeff[pos]
    center = np.zeros(free.size)
    for a in range(d):
        w = cm[:, a, a] / h2
        add(eye[a], w)
        add(-eye[a], w)
        center -= 2.0 * w
        for b in range(a + 1, d):
            w = 2.0 * cm[:, a, b] / (4.0 * h2)
            add(eye[a] + eye[b], w)
            add(-eye[a] - eye[b], w)
            add(eye[a] - eye[b], -w)
            add(-eye[a] + eye[b], -w)
    rows.append(np.arange(free.size))
    cols.append(np.arange(free.size))
    vals.append(center)
    mat = sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(free.size, free.size),
    )
    return mat.tocsr()


def apply_operator(domain: GridDomain, coeff: np.ndarray, flat: np.ndarray,
                   d2: Optional[np.ndarray] = None) -> np.ndarray:
    """Σ_ab coeff_ab D_ab u at every interior point."""
    if d2 is None:
        d2 = real_hessian_values(domain, flat)
    return np.einsum("pab,pab->p", coeff, d2)


def is_symmetric(mat: sparse.spmatrix, rtol: float = 1e-12) -> bool:
    diff = abs(mat - mat.T)
    scale = abs(mat).max() if mat.nnz else 0.0
    return diff.nnz == 0 or diff.max() <= rtol * max(scale, 1.0)
