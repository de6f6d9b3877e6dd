# hesslab/hermlin.py
"""
Small dense Hermitian algebra: Jacobi eigenvalues, eigenvalues relative to a
metric, the polarized (mixed) σ_m and its derivative, the cominor matrix.

The `*_batch` kernels take arrays of shape (..., n, n) and are what the grid
code uses; the typed wrappers below them serve single matrices.
"""
import itertools
import logging
import math
from dataclasses import dataclass
from typing import Sequence, Tuple, Union

import numpy as np
from numpy.typing import ArrayLike

from hesslab.errors import DomainError, require
from hesslab.symmfunc import Spectrum, elem_sym_all, in_cone

log = logging.getLogger(__name__)

_JACOBI_TOL = 1e-14
_JACOBI_MAX_SWEEPS = 30


@dataclass(frozen=True)
class HermitianMatrix:
    entries: np.ndarray

    def __post_init__(self):
        a = np.array(self.entries, dtype=complex)
        if a.ndim == 0:
            a = a.reshape(1, 1)
        require(a.ndim == 2 and a.shape[0] == a.shape[1], "Hermitian matrix must be square")
        require(1 <= a.shape[0] <= 4, f"dimension {a.shape[0]} outside 1..4")
        require(bool(np.all(np.isfinite(a))), "matrix entries must be finite")
        scale = max(1.0, float(np.max(np.abs(a))))
        gap = float(np.max(np.abs(a - a.conj().T)))
        if gap > 1e-14 * scale:
            raise DomainError("matrix is not Hermitian", detail=f"max |A - A*| = {gap:.3e}")
        a = 0.5 * (a + a.conj().T)
        a[np.diag_indices(a.shape[0])] = a.diagonal().real
        object.__setattr__(self, "entries", a)

    @property
    def dim(self) -> int:
        return int(self.entries.shape[0])

    def __add__(self, other: "HermitianMatrix") -> "HermitianMatrix":
        return HermitianMatrix(self.entries + other.entries)

    def __mul__(self, c: float) -> "HermitianMatrix":
        return HermitianMatrix(self.entries * float(c))

    __rmul__ = __mul__


@dataclass(frozen=True)
class Metric:
    matrix: HermitianMatrix
    cholesky_factor: np.ndarray


MatrixLike = Union[HermitianMatrix, ArrayLike]


def _entries(a: MatrixLike) -> np.ndarray:
    if isinstance(a, HermitianMatrix):
        return a.entries
    return HermitianMatrix(a).entries


def metric_from_matrix(v: MatrixLike) -> Metric:
    hv = v if isinstance(v, HermitianMatrix) else HermitianMatrix(v)
    try:
        factor = np.linalg.cholesky(hv.entries)
    except np.linalg.LinAlgError as e:
        raise DomainError("metric is not positive definite", detail=str(e)) from e
    return Metric(matrix=hv, cholesky_factor=factor)


# --- Jacobi --------------------------------------------------------------------

def eigvalsh_batch(a: np.ndarray) -> np.ndarray:
    """
    Cyclic complex Jacobi on a stack of Hermitian matrices. Each rotation first
    turns a_pq real with a diagonal phase, then applies the real 2x2 rotation.
    Returns eigenvalues sorted descending along the last axis.
    """
    a = np.array(a, dtype=complex)
    n = a.shape[-1]
    if n == 1:
        return a[..., 0, 0].real[..., None].copy()
    norm = np.sqrt(np.sum(np.abs(a) ** 2, axis=(-2, -1)))
    pairs = list(itertools.combinations(range(n), 2))
    offmask = ~np.eye(n, dtype=bool)
    for sweep in range(_JACOBI_MAX_SWEEPS):
        off = np.sqrt(np.sum(np.abs(a[..., offmask]) ** 2, axis=-1))
        if np.all(off <= _JACOBI_TOL * norm):
            break
        for p, q in pairs:
            b = a[..., p, q]
            g = np.abs(b)
            active = g > 0
            phase = np.where(active, b / np.where(active, g, 1.0), 1.0)
            a[..., :, q] *= phase.conj()[..., None]
            a[..., q, :] *= phase[..., None]

            app = a[..., p, p].real
            aqq = a[..., q, q].real
            gs = np.where(active, g, 1.0)
            theta = (aqq - app) / (2.0 * gs)
            sgn = np.where(theta >= 0, 1.0, -1.0)
            t = np.where(active, sgn / (np.abs(theta) + np.hypot(theta, 1.0)), 0.0)
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c

            cp = a[..., :, p].copy()
            cq = a[..., :, q].copy()
            a[..., :, p] = c[..., None] * cp - s[..., None] * cq
            a[..., :, q] = s[..., None] * cp + c[..., None] * cq
            rp = a[..., p, :].copy()
            rq = a[..., q, :].copy()
            a[..., p, :] = c[..., None] * rp - s[..., None] * rq
            a[..., q, :] = s[..., None] * rp + c[..., None] * rq
            a[..., p, q] = 0.0
            a[..., q, p] = 0.0
    else:
        log.warning("Jacobi stopped after %d sweeps without reaching tolerance", _JACOBI_MAX_SWEEPS)
    lam = np.diagonal(a, axis1=-2, axis2=-1).real
    return -np.sort(-lam, axis=-1)


def eigvals(m: MatrixLike) -> Spectrum:
    return Spectrum(eigvalsh_batch(_entries(m)))


def eigvals_relative(m: MatrixLike, v: Metric) -> Spectrum:
    """Eigenvalues of L^{-1} M L^{-*} for V = L L*."""
    a = _entries(m)
    factor = v.cholesky_factor
    require(a.shape == factor.shape, "metric and matrix dimensions differ")
    x = np.linalg.solve(factor, a)
    y = np.linalg.solve(factor, x.conj().T).conj().T
    return Spectrum(eigvalsh_batch(0.5 * (y + y.conj().T)))


# --- mixed forms ---------------------------------------------------------------

def sigma_batch(a: np.ndarray, m: int) -> np.ndarray:
    """S_m(λ(A)) over a stack."""
    return elem_sym_all(eigvalsh_batch(a), m)[..., m]


def mixed_sigma_batch(mats: Sequence[np.ndarray]) -> np.ndarray:
    """
    Polarization D(A_1..A_m) of A -> S_m(λ(A)) with D(A,..,A) = S_m(λ(A)):
    D = (1/m!) Σ_{S≠∅} (-1)^{m-|S|} S_m(λ(Σ_{i∈S} A_i)).
    Subset sums are built from the subset with its lowest bit removed.
    """
    m = len(mats)
    require(m >= 1, "mixed_sigma needs at least one matrix")
    shape = np.shape(mats[0])
    for a in mats:
        require(np.shape(a) == shape, "all matrices must share a shape")
    n = shape[-1]
    require(m <= n, f"m={m} exceeds dimension n={n}")
    sums = {0: np.zeros(shape, dtype=complex)}
    total = np.zeros(shape[:-2])
    for mask in range(1, 1 << m):
        low = mask & -mask
        sums[mask] = sums[mask ^ low] + mats[low.bit_length() - 1]
        sign = -1.0 if (m - bin(mask).count("1")) % 2 else 1.0
        total = total + sign * sigma_batch(sums[mask], m)
    return total / math.factorial(m)


def mixed_sigma(mats: Sequence[MatrixLike], n: int = None):
    arrs = [_entries(a) for a in mats]
    if n is not None:
        for a in arrs:
            require(a.shape[-1] == n, f"matrix dimension {a.shape[-1]} != n={n}")
    return float(mixed_sigma_batch(arrs))


def mixed_sigma_diagonal_bruteforce(diags: Sequence[Sequence[float]]) -> float:
    """Oracle for diagonal arguments: (1/m!) Σ over injective j: i -> j_i of Π d_i[j_i]."""
    m = len(diags)
    n = len(diags[0])
    total = math.fsum(
        math.prod(diags[i][j[i]] for i in range(m)) for j in itertools.permutations(range(n), m)
    )
    return total / math.factorial(m)


def cominor_batch(a: np.ndarray, m: int) -> np.ndarray:
    """∂S_m/∂A as Σ_{k<m} (-1)^k S_{m-1-k}(λ) A^k (tr(G·dA) = dS_m)."""
    a = np.asarray(a, dtype=complex)
    n = a.shape[-1]
    require(1 <= m <= n, f"m={m} out of range [1, {n}]")
    s = elem_sym_all(eigvalsh_batch(a), m - 1)
    eye = np.broadcast_to(np.eye(n, dtype=complex), a.shape)
    power = eye.copy()
    g = np.zeros_like(a)
    for k in range(m):
        g = g + ((-1.0) ** k) * s[..., m - 1 - k][..., None, None] * power
        power = power @ a
    return 0.5 * (g + np.swapaxes(g, -1, -2).conj())


def cominor_matrix(a: MatrixLike, m: int) -> HermitianMatrix:
    return HermitianMatrix(cominor_batch(_entries(a), m))


def garding_mixed_check(mats: Sequence[MatrixLike]) -> Tuple[float, float]:
    """lhs = D(A_1..A_m), rhs = Π S_m(λ(A_i))^{1/m}; every λ(A_i) must lie in Γ_m."""
    arrs = [_entries(a) for a in mats]
    m = len(arrs)
    require(m >= 1, "need at least one matrix")
    n = arrs[0].shape[-1]
    require(m <= n, f"m={m} exceeds n={n}")
    rhs = 1.0
    for i, a in enumerate(arrs):
        lam = eigvalsh_batch(a)
        scale = max(1.0, float(np.max(np.abs(lam))))
        if not in_cone(lam, m, tol=-1e-12 * scale**m):
            raise DomainError(f"argument {i} is outside Γ_{m}", detail=str(lam))
        rhs *= max(float(elem_sym_all(lam, m)[m]), 0.0) ** (1.0 / m)
    return float(mixed_sigma_batch(arrs)), rhs


# --- real <-> complex second-order forms ---------------------------------------

def complex_from_real(d2: np.ndarray) -> np.ndarray:
    """u_{z_j z̄_k} from the real Hessian, axes ordered (x_1, y_1, x_2, y_2, ...)."""
    xx = d2[..., 0::2, 0::2]
    yy = d2[..., 1::2, 1::2]
    xy = d2[..., 0::2, 1::2]
    yx = d2[..., 1::2, 0::2]
    h = 0.25 * ((xx + yy) + 1j * (xy - yx))
    return 0.5 * (h + np.swapaxes(h, -1, -2).conj())


def real_form(c: np.ndarray) -> np.ndarray:
    """Real symmetric M with Σ_ab M_ab ∂_a∂_b u = tr(C · u_{z z̄}) for Hermitian C."""
    c = np.asarray(c, dtype=complex)
    n = c.shape[-1]
    out = np.zeros(c.shape[:-2] + (2 * n, 2 * n))
    re = 0.25 * c.real
    im = 0.25 * c.imag
    out[..., 0::2, 0::2] = re
    out[..., 1::2, 1::2] = re
    out[..., 0::2, 1::2] = im
    out[..., 1::2, 0::2] = -im
    return out


def random_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))
