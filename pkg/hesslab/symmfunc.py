# hesslab/symmfunc.py
"""
Elementary symmetric polynomials S_k and the Gårding cones Γ_m.

Every function takes either a `Spectrum` or an array whose last axis holds
the n eigenvalues. Array inputs are evaluated over all leading axes at once,
which is how the grid code calls in here (one spectrum per grid point).
"""
import itertools
import math
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np
from numpy.typing import ArrayLike

from hesslab.errors import DomainError, require


@dataclass(frozen=True)
class Spectrum:
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        require(v.size >= 1, "Spectrum needs at least one eigenvalue")
        require(bool(np.all(np.isfinite(v))), "Spectrum entries must be finite", detail=str(v))
        object.__setattr__(self, "values", np.sort(v)[::-1].copy())

    @property
    def n(self) -> int:
        return int(self.values.size)

    def __len__(self):
        return self.n


@dataclass(frozen=True)
class ConeVerdict:
    member: bool
    margins: np.ndarray  # S_1 .. S_m
    m: int


SpectrumLike = Union[Spectrum, ArrayLike]


def as_values(lam: SpectrumLike) -> np.ndarray:
    if isinstance(lam, Spectrum):
        return lam.values
    arr = np.asarray(lam, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    return arr


def _scalar(x):
    return float(x) if np.ndim(x) == 0 else x


def elem_sym_all(lam: SpectrumLike, k_max: int) -> np.ndarray:
    """
    Coefficients (S_0, ..., S_{k_max}) of Π(1 + λ_i t), by the one-factor-at-a-time
    recurrence e_j <- e_j + λ_i e_{j-1}. For n >= 6 the additions carry a
    TwoSum compensation term.
    """
    v = as_values(lam)
    n = v.shape[-1]
    require(0 <= k_max <= n, f"degree {k_max} out of range [0, {n}]")
    e = np.zeros(v.shape[:-1] + (k_max + 1,))
    e[..., 0] = 1.0
    comp = np.zeros_like(e) if n >= 6 else None
    for i in range(n):
        top = min(i + 1, k_max)
        if top == 0:
            continue
        li = v[..., i : i + 1]
        prod = li * e[..., 0:top]
        if comp is None:
            e[..., 1 : top + 1] += prod
            continue
        carried = li * comp[..., 0:top]
        old = e[..., 1 : top + 1].copy()
        s = old + prod
        bp = s - old
        err = (old - (s - bp)) + (prod - bp)
        comp[..., 1 : top + 1] += err + carried
        e[..., 1 : top + 1] = s
    return e if comp is None else e + comp


def elem_sym(lam: SpectrumLike, k: int):
    v = as_values(lam)
    n = v.shape[-1]
    if not 0 <= k <= n:
        raise DomainError(f"degree k={k} out of range [0, {n}]")
    return _scalar(elem_sym_all(v, k)[..., k])


def elem_sym_reduced(lam: SpectrumLike, k: int, i: int):
    """S_{k;i}(λ): S_k with λ_i set to zero, i.e. ∂S_{k+1}/∂λ_i."""
    v = as_values(lam)
    n = v.shape[-1]
    if not 0 <= k <= n - 1:
        raise DomainError(f"degree k={k} out of range [0, {n - 1}]")
    if not 0 <= i < n:
        raise DomainError(f"index i={i} out of range [0, {n})")
    w = v.copy()
    w[..., i] = 0.0
    return _scalar(elem_sym_all(w, k)[..., k])


def elem_sym_bruteforce(lam: SpectrumLike, k: int) -> float:
    """Subset enumeration; the slow oracle for `elem_sym`."""
    v = as_values(lam).ravel()
    if not 0 <= k <= v.size:
        raise DomainError(f"degree k={k} out of range [0, {v.size}]")
    return math.fsum(math.prod(c) for c in itertools.combinations(v.tolist(), k))


def in_cone(lam: SpectrumLike, m: int, tol: float = 0.0):
    """Batch membership S_k(λ) > tol for k = 1..m (tol < 0 gives the closed cone with slack)."""
    v = as_values(lam)
    n = v.shape[-1]
    if not 1 <= m <= n:
        raise DomainError(f"cone index m={m} out of range [1, {n}]")
    margins = elem_sym_all(v, m)[..., 1:]
    return np.all(margins > tol, axis=-1)


def cone_membership(lam: SpectrumLike, m: int, tol: float = 0.0) -> ConeVerdict:
    v = as_values(lam)
    n = v.shape[-1]
    if v.ndim != 1:
        raise DomainError("cone_membership takes a single spectrum; use in_cone for batches")
    if not 1 <= m <= n:
        raise DomainError(f"cone index m={m} out of range [1, {n}]")
    margins = elem_sym_all(v, m)[1:]
    return ConeVerdict(member=bool(np.all(margins > tol)), margins=margins, m=m)


def _closed_cone_slack(v: np.ndarray, k: int) -> float:
    scale = max(1.0, float(np.max(np.abs(v))))
    return 1e-12 * math.comb(v.shape[-1], k) * scale**k


def maclaurin_chain(lam: SpectrumLike, m: int) -> np.ndarray:
    """Normalized means μ_k = (S_k / C(n,k))^{1/k}, k = 1..m; nonincreasing on the closed cone."""
    v = as_values(lam)
    n = v.shape[-1]
    if not 1 <= m <= n:
        raise DomainError(f"m={m} out of range [1, {n}]")
    s = elem_sym_all(v, m)[1:]
    for k in range(1, m + 1):
        if s[k - 1] < -_closed_cone_slack(v, k):
            raise DomainError(
                f"spectrum outside the closed cone Γ_{m}", detail=f"S_{k} = {s[k - 1]:.6g}"
            )
    return np.array(
        [(max(s[k - 1], 0.0) / math.comb(n, k)) ** (1.0 / k) for k in range(1, m + 1)]
    )


def _require_cone(v: np.ndarray, m: int, name: str) -> float:
    s = elem_sym_all(v, m)[1:]
    for k in range(1, m + 1):
        if s[k - 1] < -_closed_cone_slack(v, k):
            raise DomainError(f"{name} is outside Γ_{m}", detail=f"S_{k} = {s[k - 1]:.6g}")
    return max(float(s[m - 1]), 0.0)


def garding_pairing(lam: SpectrumLike, mu: SpectrumLike, m: int) -> Tuple[float, float]:
    """
    Both sides of Σ_i μ_i S_{m-1;i}(λ) >= m S_m(μ)^{1/m} S_m(λ)^{(m-1)/m}.
    Entries are paired by position; a `Spectrum` is already sorted.
    """
    v, w = as_values(lam), as_values(mu)
    if v.shape != w.shape or v.ndim != 1:
        raise DomainError("garding_pairing needs two spectra of equal length")
    n = v.size
    if not 1 <= m <= n:
        raise DomainError(f"m={m} out of range [1, {n}]")
    s_lam = _require_cone(v, m, "lambda")
    s_mu = _require_cone(w, m, "mu")
    lhs = math.fsum(w[i] * elem_sym_reduced(v, m - 1, i) for i in range(n))
    rhs = m * s_mu ** (1.0 / m) * s_lam ** ((m - 1.0) / m)
    return lhs, rhs


def concavity_midpoint(lam: SpectrumLike, mu: SpectrumLike, m: int) -> Tuple[float, float]:
    """S_m^{1/m}((λ+μ)/2) against the mean of S_m^{1/m}(λ) and S_m^{1/m}(μ)."""
    v, w = as_values(lam), as_values(mu)
    s_lam = _require_cone(v, m, "lambda")
    s_mu = _require_cone(w, m, "mu")
    mid = _require_cone(0.5 * (v + w), m, "midpoint")
    return mid ** (1.0 / m), 0.5 * (s_lam ** (1.0 / m) + s_mu ** (1.0 / m))


def sample_cone(rng: np.random.Generator, n: int, m: int, size: int) -> np.ndarray:
    """
    Rejection sampler for Γ_m: λ = A·g + c·1 with g standard normal. Uniform boxes
    almost never hit Γ_m when m is close to n; the shifted Gaussian does.
    """
    if not 1 <= m <= n:
        raise DomainError(f"m={m} out of range [1, {n}]")
    out = []
    have = 0
    while have < size:
        chunk = max(64, 2 * (size - have))
        g = rng.standard_normal((chunk, n))
        a = rng.uniform(0.2, 3.0, size=(chunk, 1))
        c = a * rng.uniform(0.0, 2.5, size=(chunk, 1))
        lam = a * g + c
        keep = lam[in_cone(lam, m)]
        out.append(keep)
        have += keep.shape[0]
    return np.concatenate(out, axis=0)[:size]
