# hesslab/field.py
"""
Grid functions on boxes, balls and the flat torus in ℂ^n ≅ ℝ^{2n}.

Axes are ordered (x_1, y_1, x_2, y_2, ...). The grid spacing is the same on
every axis. A domain carries a per-point mask: INTERIOR points get the
equation, BOUNDARY points carry data, EXTERIOR points are outside (NaN).
"""
import functools
import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate, ndimage, stats

from hesslab.errors import DomainError, require
from hesslab.hermlin import complex_from_real, eigvalsh_batch
from hesslab.symmfunc import Spectrum, elem_sym_all, in_cone

EXTERIOR, BOUNDARY, INTERIOR = 0, 1, 2
KINDS = ("box", "ball", "torus")


def cross_offsets(dim: int) -> list:
    """Offsets touched by the second-difference stencils: ±e_a and ±e_a±e_b."""
    offs = []
    eye = np.eye(dim, dtype=int)
    for a in range(dim):
        offs += [tuple(eye[a]), tuple(-eye[a])]
    for a, b in itertools.combinations(range(dim), 2):
        for sa, sb in itertools.product((1, -1), repeat=2):
            offs.append(tuple(sa * eye[a] + sb * eye[b]))
    return offs


def classify(inside: np.ndarray, kind: str) -> np.ndarray:
    """Interior = inside points whose whole cross stencil is inside (and off the array edge)."""
    if kind == "torus":
        return np.full(inside.shape, INTERIOR, dtype=np.int8)
    dim = inside.ndim
    interior = inside.copy()
    for a in range(dim):
        edge = [slice(None)] * dim
        edge[a] = 0
        interior[tuple(edge)] = False
        edge[a] = -1
        interior[tuple(edge)] = False
    for off in cross_offsets(dim):
        interior &= np.roll(inside, shift=tuple(-o for o in off), axis=tuple(range(dim)))
    mask = np.where(inside, BOUNDARY, EXTERIOR).astype(np.int8)
    mask[interior] = INTERIOR
    return mask


@dataclass(frozen=True, eq=False)
class GridDomain:
    n: int
    shape: Tuple[int, ...]
    h: float
    origin: np.ndarray
    mask: np.ndarray
    kind: str
    _cache: Dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        require(1 <= self.n <= 3, f"complex dimension n={self.n} outside 1..3")
        require(len(self.shape) == 2 * self.n, "shape needs 2n axis counts")
        require(self.h > 0, "spacing must be positive")
        require(self.kind in KINDS, f"unknown domain kind {self.kind!r}")
        require(tuple(self.mask.shape) == tuple(self.shape), "mask shape mismatch")
        if self.kind == "torus":
            require(bool(np.all(self.mask == INTERIOR)), "torus has no boundary")

    # --- constructors ---------------------------------------------------------
    @classmethod
    def box(cls, n: int, points: int, lower: float = -1.0, upper: float = 1.0,
            exclude_radius: float = 0.0) -> "GridDomain":
        require(points >= 3, "a box needs at least 3 points per axis")
        h = (upper - lower) / (points - 1)
        shape = (points,) * (2 * n)
        origin = np.full(2 * n, float(lower))
        inside = np.ones(shape, dtype=bool)
        dom = cls(n, shape, h, origin, np.zeros(shape, dtype=np.int8), "box")
        inside &= ~dom._near_center(exclude_radius)
        return cls(n, shape, h, origin, classify(inside, "box"), "box")

    @classmethod
    def ball(cls, n: int, points: int, radius: float = 1.0,
             exclude_radius: float = 0.0) -> "GridDomain":
        require(points >= 5, "a ball needs at least 5 points per axis")
        h = 2.0 * radius / (points - 1)
        shape = (points,) * (2 * n)
        origin = np.full(2 * n, -float(radius))
        dom = cls(n, shape, h, origin, np.zeros(shape, dtype=np.int8), "ball")
        r2 = dom.radius_squared()
        inside = r2 <= radius * radius * (1.0 + 1e-12)
        inside &= ~dom._near_center(exclude_radius)
        return cls(n, shape, h, origin, classify(inside, "ball"), "ball")

    @classmethod
    def torus(cls, n: int, points: int) -> "GridDomain":
        """Unit-period flat torus ℂ^n/ℤ^{2n}."""
        require(points >= 4, "a torus needs at least 4 points per axis")
        shape = (points,) * (2 * n)
        return cls(n, shape, 1.0 / points, np.zeros(2 * n),
                   np.full(shape, INTERIOR, dtype=np.int8), "torus")

    def restrict(self, inside: np.ndarray) -> "GridDomain":
        """Same lattice, smaller inside set; interior/boundary recomputed."""
        if self.kind == "torus":
            return self
        mask = classify(inside & (self.mask != EXTERIOR), self.kind)
        if not np.any(mask == INTERIOR):
            raise DomainError("no interior points left", detail="margin violation")
        return GridDomain(self.n, self.shape, self.h, self.origin, mask, self.kind)

    # --- geometry -------------------------------------------------------------
    @property
    def dim(self) -> int:
        return 2 * self.n

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def cell_volume(self) -> float:
        return self.h ** self.dim

    @property
    def center(self) -> np.ndarray:
        return self.origin + self.h * (np.asarray(self.shape) - 1) / 2.0

    def axes(self) -> list:
        return [self.origin[a] + self.h * np.arange(self.shape[a]) for a in range(self.dim)]

    def points(self) -> np.ndarray:
        """Coordinates, shape (*shape, 2n)."""
        if "points" not in self._cache:
            grids = np.meshgrid(*self.axes(), indexing="ij")
            self._cache["points"] = np.stack(grids, axis=-1)
        return self._cache["points"]

    def radius_squared(self, center: Optional[np.ndarray] = None) -> np.ndarray:
        c = self.center if center is None else np.asarray(center, dtype=float)
        return np.sum((self.points() - c) ** 2, axis=-1)

    def _near_center(self, radius: float) -> np.ndarray:
        if radius <= 0:
            return np.zeros(self.shape, dtype=bool)
        return self.radius_squared() < radius * radius

    def same_as(self, other: "GridDomain") -> bool:
        return (
            self is other
            or (self.kind == other.kind and self.shape == other.shape
                and math.isclose(self.h, other.h) and np.array_equal(self.mask, other.mask))
        )

    # --- index plumbing -------------------------------------------------------
    @property
    def interior_index(self) -> np.ndarray:
        if "interior" not in self._cache:
            self._cache["interior"] = np.flatnonzero(self.mask.ravel() == INTERIOR)
        return self._cache["interior"]

    @property
    def boundary_index(self) -> np.ndarray:
        return np.flatnonzero(self.mask.ravel() == BOUNDARY)

    def neighbors(self, offset: Sequence[int], index: Optional[np.ndarray] = None) -> np.ndarray:
        """Flat indices of index + offset (interior points by default), periodic wrap."""
        key = ("nb", tuple(int(o) for o in offset), None if index is None else id(index))
        if index is None and key in self._cache:
            return self._cache[key]
        idx = self.interior_index if index is None else index
        multi = np.unravel_index(idx, self.shape)
        shifted = tuple(multi[a] + int(offset[a]) for a in range(self.dim))
        out = np.ravel_multi_index(shifted, self.shape, mode="wrap")
        if index is None:
            self._cache[key] = out
        return out


@dataclass(frozen=True, eq=False)
class GridField:
    domain: GridDomain
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float).reshape(self.domain.shape)
        v[self.domain.mask == EXTERIOR] = np.nan
        if not np.all(np.isfinite(v[self.domain.mask != EXTERIOR])):
            raise DomainError("field is not finite on interior and boundary points")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, domain: GridDomain, fn: Callable[[np.ndarray], np.ndarray]) -> "GridField":
        """fn maps (K, 2n) coordinates to K values; it is evaluated on non-exterior points only."""
        vals = np.full(domain.shape, np.nan)
        inside = domain.mask != EXTERIOR
        with np.errstate(divide="ignore", invalid="ignore"):
            vals[inside] = np.broadcast_to(fn(domain.points()[inside]), (int(inside.sum()),))
        return cls(domain, vals)

    @classmethod
    def constant(cls, domain: GridDomain, c: float) -> "GridField":
        return cls(domain, np.full(domain.shape, float(c)))

    def with_values(self, values: np.ndarray) -> "GridField":
        return GridField(self.domain, values)

    def interior_values(self) -> np.ndarray:
        return self.values.ravel()[self.domain.interior_index]

    def on(self, domain: GridDomain) -> "GridField":
        """Same lattice values seen through another mask (e.g. a restricted domain)."""
        require(domain.shape == self.domain.shape, "lattice mismatch")
        return GridField(domain, self.values)

    def max(self, region: Optional[np.ndarray] = None) -> float:
        sel = (self.domain.mask != EXTERIOR) if region is None else region
        return float(np.max(self.values[sel]))

    def min(self, region: Optional[np.ndarray] = None) -> float:
        sel = (self.domain.mask != EXTERIOR) if region is None else region
        return float(np.min(self.values[sel]))

    def _other(self, other):
        if isinstance(other, GridField):
            require(self.domain.shape == other.domain.shape, "fields live on different lattices")
            return other.values
        return float(other)

    def __add__(self, other):
        return GridField(self.domain, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return GridField(self.domain, self.values - self._other(other))

    def __rsub__(self, other):
        return GridField(self.domain, self._other(other) - self.values)

    def __mul__(self, c):
        return GridField(self.domain, self.values * self._other(c))

    __rmul__ = __mul__

    def __neg__(self):
        return GridField(self.domain, -self.values)

    def map(self, fn: Callable[[np.ndarray], np.ndarray]) -> "GridField":
        return GridField(self.domain, fn(self.values))


@dataclass(frozen=True)
class HessianField:
    domain: GridDomain
    matrices: np.ndarray  # (N_interior, n, n), ordered like domain.interior_index

    def __post_init__(self):
        gap = np.max(np.abs(self.matrices - np.swapaxes(self.matrices, -1, -2).conj()), initial=0.0)
        require(gap <= 1e-12 * max(1.0, float(np.max(np.abs(self.matrices), initial=0.0))),
                "Hessian field is not Hermitian", detail=f"{gap:.3e}")

    def eigenvalues(self, shift: float = 0.0) -> np.ndarray:
        mats = self.matrices
        if shift:
            mats = mats + shift * np.eye(self.domain.n)
        return eigvalsh_batch(mats)


# --- discrete derivatives ------------------------------------------------------

def real_hessian_values(domain: GridDomain, flat: np.ndarray) -> np.ndarray:
    """Central second differences at interior points, shape (N_int, 2n, 2n)."""
    d = domain.dim
    h2 = domain.h * domain.h
    c = flat[domain.interior_index]
    out = np.empty((c.size, d, d))
    eye = np.eye(d, dtype=int)
    for a in range(d):
        ea = eye[a]
        out[:, a, a] = (flat[domain.neighbors(ea)] - 2.0 * c + flat[domain.neighbors(-ea)]) / h2
        for b in range(a + 1, d):
            eb = eye[b]
            mixed = (flat[domain.neighbors(ea + eb)] + flat[domain.neighbors(-ea - eb)]
                     - flat[domain.neighbors(ea - eb)] - flat[domain.neighbors(-ea + eb)]) / (4.0 * h2)
            out[:, a, b] = mixed
            out[:, b, a] = mixed
    if not np.all(np.isfinite(out)):
        raise DomainError("difference stencil reaches undefined values", detail="insufficient margin")
    return out


def real_hessian(u: GridField) -> np.ndarray:
    if u.domain.interior_index.size == 0:
        raise DomainError("domain has no interior points", detail="insufficient margin")
    return real_hessian_values(u.domain, u.values.ravel())


def complex_hessian(u: GridField) -> HessianField:
    return HessianField(u.domain, complex_from_real(real_hessian(u)))


def form_factor(n: int, m: int) -> float:
    """m!(n-m)!/n!: (dd^c u)^m ∧ β^{n-m} = form_factor · σ_m β^n."""
    return 1.0 / math.comb(n, m)


def interior_to_field(domain: GridDomain, interior: np.ndarray, fill: float = 0.0) -> GridField:
    vals = np.full(domain.shape, float(fill))
    vals.ravel()[domain.interior_index] = interior
    return GridField(domain, vals)


def hessian_density(u: GridField, m: int, normalization: str = "raw", shift: float = 0.0) -> GridField:
    """
    σ_m of the discrete complex Hessian (plus shift·I, the torus uses shift=1) at
    interior points; zero on the boundary. normalization="form" multiplies by
    m!(n-m)!/n!.
    """
    require(normalization in ("raw", "form"), f"unknown normalization {normalization!r}")
    n = u.domain.n
    require(1 <= m <= n, f"m={m} out of range [1, {n}]")
    lam = complex_hessian(u).eigenvalues(shift)
    dens = elem_sym_all(lam, m)[:, m]
    if normalization == "form":
        dens = dens * form_factor(n, m)
    return interior_to_field(u.domain, dens)


def msh_certificate(u: GridField, m: int, tol: float = 0.0,
                    region: Optional[np.ndarray] = None, shift: float = 0.0) -> np.ndarray:
    """
    Multi-indices (K, 2n) of interior points whose Hessian eigenvalues are not in
    Γ_m up to slack tol (S_k > -tol). Empty means discretely m-subharmonic.
    """
    dom = u.domain
    lam = complex_hessian(u).eigenvalues(shift)
    bad = ~in_cone(lam, m, tol=-tol)
    if region is not None:
        bad &= np.asarray(region).ravel()[dom.interior_index]
    idx = dom.interior_index[bad]
    return np.stack(np.unravel_index(idx, dom.shape), axis=-1) if idx.size else np.empty((0, dom.dim), dtype=int)


# --- ball averages, T_ε, mollification ---------------------------------------

@dataclass(frozen=True)
class Stencil:
    offsets: np.ndarray  # (K, dim) integer
    weights: np.ndarray  # (K,), sum 1
    second_moment: float  # Σ w |k h|^2


@functools.lru_cache(maxsize=32)
def _lattice_ball(dim: int, radius_cells: float) -> np.ndarray:
    r = int(math.floor(radius_cells + 1e-9))
    rng = np.arange(-r, r + 1)
    grid = np.stack(np.meshgrid(*([rng] * dim), indexing="ij"), axis=-1).reshape(-1, dim)
    keep = np.sum(grid * grid, axis=1) <= radius_cells * radius_cells + 1e-9
    return grid[keep]


def ball_stencil(dim: int, h: float, eps: float) -> Stencil:
    """Cells whose centers lie in the closed ball of radius eps, equal weights."""
    offs = _lattice_ball(dim, eps / h)
    w = np.full(len(offs), 1.0 / len(offs))
    m2 = float(np.sum(w * np.sum((offs * h) ** 2, axis=1)))
    return Stencil(offs, w, m2)


def bump_stencil(dim: int, h: float, eps: float) -> Stencil:
    """Radial C² bump (1 - r²/eps²)^3 on the ball of radius eps, unit mass."""
    offs = _lattice_ball(dim, eps / h)
    s2 = np.sum((offs * h) ** 2, axis=1) / (eps * eps)
    w = np.clip(1.0 - s2, 0.0, None) ** 3
    w = w / w.sum()
    m2 = float(np.sum(w * np.sum((offs * h) ** 2, axis=1)))
    return Stencil(offs, w, m2)


def interior_distance(domain: GridDomain) -> np.ndarray:
    """Euclidean distance from each point to the nearest non-interior point (0 off the interior)."""
    if "distance" not in domain._cache:
        domain._cache["distance"] = ndimage.distance_transform_edt(domain.mask == INTERIOR, sampling=domain.h)
    return domain._cache["distance"]


def apply_stencil(u: GridField, st: Stencil, eps: float) -> GridField:
    """
    Σ_k w_k u(p + k) for a stencil of radius eps. Off the torus the result lives on
    the restriction of u's domain to the points at distance ≥ eps from the
    non-interior set.
    """
    dom = u.domain
    axes = tuple(range(dom.dim))
    acc = np.zeros(dom.shape)
    for off, w in zip(st.offsets, st.weights):
        acc += w * np.roll(u.values, shift=tuple(-int(o) for o in off), axis=axes)
    if dom.kind == "torus":
        return GridField(dom, acc)
    valid = (interior_distance(dom) >= eps - 1e-9 * dom.h) & np.isfinite(acc)
    sub = dom.restrict(valid)
    return GridField(sub, np.where(valid, acc, np.nan))


def ball_average(u: GridField, eps: float) -> GridField:
    """u_(ε): mean over the Euclidean ball B(z, ε) ⊂ ℝ^{2n}."""
    h = u.domain.h
    if eps < 2.0 * h - 1e-12:
        raise DomainError(f"eps={eps:g} is below 2h={2 * h:g}")
    return apply_stencil(u, ball_stencil(u.domain.dim, h, eps), eps)


def t_epsilon(u: GridField, eps: float) -> GridField:
    """
    T_ε u = c (u_(ε) - u). The constant is n / M_2 with M_2 the second moment of the
    lattice ball, which tends to (n+1)/ε² and makes T_ε(|z|²) = n exactly.
    """
    h = u.domain.h
    if eps < 2.0 * h - 1e-12:
        raise DomainError(f"eps={eps:g} is below 2h={2 * h:g}")
    st = ball_stencil(u.domain.dim, h, eps)
    avg = apply_stencil(u, st, eps)
    scale = u.domain.n / st.second_moment
    return GridField(avg.domain, scale * (avg.values - u.values))


def mollify(u: GridField, eps: float) -> GridField:
    """u * ρ_ε with a C² radial bump of radius eps."""
    h = u.domain.h
    if eps < h - 1e-12:
        raise DomainError(f"eps={eps:g} is below h={h:g}")
    return apply_stencil(u, bump_stencil(u.domain.dim, h, eps), eps)


# --- integrals -----------------------------------------------------------------

def _region(u: GridField, region: Optional[np.ndarray]) -> np.ndarray:
    return (u.domain.mask == INTERIOR) if region is None else np.asarray(region, dtype=bool)


def lq_norm(u: GridField, q: float, region: Optional[np.ndarray] = None) -> float:
    """(Σ_region |u|^q h^{2n})^{1/q}, midpoint rule."""
    if q < 1:
        raise DomainError(f"q={q:g} < 1")
    vals = np.abs(u.values[_region(u, region)])
    return float((np.sum(vals ** q) * u.domain.cell_volume) ** (1.0 / q))


def sublevel_volume(u: GridField, s: float, region: Optional[np.ndarray] = None) -> float:
    """Volume of U(s) = {u < -s} over interior points."""
    sel = _region(u, region)
    return float(np.count_nonzero(u.values[sel] < -s) * u.domain.cell_volume)


def integral(u: GridField, region: Optional[np.ndarray] = None) -> float:
    return float(np.sum(u.values[_region(u, region)]) * u.domain.cell_volume)


# --- radial functions ----------------------------------------------------------

@dataclass(frozen=True)
class RadialProfile:
    """u(z) = g(|z|²); dg and d2g are derivatives in t = |z|²."""
    g: Callable[[np.ndarray], np.ndarray]
    dg: Callable[[np.ndarray], np.ndarray]
    d2g: Callable[[np.ndarray], np.ndarray]
    label: str

    @classmethod
    def quadratic(cls, c: float = 1.0) -> "RadialProfile":
        return cls(lambda t: c * np.asarray(t, float), lambda t: c + 0.0 * np.asarray(t, float),
                   lambda t: 0.0 * np.asarray(t, float), f"quad:{c:g}")

    @classmethod
    def log(cls) -> "RadialProfile":
        """log|z| = ½ log t."""
        return cls(lambda t: 0.5 * np.log(t), lambda t: 0.5 / np.asarray(t, float),
                   lambda t: -0.5 / np.asarray(t, float) ** 2, "radial:log")

    @classmethod
    def green(cls, n: int, m: int) -> "RadialProfile":
        """G(z) = -|z|^{2-2n/m}, i.e. g(t) = -t^{1-n/m}; log|z| when m = n."""
        if m == n:
            return cls.log()
        a = 1.0 - n / m
        return cls(lambda t: -np.asarray(t, float) ** a,
                   lambda t: -a * np.asarray(t, float) ** (a - 1.0),
                   lambda t: -a * (a - 1.0) * np.asarray(t, float) ** (a - 2.0),
                   f"radial:G(n={n},m={m})")

    def sample(self, domain: GridDomain, center: Optional[np.ndarray] = None) -> GridField:
        c = domain.center if center is None else np.asarray(center, dtype=float)
        return GridField.from_function(domain, lambda x: self.g(np.sum((x - c) ** 2, axis=-1)))

    def consistency_error(self, ts: np.ndarray, step: float = 1e-5) -> float:
        """Max central-difference mismatch of dg and d2g on a lattice of t values."""
        ts = np.asarray(ts, dtype=float)
        e1 = (self.g(ts + step) - self.g(ts - step)) / (2 * step) - self.dg(ts)
        e2 = (self.dg(ts + step) - self.dg(ts - step)) / (2 * step) - self.d2g(ts)
        return float(max(np.max(np.abs(e1)), np.max(np.abs(e2))))


def radial_hessian_eigenvalues(profile: RadialProfile, t: float, n: int) -> Spectrum:
    """g'(t) with multiplicity n-1 and g'(t) + t g''(t) once."""
    if t <= 0:
        raise DomainError(f"t={t:g} must be positive")
    d1 = float(profile.dg(t))
    d2 = float(profile.d2g(t))
    return Spectrum([d1] * (n - 1) + [d1 + t * d2])


def radial_sigma(profile: RadialProfile, t: np.ndarray, n: int, m: int) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    d1 = profile.dg(t)
    lam = np.stack([d1] * (n - 1) + [d1 + t * profile.d2g(t)], axis=-1)
    return elem_sym_all(lam, m)[..., m]


def sphere_area(n: int) -> float:
    """|S^{2n-1}| = 2π^n/(n-1)!."""
    return 2.0 * math.pi ** n / math.factorial(n - 1)


def shell_lq_integrals(profile: RadialProfile, n: int, q: float, deltas: Sequence[float]) -> np.ndarray:
    """∫_{δ ≤ |z| ≤ 2δ} |g(|z|²)|^q dV for each δ, by 1D radial quadrature."""
    out = []
    for d in deltas:
        val, _ = integrate.quad(lambda r: abs(float(profile.g(r * r))) ** q * r ** (2 * n - 1),
                                d, 2 * d, epsabs=0.0, epsrel=1e-12, limit=200)
        out.append(sphere_area(n) * val)
    return np.asarray(out)


def shell_density_integrals(profile: RadialProfile, n: int, m: int, p: float,
                            deltas: Sequence[float]) -> np.ndarray:
    """∫_{δ ≤ |z| ≤ 2δ} σ_m(u)^p dV for u = g(|z|²)."""
    out = []
    for d in deltas:
        val, _ = integrate.quad(
            lambda r: abs(float(radial_sigma(profile, r * r, n, m))) ** p * r ** (2 * n - 1),
            d, 2 * d, epsabs=0.0, epsrel=1e-12, limit=200)
        out.append(sphere_area(n) * val)
    return np.asarray(out)


def density_lq_growth(profile: RadialProfile, n: int, q: float, deltas: Sequence[float],
                      m: Optional[int] = None) -> Tuple[np.ndarray, float]:
    """
    Shell integrals over δ ≤ |z| ≤ 2δ and the growth exponent: the slope of their
    logarithm against log(1/δ). Positive slope means the integral blows up at 0.
    With m given the integrand is σ_m(u)^q instead of |u|^q.
    """
    require(len(deltas) >= 2, "need at least two shells")
    if m is None:
        vals = shell_lq_integrals(profile, n, q, deltas)
    else:
        vals = shell_density_integrals(profile, n, m, q, deltas)
    fit = stats.linregress(np.log(1.0 / np.asarray(deltas, dtype=float)), np.log(vals))
    return vals, float(fit.slope)
