# hesslab/radial.py
"""
Radial oracle: for u = g(|z|²) the equation σ_m(u) = f(t) reads

    C(n-1,m) g'^m + C(n-1,m-1) g'^{m-1} (g' + t g'') = f(t),

which is (C(n-1,m-1)/m) t^{1-n} d/dt (t^n g'^m) = f. So t^n g'^m is a flux:
K + (m/C(n-1,m-1)) ∫_{t0}^t s^{n-1} f(s) ds, with K = 0 for the solution
regular at the origin.
"""
import logging
import math
from typing import Callable, Optional, Tuple, Union

import numpy as np
from scipy import integrate, optimize

from hesslab.errors import DomainError, require
from hesslab.field import RadialProfile

log = logging.getLogger(__name__)

RadialData = Union[float, Callable[[np.ndarray], np.ndarray]]

_GAUSS = np.polynomial.legendre.leggauss(64)


def _as_callable(f: RadialData) -> Callable[[np.ndarray], np.ndarray]:
    if callable(f):
        return f
    c = float(f)
    return lambda t: np.full(np.shape(t), c)


def _mean_flux(f, t: np.ndarray, n: int) -> np.ndarray:
    """∫_0^1 s^{n-1} f(t s) ds, so that ∫_0^t s^{n-1} f = t^n · this."""
    x, w = _GAUSS
    s = 0.5 * (x + 1.0)
    ws = 0.5 * w * s ** (n - 1)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    vals = f(t[:, None] * s[None, :])
    return vals @ ws


class _Slope:
    """g'(t) = ((K + c·(t^n M(t) - t0^n M(t0))) / t^n)^{1/m}."""

    def __init__(self, f, n: int, m: int, t0: float, k: float):
        self.f, self.n, self.m, self.t0, self.k = f, n, m, t0, k
        self.c = m / math.comb(n - 1, m - 1)
        self.base = 0.0 if t0 <= 0 else t0 ** n * float(_mean_flux(f, t0, n)[0])

    def __call__(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        n, m = self.n, self.m
        out = np.empty_like(t)
        pos = t > 0
        if self.t0 <= 0:
            q = self.k / np.where(pos, t, 1.0) ** n + self.c * _mean_flux(self.f, t, n)
        else:
            tp = np.where(pos, t, 1.0)
            q = (self.k + self.c * (tp ** n * _mean_flux(self.f, tp, n) - self.base)) / tp ** n
        out[:] = np.clip(q, 0.0, None) ** (1.0 / m)
        if self.k == 0 and self.t0 <= 0:
            out[~pos] = (self.c * float(self.f(np.zeros(1))[0]) / n) ** (1.0 / m)
        return out

    def derivative(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        n, m = self.n, self.m
        w = self(t)
        fv = self.f(t)
        denom = math.comb(n - 1, m - 1) * t * w ** (m - 1)
        num = fv - math.comb(n, m) * w ** m
        ok = (t > 0) & (denom > 0)
        return np.where(ok, num / np.where(ok, denom, 1.0), 0.0)


def _integrate_slope(slope: _Slope, t_start: float, t_max: float, nodes: int):
    sol = integrate.solve_ivp(
        lambda t, y: slope(t),
        (t_start, t_max),
        np.zeros(1),
        method="Radau",
        t_eval=np.linspace(t_start, t_max, nodes),
        dense_output=True,
        rtol=1e-11,
        atol=1e-13,
    )
    if not sol.success:
        raise DomainError("radial integration failed", detail=sol.message)
    return sol


def solve_radial(
    f: RadialData,
    m: int,
    n: int,
    boundary_value: float,
    r2: float = 1.0,
    inner: Optional[Tuple[float, float]] = None,
    t_max: Optional[float] = None,
    nodes: int = 10_000,
) -> RadialProfile:
    """
    g with σ_m(g(|z|²)) = f(|z|²) and g(r2) = boundary_value. Without `inner` the
    solution is the one regular at 0; with inner=(t0, g0) it is the annulus
    solution with g(t0) = g0.
    """
    require(1 <= m <= n, f"m={m} out of range [1, {n}]")
    fn = _as_callable(f)
    t_max = 1.5 * r2 if t_max is None else t_max
    sample_ts = np.linspace(0.0 if inner is None else inner[0], t_max, 257)
    if np.any(fn(sample_ts) < 0):
        raise DomainError("radial density must be nonnegative")

    if inner is None:
        slope = _Slope(fn, n, m, 0.0, 0.0)
        t_start = 0.0
    else:
        t0, g0 = float(inner[0]), float(inner[1])
        require(0 < t0 < r2, "inner radius must lie in (0, r2)")
        gap = boundary_value - g0

        def rise(k: float) -> float:
            sl = _Slope(fn, n, m, t0, k)
            val, _ = integrate.quad(lambda t: float(sl(t)[0]), t0, r2, epsabs=0.0, epsrel=1e-12, limit=200)
            return val - gap

        if rise(0.0) > 0:
            raise DomainError("annulus data admit no m-subharmonic radial solution",
                              detail=f"rise at K=0 already exceeds {gap:g}")
        hi = 1.0
        for _ in range(200):
            if rise(hi) > 0:
                break
            hi *= 2.0
        k = optimize.brentq(rise, 0.0, hi, xtol=1e-15, rtol=1e-14)
        slope = _Slope(fn, n, m, t0, k)
        t_start = t0
        log.debug("annulus flux constant K=%.12g", k)

    sol = _integrate_slope(slope, t_start, t_max, nodes)
    shift = boundary_value - float(sol.sol(r2)[0])

    def g(t):
        t = np.asarray(t, dtype=float)
        return sol.sol(np.ravel(t))[0].reshape(t.shape) + shift

    def dg(t):
        t = np.asarray(t, dtype=float)
        return slope(np.ravel(t)).reshape(t.shape)

    def d2g(t):
        t = np.asarray(t, dtype=float)
        return slope.derivative(np.ravel(t)).reshape(t.shape)

    return RadialProfile(g, dg, d2g, f"radial-ode(n={n},m={m})")


def ode_residual(profile: RadialProfile, f: RadialData, n: int, m: int,
                 ts: np.ndarray, step: float = 1e-5) -> float:
    """Max |C(n-1,m)g'^m + C(n-1,m-1)g'^{m-1}(g' + t g'') - f| with g'' by central differences."""
    fn = _as_callable(f)
    ts = np.asarray(ts, dtype=float)
    d1 = profile.dg(ts)
    d2 = (profile.dg(ts + step) - profile.dg(ts - step)) / (2.0 * step)
    lhs = math.comb(n - 1, m) * d1 ** m + math.comb(n - 1, m - 1) * d1 ** (m - 1) * (d1 + ts * d2)
    return float(np.max(np.abs(lhs - fn(ts))))
