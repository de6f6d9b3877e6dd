# hesslab/funcs.py
"""
Named function constructors for f and φ, so an experiment fits on one line:
const:c, quad:c, radial:G, radial:log, bump:a,r, sing:a, cos:a.
"""
import math
from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np

from hesslab.errors import ConfigError
from hesslab.field import GridDomain, GridField, RadialProfile

KINDS = {
    "const": 1,
    "quad": 1,
    "radial": 1,
    "bump": 2,
    "sing": 1,
    "cos": 1,
}


@dataclass(frozen=True)
class FunctionSpec:
    kind: str
    params: Tuple
    text: str


def parse_spec(text: str) -> FunctionSpec:
    kind, sep, rest = text.strip().partition(":")
    if not sep or kind not in KINDS:
        raise ConfigError(f"unknown function spec {text!r}",
                          detail="expected one of " + ", ".join(f"{k}:..." for k in KINDS))
    if kind == "radial":
        if rest not in ("G", "log"):
            raise ConfigError(f"radial spec must be radial:G or radial:log, got {text!r}")
        return FunctionSpec(kind, (rest,), text)
    try:
        params = tuple(float(x) for x in rest.split(","))
    except ValueError as e:
        raise ConfigError(f"bad numbers in {text!r}", detail=str(e)) from e
    if len(params) != KINDS[kind]:
        raise ConfigError(f"{kind} takes {KINDS[kind]} parameter(s), got {len(params)}")
    if kind == "bump" and params[1] <= 0:
        raise ConfigError("bump radius must be positive")
    return FunctionSpec(kind, params, text)


def profile_for(spec: FunctionSpec, n: int, m: int) -> RadialProfile:
    if spec.kind == "quad":
        return RadialProfile.quadratic(spec.params[0])
    if spec.kind == "radial":
        return RadialProfile.log() if spec.params[0] == "log" else RadialProfile.green(n, m)
    raise ConfigError(f"{spec.text} is not a radial profile")


def pointwise(spec: FunctionSpec, domain: GridDomain, m: int) -> Callable[[np.ndarray], np.ndarray]:
    """Map (K, 2n) coordinates to values."""
    n = domain.n
    c = domain.center
    floor = 0.5 * domain.h

    def r2(x):
        return np.sum((x - c) ** 2, axis=-1)

    if spec.kind == "const":
        value = spec.params[0]
        return lambda x: np.full(x.shape[:-1], value)
    if spec.kind in ("quad", "radial"):
        prof = profile_for(spec, n, m)
        return lambda x: prof.g(r2(x))
    if spec.kind == "bump":
        a, rad = spec.params
        return lambda x: a * np.clip(1.0 - r2(x) / rad ** 2, 0.0, None) ** 3
    if spec.kind == "sing":
        a = spec.params[0]
        return lambda x: np.maximum(np.sqrt(r2(x)), floor) ** (-a)
    a = spec.params[0]
    return lambda x: math.comb(n, m) * (1.0 + a * np.cos(2.0 * math.pi * x[..., 0]))


def make_field(text: str, domain: GridDomain, m: int) -> GridField:
    spec = parse_spec(text)
    return GridField.from_function(domain, pointwise(spec, domain, m))
