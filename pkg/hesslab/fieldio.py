# hesslab/fieldio.py
"""
HESSFIELD v1: one ASCII header line, then little-endian float64 values in
row-major order over the full shape. Exterior points are stored as NaN.
"""
import logging
from pathlib import Path
from typing import Union

import numpy as np

from hesslab.errors import ConfigError
from hesslab.field import EXTERIOR, GridDomain, GridField, classify

log = logging.getLogger(__name__)

MAGIC = "HESSFIELD"
VERSION = "v1"


def _fmt(x: float) -> str:
    return repr(float(x))


def header_line(domain: GridDomain) -> str:
    return (
        f"{MAGIC} {VERSION} n={domain.n} "
        f"shape={','.join(str(s) for s in domain.shape)} "
        f"h={_fmt(domain.h)} "
        f"origin={','.join(_fmt(o) for o in domain.origin)} "
        f"kind={domain.kind}\n"
    )


def write_field(path: Union[str, Path], u: GridField) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    vals = np.array(u.values, dtype="<f8")
    vals[u.domain.mask == EXTERIOR] = np.nan
    with path.open("wb") as fh:
        fh.write(header_line(u.domain).encode("ascii"))
        fh.write(vals.tobytes(order="C"))
    log.debug("wrote %s (%d values)", path, vals.size)
    return path


def _parse_header(line: str) -> dict:
    parts = line.strip().split(" ")
    if len(parts) != 7 or parts[0] != MAGIC or parts[1] != VERSION:
        raise ConfigError("not a HESSFIELD v1 file", detail=line.strip()[:80])
    out = {}
    for item in parts[2:]:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"bad header item {item!r}")
        out[key] = value
    try:
        return {
            "n": int(out["n"]),
            "shape": tuple(int(s) for s in out["shape"].split(",")),
            "h": float(out["h"]),
            "origin": np.array([float(o) for o in out["origin"].split(",")]),
            "kind": out["kind"],
        }
    except (KeyError, ValueError) as e:
        raise ConfigError("malformed HESSFIELD header", detail=str(e)) from e


def read_field(path: Union[str, Path]) -> GridField:
    """The mask is rebuilt from the NaN pattern with the same rule the constructors use."""
    raw = Path(path).read_bytes()
    end = raw.find(b"\n")
    if end < 0:
        raise ConfigError("HESSFIELD header is not terminated")
    meta = _parse_header(raw[:end].decode("ascii"))
    count = int(np.prod(meta["shape"]))
    body = raw[end + 1:]
    if len(body) != 8 * count:
        raise ConfigError(f"expected {8 * count} value bytes, found {len(body)}")
    values = np.frombuffer(body, dtype="<f8").reshape(meta["shape"]).astype(float)
    mask = classify(~np.isnan(values), meta["kind"])
    domain = GridDomain(meta["n"], meta["shape"], meta["h"], meta["origin"], mask, meta["kind"])
    return GridField(domain, values)
