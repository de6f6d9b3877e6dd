# hesslab/config.py
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Union

from dotenv import load_dotenv
from pydantic import BaseModel, Field, field_validator, model_validator

from hesslab.errors import ConfigError

load_dotenv()

COMMANDS = ("verify", "solve", "torus", "capacity", "stability", "integrability", "regularity")


@dataclass
class Settings:
    threads: int
    out_dir: str
    db_path: str
    seed: int
    log_level: str


def load_settings():
    try:
        return Settings(
            threads=int(os.getenv("HESSLAB_THREADS", "1")),
            out_dir=os.getenv("HESSLAB_OUT_DIR", "./out"),
            db_path=os.getenv("HESSLAB_DB_PATH", "./out/ledger.sqlite"),
            seed=int(os.getenv("HESSLAB_SEED", "7")),
            log_level=os.getenv("HESSLAB_LOG_LEVEL", "WARNING").upper(),
        )
    except ValueError as e:
        raise ConfigError("bad HESSLAB_* environment value", detail=str(e)) from e


class RunConfig(BaseModel):
    command: str
    n: int = 2
    m: int = 1
    grid: int = Field(17, ge=5)
    spacing: Optional[float] = None
    suite: str = "all"
    domain: str = "ball"
    samples: int = Field(2000, ge=1)
    f: str = "const:1"
    phi: str = "quad:0"
    q_sweep: List[float] = Field(default_factory=list)
    p_sweep: List[float] = Field(default_factory=list)
    eps_sweep: List[float] = Field(default_factory=list)
    delta_sweep: List[float] = Field(default_factory=list)
    radii: List[float] = Field(default_factory=list)
    seed: int = Field(7, ge=0, lt=2**64)
    threads: int = Field(1, ge=1)
    out_dir: str = "./out"
    output: Optional[str] = None
    input: Optional[str] = None
    tol: float = Field(1e-8, gt=0)
    max_iter: int = Field(40, ge=1)

    @field_validator("command")
    @classmethod
    def _known_command(cls, v):
        if v not in COMMANDS:
            raise ValueError(f"unknown command {v!r}")
        return v

    @field_validator("domain")
    @classmethod
    def _known_domain(cls, v):
        if v not in ("ball", "box"):
            raise ValueError("domain must be ball or box")
        return v

    @field_validator("spacing")
    @classmethod
    def _positive_spacing(cls, v):
        if v is not None and v <= 0:
            raise ValueError("spacing must be positive")
        return v

    @model_validator(mode="after")
    def _dims(self):
        if not 1 <= self.m <= self.n <= 3:
            raise ValueError(f"need 1 <= m <= n <= 3, got n={self.n}, m={self.m}")
        return self


def parse_sweep(text: Union[str, List[float], None]) -> List[float]:
    """'a:b:step' (inclusive) or 'x,y,z'."""
    if text is None or text == "":
        return []
    if isinstance(text, list):
        return [float(x) for x in text]
    s = str(text).strip()
    try:
        if ":" in s:
            parts = [float(p) for p in s.split(":")]
            if len(parts) != 3 or parts[2] <= 0:
                raise ValueError("sweep needs start:stop:step with step > 0")
            start, stop, step = parts
            count = int(round((stop - start) / step)) + 1
            return [round(start + k * step, 12) for k in range(count) if start + k * step <= stop + 1e-12]
        return [float(p) for p in s.split(",") if p.strip()]
    except ValueError as e:
        raise ConfigError(f"bad sweep {s!r}", detail=str(e)) from e


_LIST_KEYS = {"q_sweep", "p_sweep", "eps_sweep", "delta_sweep", "radii"}


def read_config_file(path: Union[str, Path]) -> Dict[str, object]:
    """Flat key=value lines; '#' comments and blank lines are skipped."""
    out: Dict[str, object] = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}", detail=str(e)) from e
    for num, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}:{num}: expected key=value")
        key = key.strip().replace("-", "_")
        value = value.strip()
        out[key] = parse_sweep(value) if key in _LIST_KEYS else value
    return out


def build_run_config(command: str, file_values: Dict[str, object], flags: Dict[str, object]) -> RunConfig:
    """File values first, then explicit (non-None) flags on top."""
    merged: Dict[str, object] = dict(file_values)
    for k, v in flags.items():
        if v is None:
            continue
        merged[k] = parse_sweep(v) if k in _LIST_KEYS else v
    merged["command"] = command
    return RunConfig(**merged)


def grid_points(cfg: RunConfig, length: float = 2.0) -> int:
    """Per-axis point count, from `spacing` when it is given."""
    if cfg.spacing is None:
        return cfg.grid
    return int(round(length / cfg.spacing)) + 1
