# hesslab/reports.py
"""CSV experiment reports and the PASS/FAIL criterion lines."""
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Sequence, Union

FLOAT_FMT = "%.12g"


def fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return FLOAT_FMT % value
    if value is None:
        return ""
    return str(value)


@dataclass
class CsvReport:
    name: str
    columns: Sequence[str]
    rows: List[Dict[str, object]] = field(default_factory=list)

    def add(self, **row):
        unknown = set(row) - set(self.columns)
        if unknown:
            raise KeyError(f"{self.name}: unknown columns {sorted(unknown)}")
        self.rows.append(row)

    def extend(self, rows):
        for r in rows:
            self.add(**r)

    def render(self) -> str:
        lines = [",".join(self.columns)]
        for r in self.rows:
            lines.append(",".join(fmt(r.get(c)) for c in self.columns))
        return "\n".join(lines) + "\n"

    def write(self, out_dir: Union[str, Path]) -> Path:
        path = Path(out_dir) / f"{self.name}.csv"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.render())
        return path


@dataclass(frozen=True)
class Criterion:
    id: str
    measured: float
    bound: float
    passed: bool

    @classmethod
    def at_most(cls, id: str, measured: float, bound: float) -> "Criterion":
        return cls(id, float(measured), float(bound), bool(measured <= bound))

    @classmethod
    def at_least(cls, id: str, measured: float, bound: float) -> "Criterion":
        return cls(id, float(measured), float(bound), bool(measured >= bound))

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.id} {fmt(self.measured)} {fmt(self.bound)}"


def write_summary(out_dir: Union[str, Path], criteria: Sequence[Criterion]) -> Path:
    path = Path(out_dir) / "summary.txt"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("".join(c.line() + "\n" for c in criteria))
    return path
