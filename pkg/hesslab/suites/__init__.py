# hesslab/suites/__init__.py
"""
Experiment runners behind the CLI commands. Each `run(cfg, pool)` returns a
SuiteResult; the CLI writes the reports and prints the criteria.
"""
import logging
from concurrent.futures import Executor
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Tuple, TypeVar

from hesslab.errors import HessLabError
from hesslab.field import GridDomain, GridField
from hesslab.reports import Criterion, CsvReport

log = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


@dataclass
class SuiteResult:
    criteria: List[Criterion] = field(default_factory=list)
    reports: List[CsvReport] = field(default_factory=list)
    fields: Dict[str, GridField] = field(default_factory=dict)

    def merge(self, other: "SuiteResult") -> "SuiteResult":
        self.criteria += other.criteria
        self.reports += other.reports
        self.fields.update(other.fields)
        return self

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.criteria)


def ordered_map(pool: Executor, fn: Callable[[T], R], items: Iterable[T]) -> List[R]:
    """Results in input order whatever the completion order."""
    return list(pool.map(fn, items))


def run_parts(parts: Iterable[Tuple[str, Callable[[], SuiteResult]]]) -> SuiteResult:
    """Run named parts in order; a failing part leaves what came before on `err.partial`."""
    result = SuiteResult()
    for name, part in parts:
        log.info("suite %s", name)
        try:
            result.merge(part())
        except HessLabError as err:
            err.partial = result
            raise
    return result


def make_domain(kind: str, n: int, points: int) -> GridDomain:
    if kind == "box":
        return GridDomain.box(n, points)
    return GridDomain.ball(n, points)
