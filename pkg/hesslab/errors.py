# hesslab/errors.py
from typing import Optional, Sequence


class HessLabError(RuntimeError):
    def __init__(self, message: str, *, detail: Optional[str] = None):
        self.detail = detail
        self.partial = None  # results gathered before the failure, set by the suite runner
        super().__init__(message)


class DomainError(HessLabError, ValueError):
    """An operation was called outside its domain (range, cone, margin...)."""


class ConfigError(HessLabError, ValueError):
    """Malformed config file or function spec."""


class AdmissibilityError(HessLabError):
    """Newton lost admissibility and step halving could not win it back."""

    def __init__(
        self,
        message: str,
        *,
        iteration: int,
        violations: int,
        residual_history: Sequence[float] = (),
        detail: Optional[str] = None,
    ):
        self.iteration = iteration
        self.violations = violations
        self.residual_history = list(residual_history)
        super().__init__(message, detail=detail)


def require(cond: bool, message: str, *, detail: Optional[str] = None) -> None:
    if not cond:
        raise DomainError(message, detail=detail)


class LiftOrderError(HessLabError):
    """A lift solution fell below its predecessor; `report` holds the solve that broke the order."""

    def __init__(self, message: str, *, lift: float, drop: float, report=None, detail: Optional[str] = None):
        self.lift = lift
        self.drop = drop
        self.report = report
        super().__init__(message, detail=detail)
