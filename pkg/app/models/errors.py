"""Exception hierarchy. Every error carries a stable ``code`` string."""

from __future__ import annotations

from typing import TYPE_CHECKING, Any, Optional

from pydantic import BaseModel

if TYPE_CHECKING:
    from app.models.schemas import State


class Violation(BaseModel):
    code: str
    field: str = ""
    message: str = ""

    def __str__(self) -> str:
        where = f" [{self.field}]" if self.field else ""
        return f"{self.code}{where}: {self.message}"


class SimulationError(Exception):
    code = "SIMULATION_ERROR"
    exit_code = 1

    def __init__(self, message: str = ""):
        super().__init__(message or self.code)


# --------------- Config family (exit 2) ---------------

class ConfigError(SimulationError):
    """Invalid configuration; holds every violation found, not just the first."""

    code = "CONFIG_ERROR"
    exit_code = 2

    def __init__(self, violations: list[Violation]):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))

    @property
    def codes(self) -> list[str]:
        return [v.code for v in self.violations]


class NotFoundError(SimulationError):
    code = "NOT_FOUND"
    exit_code = 2


class NonpositiveICError(SimulationError):
    code = "NONPOSITIVE_IC"
    exit_code = 2


class ICShapeMismatchError(SimulationError):
    code = "IC_SHAPE_MISMATCH"
    exit_code = 2


# --------------- Numerical family (exit 3) ---------------

class NumericalError(SimulationError):
    code = "NUMERICAL_ERROR"
    exit_code = 3


class SingularCoefficientError(NumericalError):
    code = "SINGULAR_COEFFICIENT"


class DtUnderflowError(NumericalError):
    code = "DT_UNDERFLOW"


class NegativityBlowupError(NumericalError):
    code = "NEGATIVITY_BLOWUP"


class ConstantsInfeasibleError(NumericalError):
    code = "CONSTANTS_INFEASIBLE"


class HaltedByObserver(SimulationError):
    """Raised by integrate when an observer asks to stop; not a failure."""

    code = "HALTED_BY_OBSERVER"

    def __init__(self, reason: str, state: Optional["State"] = None, **extra: Any):
        self.reason = reason
        self.state = state
        self.extra = extra
        super().__init__(reason)
