"""Exception types raised by tariffmenu."""

from typing import TYPE_CHECKING

if TYPE_CHECKING:  # pragma: no cover
    from tariffmenu.model import MenuDiagnostics


class ValidationError(ValueError):
    """An input violates one of the model invariants."""


class RegimeMismatchError(ValidationError):
    """EXCLUDE usage prices were used where every outcome must be paid for."""


class IncentiveError(ValidationError):
    """A menu is not incentive compatible or not individually rational."""

    def __init__(self, message: str, diagnostics: "MenuDiagnostics") -> None:
        super().__init__(message)
        self.diagnostics = diagnostics


class MonotonicityError(ValidationError):
    """A value profile cannot be realized by any IC menu."""


class GuardError(RuntimeError):
    """An instance is too large for an exact or enumerative routine."""


class SolverConsistencyError(RuntimeError):
    """Two independent computations of the same optimum disagree."""
