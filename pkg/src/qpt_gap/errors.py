"""Exception types shared by the library and the CLI.

Each class also derives from the builtin the rest of the code base would have
raised (``ValueError``, ``RuntimeError``), so ``except ValueError`` keeps working.
"""

from __future__ import annotations

from collections.abc import Sequence


class QptGapError(Exception):
    """Base class for every error raised by qpt-gap."""


class InputError(QptGapError, ValueError):
    """Caller passed data that violates a documented precondition."""


class ParseError(InputError):
    """Instance or graph file could not be parsed."""

    def __init__(self, message: str, *, line_number: int | None = None) -> None:
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class CapacityError(InputError):
    """Problem is larger than the exhaustive or dense code paths allow."""


class DomainError(InputError):
    """Argument lies outside the domain of a closed-form expression."""


class DegeneracyError(QptGapError, ArithmeticError):
    """A perturbative denominator vanished."""

    def __init__(self, message: str, *, state: int | None = None) -> None:
        self.state = state
        super().__init__(message)


class DiagnosticError(QptGapError, RuntimeError):
    """The classical landscape has no structure the analysis can work with."""


class SolverError(QptGapError, RuntimeError):
    """Iterative eigensolver did not converge."""

    def __init__(
        self,
        message: str,
        *,
        residuals: Sequence[float] = (),
        lam: float | None = None,
    ) -> None:
        self.residuals = tuple(float(r) for r in residuals)
        self.lam = lam
        super().__init__(message)

    def at(self, lam: float) -> SolverError:
        """Return a copy tagged with the interpolation point that failed."""
        return SolverError(
            f"λ={lam:.17g}: {self.args[0]}",
            residuals=self.residuals,
            lam=lam,
        )
