from __future__ import annotations

from typing import Optional


class QatemError(Exception):
    """Root of every error raised by the toolkit."""


class ValidationError(QatemError, ValueError):
    """Bad user input: the CLI maps it to exit code 2."""


class UnitError(ValidationError):
    pass


class NetlistError(ValidationError):
    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None) -> None:
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}"
            if column is not None:
                where += f", column {column}"
            where += ": "
        super().__init__(f"{where}{message}")


class TopologyError(NetlistError):
    def __init__(self, message: str, element: Optional[str] = None, line: Optional[int] = None) -> None:
        self.element = element
        if element is not None:
            message = f"element '{element}': {message}"
        super().__init__(message, line=line)


class GridError(ValidationError):
    pass


class PotentialShapeError(ValidationError):
    pass


class RegimeError(ValidationError):
    """A perturbative or truncation guard was violated."""


class ResonanceError(ValidationError):
    """Qubit and resonator are degenerate, so lambda = g / Delta is undefined."""
