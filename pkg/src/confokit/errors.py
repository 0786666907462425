"""Exception hierarchy shared by all confokit modules."""

from __future__ import annotations


class ConfokitError(Exception):
    """Base class for every error raised deliberately by confokit."""


class SchemaError(ConfokitError):
    """A referenced column or attribute does not exist or has the wrong type."""

    def __init__(self, name: str, message: str | None = None) -> None:
        self.name = name
        super().__init__(message or f"unknown attribute or column: {name!r}")


class ParseError(ConfokitError):
    """Input could not be parsed.

    ``line`` is set for row-level CSV problems, ``offset`` for malformed XML,
    ``trace_index``/``event_index`` for XES events missing mandatory keys.
    """

    def __init__(
        self,
        message: str,
        *,
        line: int | None = None,
        offset: int | None = None,
        trace_index: int | None = None,
        event_index: int | None = None,
    ) -> None:
        self.line = line
        self.offset = offset
        self.trace_index = trace_index
        self.event_index = event_index
        super().__init__(message)


class ValidationError(ConfokitError):
    """A model, descriptor or document violates its structural invariants."""

    def __init__(self, message: str, offenders: list[str] | None = None) -> None:
        self.offenders = list(offenders or [])
        super().__init__(message)


class ExecutionError(ConfokitError):
    """A transition was fired although it is not enabled."""

    def __init__(self, transition: str, lacking: list[str]) -> None:
        self.transition = transition
        self.lacking = lacking
        super().__init__(f"transition {transition!r} is not enabled; lacking tokens in {', '.join(lacking)}")


class ModelError(ConfokitError):
    """The model cannot support the requested computation."""


class DerivationError(ConfokitError):
    """Rule derivation could not see the complete model language."""


class ResourceError(ConfokitError):
    """A search exceeded its state budget."""

    def __init__(self, budget: int, what: str = "search") -> None:
        self.budget = budget
        super().__init__(f"{what} exceeded the state budget of {budget} states")


class ArgumentError(ConfokitError, ValueError):
    """An argument is outside the domain of the operation."""
