"""Exception hierarchy.

Every error that can be traced to a concrete offending element carries it
in ``witness`` so callers (and the CLI) can report it verbatim.
"""

from __future__ import annotations

from typing import Any


class GeoError(Exception):
    """Base class for all engine errors."""

    def __init__(self, message: str, witness: Any = None):
        super().__init__(message)
        self.witness = witness


# -- categories -------------------------------------------------------------


class CategoryError(GeoError):
    pass


class MissingComposite(CategoryError):
    pass


class NonAssociative(CategoryError):
    pass


class IdentityLawBroken(CategoryError):
    pass


class UnknownObject(GeoError, KeyError):
    def __str__(self) -> str:  # KeyError quotes its message otherwise
        return str(self.args[0])


class UnknownArrow(GeoError, KeyError):
    def __str__(self) -> str:
        return str(self.args[0])


# -- presheaves -------------------------------------------------------------


class NotAFunctor(GeoError):
    pass


class NotNatural(GeoError):
    pass


class ElementNotInValueSet(GeoError):
    pass


class AnchorMismatch(GeoError):
    pass


class MixedTargets(GeoError):
    pass


class ParentMismatch(GeoError):
    pass


# -- sheaves / geometry -----------------------------------------------------


class NotASheaf(GeoError):
    pass


class NotAnEquivalenceRelation(GeoError):
    pass


class InternalError(GeoError):
    """Two independent computations disagreed; always an engine bug."""


class InternalRouteDisagreement(InternalError):
    pass


class NotATopology(GeoError):
    pass


class SearchBudgetExceeded(GeoError):
    """A bounded search gave up. Inconclusive, never a negative verdict."""


class PullbacksMissingInC(GeoError):
    pass


class GluingConditionViolated(GeoError):
    def __init__(self, condition: str, message: str, witness: Any = None):
        super().__init__(f"gluing condition ({condition}) violated: {message}", witness)
        self.condition = condition


class NotAnOpenAtlas(GeoError):
    pass


class InvalidContext(GeoError):
    pass


# -- DSL --------------------------------------------------------------------


class DSLError(GeoError):
    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        loc = f"line {line}" if line is not None else ""
        if line is not None and col is not None:
            loc += f", col {col}"
        super().__init__(f"{loc}: {message}" if loc else message)
        self.line = line
        self.col = col


class GeoSyntaxError(DSLError):
    pass


class UnknownIdentifier(DSLError):
    pass


class DuplicateId(DSLError):
    pass


class ResourceBoundExceeded(DSLError):
    pass


class InvalidDocument(DSLError):
    """A well-formed document whose content the engine rejects."""
