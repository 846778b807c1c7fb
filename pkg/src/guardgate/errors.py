"""Exception types shared across the package.

Everything raised on purpose derives from GuardgateError so callers can
catch one base class at API boundaries.
"""

from __future__ import annotations


class GuardgateError(Exception):
    """Base class for all guardgate errors."""


# --- rule compilation / evaluation ---------------------------------------

class InvalidPattern(GuardgateError):
    """A static rule's regex source failed to compile."""


class UnknownBuiltinPattern(GuardgateError):
    """A static rule referenced a builtin pattern name not in the catalog."""


class EmptyKeywordList(GuardgateError):
    """A natural-language rule has no keywords and no lexicon."""


class UnknownModelReference(GuardgateError):
    """A classifier rule referenced a model that is not loaded."""


class UnknownLexiconReference(GuardgateError):
    """A natural-language rule referenced a lexicon that is not loaded."""


class SpanOutOfBounds(GuardgateError):
    """A match span does not fit the text or splits a UTF-8 character."""


# --- classifier ------------------------------------------------------------

class EmptyDataset(GuardgateError):
    """Training requested on a dataset with no examples."""


class SingleClassDataset(GuardgateError):
    """Training requested on a dataset missing one of the two labels."""


class ModelFormatError(GuardgateError):
    """A serialized model file is malformed or has the wrong magic/version."""


# --- policy evaluation -----------------------------------------------------

class MixedDirections(GuardgateError):
    """Policies passed to a single evaluation side disagree on direction."""


# --- conflict resolution ---------------------------------------------------

class AxisMismatch(GuardgateError):
    """Two ethical vectors do not share the same axis list."""


class DuplicatePriority(GuardgateError):
    """Two guardrails in one precedence resolution share a priority."""


class QueueUnavailable(GuardgateError):
    """The review queue has been shut down and accepts no new items."""


class AlreadyResolved(GuardgateError):
    """A review item was resolved twice."""


class UnknownReview(GuardgateError):
    """No review item exists with the given id."""


# --- gateway / config ------------------------------------------------------

class ConfigNotLoaded(GuardgateError):
    """A request arrived before any assistant configuration was loaded."""


class UpstreamTimeout(GuardgateError):
    """The upstream provider did not answer within the configured timeout."""


class ValidationFailed(GuardgateError):
    """Configuration validation produced blocking findings.

    ``findings`` is a list of dicts with at least ``severity`` and
    ``message`` keys, suitable for direct JSON serialization.
    """

    def __init__(self, message: str, findings: list[dict] | None = None):
        super().__init__(message)
        self.findings = findings or []
