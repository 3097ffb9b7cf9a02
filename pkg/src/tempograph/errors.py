"""Exception types shared across the package."""


class TempographError(Exception):
    """Base class for all package errors."""


class ValidationError(TempographError):
    """Malformed domain data: bad spans, duplicate ids, broken invariants."""


class SelfRelationError(ValidationError):
    """A relation was attached to a pair of identical event ids."""


class DotParseError(TempographError):
    """Model output could not be parsed into a relation graph."""

    def __init__(self, message: str, raw: str = ""):
        super().__init__(message)
        self.raw = raw


class GatewayError(TempographError):
    """Transport-level failure talking to the completion endpoint."""


class ReplayMissError(GatewayError):
    """Replay-only mode hit a prompt that has no cached response."""


class MalformedGenerationError(TempographError):
    """All regeneration attempts produced unparseable or incomplete output."""

    def __init__(self, message: str, last_raw: str = ""):
        super().__init__(message)
        self.last_raw = last_raw


class IncompleteGenerationError(TempographError):
    """A generation record is missing requested pairs at aggregation time."""


class InfeasibleError(TempographError):
    """Internal: the constraint network admits no labeling (should not happen
    with a table whose all-vague assignment is consistent)."""
