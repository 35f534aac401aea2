"""Exception types raised across the pipeline.

Every error is a ``ValueError`` subclass carrying the offending datum as an
attribute so callers (and the CLI) can report it without parsing messages.
"""

from __future__ import annotations


class AccelStateError(ValueError):
    """Base class for all validation errors in this package."""


# --- ingest -----------------------------------------------------------------


class MalformedRow(AccelStateError):
    def __init__(self, line: int, reason: str = "") -> None:
        self.line = line
        self.reason = reason
        super().__init__(f"malformed row at data line {line}" + (f": {reason}" if reason else ""))


class NonMonotonicTimestamp(AccelStateError):
    def __init__(self, line: int) -> None:
        self.line = line
        super().__init__(f"timestamp not strictly increasing at data line {line}")


class RateMismatch(AccelStateError):
    def __init__(self, observed: float, declared: float) -> None:
        self.observed = observed
        self.declared = declared
        super().__init__(f"observed sample rate {observed:.6g} Hz deviates >5% from declared {declared:.6g} Hz")


class UnknownBehaviour(AccelStateError):
    def __init__(self, token: str) -> None:
        self.token = token
        super().__init__(f"unknown behaviour token {token!r}")


class OverlappingEvents(AccelStateError):
    def __init__(self, animal: str, t: float) -> None:
        self.animal = animal
        self.t = t
        super().__init__(f"overlapping annotation events for animal {animal!r} at t={t!r}")


class InvertedInterval(AccelStateError):
    def __init__(self, line: int) -> None:
        self.line = line
        super().__init__(f"annotation at data line {line} has start_t >= end_t")


class InsufficientLabels(AccelStateError):
    """Drift estimation needs both an Active and an Inactive interval."""


# --- dsp / features -----------------------------------------------------------


class SeriesTooShort(AccelStateError):
    pass


class EmptySlice(AccelStateError):
    pass


class SliceTooShort(AccelStateError):
    pass


class WindowSizeError(AccelStateError):
    pass


# --- learn --------------------------------------------------------------------


class EmptyMatrix(AccelStateError):
    pass


class SingleClassTraining(AccelStateError):
    pass


class NoConvergence(AccelStateError):
    def __init__(self, max_iterations: int) -> None:
        self.max_iterations = max_iterations
        super().__init__(f"SMO did not converge within {max_iterations} iterations")


class KOutOfRange(AccelStateError):
    pass


class DimensionMismatch(AccelStateError):
    pass


class UnsupportedModelVersion(AccelStateError):
    pass


# --- eval ---------------------------------------------------------------------


class LengthMismatch(AccelStateError):
    pass


class SingleClassLabels(AccelStateError):
    pass


class InsufficientRows(AccelStateError):
    pass


# --- inference / cli ----------------------------------------------------------


class WindowSizeMismatch(AccelStateError):
    pass


class BadBinSize(AccelStateError):
    pass


class ConfigInvalid(AccelStateError):
    def __init__(self, field: str, reason: str = "") -> None:
        self.field = field
        super().__init__(f"invalid config field {field!r}" + (f": {reason}" if reason else ""))


class UnknownSubcommand(AccelStateError):
    def __init__(self, name: str) -> None:
        self.name = name
        super().__init__(f"unknown subcommand {name!r}")
