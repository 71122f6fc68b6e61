"""Exception hierarchy shared by every alos module.

Everything raised on purpose derives from AloError so the CLI can map
domain failures to exit code 1 without enumerating modules.
"""

from __future__ import annotations


class AloError(Exception):
    """Base class for all domain errors."""


# --- object model -----------------------------------------------------------

class EmptyNameError(AloError):
    pass


class DuplicateSubObjectError(AloError):
    pass


class DanglingSkillReferenceError(AloError):
    pass


class InvalidALOError(AloError):
    """An ALO failed validation; carries the offending report."""

    def __init__(self, report):
        self.report = report
        super().__init__(f"ALO failed validation: {report.summary()}")


# --- registry ---------------------------------------------------------------

class NotFoundError(AloError):
    pass


class CrossReferenceBrokenError(AloError):
    pass


class IoFailureError(AloError):
    pass


class CorruptEntryError(AloError):
    pass


# --- parsing ----------------------------------------------------------------

class ParseError(AloError):
    def __init__(self, line: int, expected: str):
        self.line = line
        self.expected = expected
        super().__init__(f"line {line}: expected {expected}")


class ValidationFailedError(AloError):
    """A parsed document built an ALO that does not validate."""

    def __init__(self, report):
        self.report = report
        super().__init__(f"parsed ALO failed validation: {report.summary()}")


class NoTableFoundError(AloError):
    pass


class RaggedRowError(AloError):
    def __init__(self, line: int, message: str = ""):
        self.line = line
        super().__init__(message or f"ragged table row at line {line}")


# --- prompts ----------------------------------------------------------------

class EmptyInputError(AloError):
    pass


class UnknownNameError(AloError):
    pass


# --- gateway ----------------------------------------------------------------

class HttpError(AloError):
    def __init__(self, status: int, message: str = ""):
        self.status = status
        super().__init__(message or f"HTTP {status}")


class TimeoutError_(AloError):
    """Request timed out after retries (named to avoid shadowing builtins)."""


class RateLimitedError(AloError):
    pass


class MalformedResponseError(AloError):
    pass


class BackendError(AloError):
    pass


# --- simulation -------------------------------------------------------------

class DegenerateBoundsError(AloError):
    pass


class OutOfBoundsError(AloError):
    pass


class MissingResponseSkillError(AloError):
    pass


# --- codegen ----------------------------------------------------------------

class UnsupportedDialectError(AloError):
    pass


class SchemaMismatchError(AloError):
    pass


# --- variability ------------------------------------------------------------

class DimensionMismatchError(AloError):
    pass


class ZeroNormError(AloError):
    pass


class TrialFailedError(AloError):
    def __init__(self, indices):
        self.indices = tuple(indices)
        super().__init__(f"trials failed at indices {list(self.indices)}")
