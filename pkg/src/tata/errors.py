"""Exception types raised across the package.

Everything derives from TataError so callers can catch validation
failures in one place; the CLI maps TataError to exit code 1 and
anything else to exit code 2.
"""


class TataError(Exception):
    pass


# --- vector / matrix primitives ---

class ZeroVectorError(TataError):
    pass


class NonFiniteError(TataError):
    pass


class DimensionMismatchError(TataError):
    pass


class NonPositiveTemperatureError(TataError):
    pass


class DimensionTooSmallError(TataError):
    pass


class SizeMismatchError(TataError):
    pass


# --- clustering ---

class TooFewPointsError(TataError):
    pass


class InvalidNError(TataError):
    pass


class EmptyCentroidsError(TataError):
    pass


class EmptyMembersError(TataError):
    pass


# --- text space ---

class BankTooSmallError(TataError):
    pass


class InvalidCountError(TataError):
    pass


class EmptyClassNameError(TataError):
    pass


# --- adaptation ---

class CountMismatchError(TataError):
    pass


class LengthMismatchError(TataError):
    pass


class NegativeAlphaError(TataError):
    pass


class UninitializedStateError(TataError):
    pass


class TooFewSamplesError(TataError):
    pass


# --- files and configuration ---

class BadMagicError(TataError):
    pass


class VersionUnsupportedError(TataError):
    pass


class ManifestMismatchError(TataError):
    pass


class ParseError(TataError):
    pass


class InvalidValueError(TataError):
    """Configuration field failed validation; `field` names the offender."""

    def __init__(self, field, message=None):
        self.field = field
        super().__init__(message or f"invalid value for {field!r}")


class IoFailureError(TataError):
    pass


# --- encoder port ---

class EncoderError(TataError):
    """The sidecar reported a failure for a request (message relayed)."""


class ProtocolError(TataError):
    pass


class EncoderTimeoutError(TataError):
    pass
