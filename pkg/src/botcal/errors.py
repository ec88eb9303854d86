class BotcalError(Exception):
    """Base class for all botcal failures."""


class ValidationError(BotcalError, ValueError):
    """Input violates a documented precondition."""


class ParseError(ValidationError):
    """A file or document could not be parsed."""


class VersionError(ValidationError):
    """A model bundle was written by an incompatible format version."""


class SchemaMismatchError(ValidationError):
    """Feature vector and model were built from different feature schemas."""

    def __init__(self, expected: str, got: str):
        self.expected = expected
        self.got = got
        super().__init__(f"schema fingerprint mismatch: model expects {expected}, got {got}")


class ConvergenceError(BotcalError):
    """An iterative fit failed to converge."""
