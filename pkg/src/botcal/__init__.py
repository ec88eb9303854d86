"""Bot scoring toolkit: random-forest bot scores, Platt calibration, and the
Bayesian complete automation probability (CAP)."""

__version__ = "0.1.0"

from botcal.errors import BotcalError, ParseError, SchemaMismatchError, ValidationError, VersionError

__all__ = [
    "BotcalError",
    "ParseError",
    "SchemaMismatchError",
    "ValidationError",
    "VersionError",
    "__version__",
]
