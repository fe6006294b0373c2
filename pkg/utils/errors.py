# utils/errors.py
from typing import Any, Dict, Optional


class CorfError(RuntimeError):
    pass


# ----------------- input errors (exit 2) -----------------

class ValidationError(CorfError, ValueError):
    pass


class NotLoxodromicError(ValidationError):
    pass


class WordError(ValidationError):
    pass


class PolyhedronError(ValidationError):
    def __init__(self, message: str, report: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.report = report or {}


# ----------------- numerical failures (exit 3) -----------------

class NumericalError(CorfError, ArithmeticError):
    pass


class DegenerateAxisError(NumericalError):
    pass


class FoldLimitError(NumericalError):
    pass


class FrontierExceeded(NumericalError):
    def __init__(self, message: str, partial: Any = None):
        super().__init__(message)
        self.partial = partial  # TileSet built so far


# ----------------- verification failures (exit 1) -----------------

class VerificationError(CorfError):
    pass


class CertificateError(VerificationError):
    pass


class InconclusiveCertificate(VerificationError):
    pass


class InconclusiveProbe(VerificationError):
    pass


EXIT_OK = 0
EXIT_VERIFICATION = 1
EXIT_INPUT = 2
EXIT_NUMERICAL = 3


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, ValidationError):
        return EXIT_INPUT
    if isinstance(exc, NumericalError):
        return EXIT_NUMERICAL
    if isinstance(exc, VerificationError):
        return EXIT_VERIFICATION
    if isinstance(exc, (ValueError, KeyError)):
        return EXIT_INPUT
    return EXIT_NUMERICAL
