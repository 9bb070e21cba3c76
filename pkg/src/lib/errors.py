class RectifyError(ValueError):
    """Base class for every error raised by the library."""


class DomainError(RectifyError):
    pass


class DimensionMismatch(RectifyError):
    pass


class SchemaError(RectifyError):
    pass


class UnknownCurve(RectifyError):
    pass


class UnknownIntegrand(RectifyError):
    pass


class UnknownExample(RectifyError):
    pass


class ZeroLength(RectifyError):
    pass


class MissingDerivative(RectifyError):
    pass


class HomogeneityError(RectifyError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class HypothesisViolated(RectifyError):
    pass


class ZetaConditionViolated(RectifyError):
    def __init__(self, message, oscillations=None):
        super().__init__(message)
        self.oscillations = oscillations or []


class NonConvergence(RectifyError):
    """Raised only when a caller asks for a converged limit; carries the report."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class CertificationFailed(RectifyError):
    """qa_certify could not certify some epsilon; `pair` is the violating (D0, D)."""

    def __init__(self, message, table=None, pair=None):
        super().__init__(message)
        self.table = table or []
        self.pair = pair
