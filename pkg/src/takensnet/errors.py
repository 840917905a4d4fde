"""Exception hierarchy shared by all takensnet modules."""


class TakensNetError(Exception):
    """Base class for every error raised by this package."""

    #: pipeline stage reported by the CLI when the error escapes
    stage = "general"


class ValidationError(TakensNetError, ValueError):
    stage = "validation"


class UnboundedOrbitError(TakensNetError):
    stage = "generate"

    def __init__(self, step, value):
        super().__init__(f"orbit diverged at step {step} (|x| = {abs(value):.3g} > 1e6)")
        self.step = step


class IntegrationBlowUpError(TakensNetError):
    stage = "generate"

    def __init__(self, step):
        super().__init__(f"non-finite state during integration at step {step}")
        self.step = step


class DegenerateSeriesError(TakensNetError, ValueError):
    stage = "normalize"


class CSVParseError(TakensNetError, ValueError):
    stage = "load"

    def __init__(self, message, row=None):
        super().__init__(message if row is None else f"row {row}: {message}")
        self.row = row


class InsufficientDataError(TakensNetError, ValueError):
    stage = "embed"


class DivergenceError(TakensNetError, FloatingPointError):
    stage = "train"


class NoSignalError(TakensNetError, ValueError):
    stage = "estimate"
