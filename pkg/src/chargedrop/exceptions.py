"""Exception hierarchy shared by the solver and post-processing modules."""


class ChargeDropError(Exception):
    """Base class for all errors raised by the package."""


class InvalidParameterError(ChargeDropError, ValueError):
    """A parameter is out of range; ``field`` names the offending input."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class DegenerateGeometryError(ChargeDropError):
    pass


class SingularKernelError(ChargeDropError):
    pass


class SingularMatrixError(ChargeDropError):
    pass


class StepTooSmallError(ChargeDropError):
    pass


class FitFailureError(ChargeDropError):
    pass


class InsufficientNodesError(ChargeDropError):
    pass


class TipDetectionError(ChargeDropError):
    pass
