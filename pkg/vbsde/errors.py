from typing import List, Optional


class BSDEError(Exception):
    """Root of every error raised by vbsde."""


class DimensionError(BSDEError, ValueError):
    pass


class InvalidShapeError(BSDEError, ValueError):
    pass


class InvalidRadiusError(BSDEError, ValueError):
    pass


class InvalidPriceError(BSDEError, ValueError):
    pass


class GridRangeError(BSDEError, ValueError):
    pass


class DegenerateStepError(BSDEError, ValueError):
    pass


class InvalidFamilyError(BSDEError, ValueError):
    pass


class ConfigError(BSDEError, ValueError):
    pass


class SingularRegressionError(BSDEError, RuntimeError):
    pass


class SingularVolatilityError(BSDEError, RuntimeError):
    pass


class InconsistencyError(BSDEError, RuntimeError):
    pass


class NonConvergenceError(BSDEError, RuntimeError):
    def __init__(self, message: str, residuals: Optional[List[float]] = None):
        super().__init__(message)
        self.residuals = list(residuals or [])


class ResolventError(BSDEError, RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


class StallError(BSDEError, RuntimeError):
    def __init__(self, message: str, trace: Optional[List[float]] = None):
        super().__init__(message)
        self.trace = list(trace or [])
