from __future__ import annotations

import numpy as np


class OpenQubitError(Exception):
    """Root of every error raised by the package."""


class PhysicalityError(OpenQubitError, ValueError):
    pass


class ConvergenceError(OpenQubitError, RuntimeError):
    def __init__(self, message: str, estimate: float, tolerance: float) -> None:
        super().__init__(f"{message} (error estimate {estimate:.3e}, tolerance {tolerance:.3e})")
        self.estimate = estimate
        self.tolerance = tolerance


class DegenerateStationaryStateError(OpenQubitError, np.linalg.LinAlgError):
    pass


class MalformedGeneratorError(OpenQubitError, ValueError):
    def __init__(self, message: str, residual: float) -> None:
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


class ConfigError(OpenQubitError, ValueError):
    def __init__(self, field: str, message: str) -> None:
        super().__init__(f"{field}: {message}")
        self.field = field
