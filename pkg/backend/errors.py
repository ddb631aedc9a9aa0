"""
Simulator Exceptions

Three roots so callers can tell failures apart:
- ConfigError: bad run configuration (CLI exit code 2)
- SimError: anything that goes wrong inside the simulated chain (exit code 3)
- CalibrationError: the measurement ran but cannot be calibrated (exit code 4)
"""


class ConfigError(ValueError):
    """Invalid or unknown configuration entry."""

    def __init__(self, message: str, key_path: str = None):
        self.key_path = key_path
        if key_path:
            message = f"{key_path}: {message}"
        super().__init__(message)


class SimError(Exception):
    """Base class for simulation failures."""


class InvalidSpec(SimError, ValueError):
    """A value object was built with parameters violating its invariants."""


class IndexOutOfRange(SimError, IndexError):
    """Element index outside the array layout."""


class MembraneContact(SimError):
    """
    Deflection too close to (or through) the bottom electrode.

    element/time are filled in when the error is raised from the
    acquisition chain, so the offending operating point can be reported.
    """

    def __init__(self, message: str, element: int = None, time: float = None):
        self.element = element
        self.time = time
        where = []
        if element is not None:
            where.append(f"element {element}")
        if time is not None:
            where.append(f"t={time:.6f}s")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class ModeMismatch(SimError):
    """Input converter called for a mode the modulator is not configured for."""


class DesignInfeasible(SimError):
    """FIR design misses one of its targets after quantization."""

    def __init__(self, metric: str, value: float, limit: str):
        self.metric = metric
        self.value = value
        self.limit = limit
        super().__init__(f"{metric} = {value:.4f} violates {limit}")


class InsufficientSamples(SimError):
    """Fewer valid samples than the analysis needs."""


class NoValidData(SimError):
    """No element has enough valid samples to select from."""


class CalibrationError(Exception):
    """Base class for calibration failures."""


class DegenerateAnchors(CalibrationError):
    """Systolic and diastolic raw codes coincide."""


class CalibrationImpossible(CalibrationError):
    """Not enough beats detected to derive calibration anchors."""
