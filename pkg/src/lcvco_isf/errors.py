"""Exception hierarchy; each class maps to a distinct CLI exit code."""


class LcvcoError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(LcvcoError):
    """Config file rejected (missing/unknown key, malformed value)."""

    def __init__(self, message, path=None, line=None):
        loc = ""
        if path is not None:
            loc = f"{path}:"
        if line is not None:
            loc += f"{line}:"
        super().__init__(f"{loc} {message}" if loc else message)
        self.path = path
        self.line = line


class DomainError(LcvcoError):
    """Input outside the mathematical domain of an operation."""


class DegenerateConfigError(LcvcoError):
    """Operating-point algebra breaks down (zero denominator, 0/0)."""


class InconsistentAnglesError(LcvcoError):
    """Boundary angles violate the ordering the schedule requires."""


class DegenerateWaveformError(LcvcoError):
    """Waveform unusable for sensitivity extraction (constant, or
    vanishing derivative norm)."""


class GridMismatchError(LcvcoError):
    """Sampled curves combined on incompatible grids."""


class SimulationError(LcvcoError):
    """Base class for time-domain simulator failures."""


class InstabilityError(SimulationError):
    """Node voltage diverged; carries the step index."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class NoOscillationError(SimulationError):
    """Startup failed: amplitude never grew past the floor."""


class ResolutionError(LcvcoError):
    """Trace too short for spectral estimation; carries the minimum
    resolvable offset in Hz."""

    def __init__(self, message, min_offset_hz=None):
        super().__init__(message)
        self.min_offset_hz = min_offset_hz
