"""Exception hierarchy shared by every tclswarm module."""


class TclError(Exception):
    """Base class for all tclswarm errors."""


class ConfigError(TclError, ValueError):
    """Invalid configuration value, range or schedule."""


class EmptyPopulationError(ConfigError):
    pass


class StabilityError(ConfigError):
    """A discretisation step violates its stability bound."""


class StepSizeError(TclError, ValueError):
    """Integration step too coarse for the thermal cycle."""


class DomainError(TclError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class ShapeError(TclError, ValueError):
    """Mismatched vector lengths or misaligned series."""


class BaselineError(TclError, ZeroDivisionError):
    """A percentage was requested against a zero baseline."""


class ResolutionError(TclError, ValueError):
    """Spectral window too short, or no non-DC content."""


class DegenerateScalerError(TclError, ValueError):
    pass


class ModelCorruptError(TclError, RuntimeError):
    pass


class TrainingError(TclError, RuntimeError):
    """Training diverged; ``checkpoint`` holds the last finite model."""

    def __init__(self, message, checkpoint=None):
        super().__init__(message)
        self.checkpoint = checkpoint
