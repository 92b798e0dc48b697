"""Exception types shared across the package."""


class MMGIError(Exception):
    """Base class for all package-specific errors."""


class ShapeError(MMGIError, ValueError):
    """Tensor operands have incompatible shapes."""


class DataValidationError(MMGIError, ValueError):
    """A corpus file or example bundle violates the schema."""


class AlignmentError(DataValidationError):
    """Token count and clip count disagree in the full setting."""


class ChartError(MMGIError):
    """A chart pass produced a non-finite or otherwise invalid cell."""


class DegenerateChartError(ChartError):
    """Root inside score too close to zero for span marginals."""


class CheckpointError(MMGIError):
    """Checkpoint file missing, corrupt, or incompatible with the config."""


class ConfigError(MMGIError, ValueError):
    """Run configuration is invalid or cannot be parsed."""


class GenerationError(MMGIError):
    """Synthetic corpus generation failed (e.g. grammar never terminates)."""


class TrainingError(MMGIError):
    """Training aborted, e.g. on a non-finite loss."""


class GradCheckError(MMGIError):
    """Finite-difference verification could not be completed."""
