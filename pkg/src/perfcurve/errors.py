"""Exception types shared across the package.

Each class maps to a machine-readable category used by the CLI when
reporting failures (see `cli.ERROR_CATEGORIES`).
"""


class ValidationError(ValueError):
    """Invalid argument or malformed in-memory structure."""


class ParseError(ValueError):
    """Malformed input file; message includes the offending line when known."""


class InsufficientDataError(ValueError):
    """Not enough data to perform the requested computation."""


class GenerationError(RuntimeError):
    """Cascade generation failed to produce enough acceptable runs."""


class ConvergenceError(RuntimeError):
    """An iterative construction failed to reach its target."""


class TrainingError(RuntimeError):
    """Model training produced invalid (non-finite) parameters."""
