"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration value or malformed config file."""


class ShapeError(ValueError):
    """Tensor shapes do not compose."""


class TrainingError(RuntimeError):
    """Training aborted (non-finite loss or gradient)."""
