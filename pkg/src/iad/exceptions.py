"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """A run or model configuration is invalid or inconsistent."""


class DatasetError(ValueError):
    """A dataset file could not be parsed or fails its contract."""


class TrainingAbortError(RuntimeError):
    """Training produced a non-finite quantity and cannot continue."""


class UndefinedMetricError(ValueError):
    """A metric is mathematically undefined for the given inputs."""
