"""Exception types shared across the package."""


class ExpertNetError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(ExpertNetError):
    """Array shapes or vector lengths do not line up."""


class NumericError(ExpertNetError):
    """A computation produced or received non-finite values."""


class ConfigurationError(ExpertNetError):
    """Invalid hyperparameter, option, or config value."""


class DataError(ExpertNetError):
    """Labels or samples violate the dataset contract."""


class InputError(ExpertNetError):
    """A data file failed to parse."""
