"""Exception taxonomy shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, DataError -> 3,
DivergenceError -> 4.
"""


class EgoinfError(Exception):
    """Base class for all package errors."""


class ConfigError(EgoinfError):
    """Invalid configuration or contract violation (bad flag, bad shape request)."""


class DimensionError(ConfigError):
    """Shape mismatch between operands; message names both shapes."""


class DataError(EgoinfError):
    """Malformed or invariant-violating input data."""


class DivergenceError(EgoinfError):
    """Training produced non-finite values; message carries the epoch."""


class NumericsError(EgoinfError):
    """An operation produced NaN/Inf outside a training loop."""
