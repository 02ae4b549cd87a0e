"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, DataError -> 3,
NumericalError -> 4.
"""


class SimplexMapError(Exception):
    pass


class ConfigError(SimplexMapError):
    """Invalid hyperparameters or usage (violated constraints, bad flags)."""


class DataError(SimplexMapError):
    """Malformed or insufficient input data."""


class NumericalError(SimplexMapError):
    """A numerical routine failed beyond recovery (e.g. factorization)."""
