"""Exception hierarchy shared by every blurlab module.

All library errors derive from :class:`BlurlabError` so callers can catch
one base type. The CLI maps subtypes onto stable process exit codes:
configuration/usage -> 1, data/shape/format -> 2, numeric failure -> 3.
"""


class BlurlabError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(BlurlabError, ValueError):
    """Operands have incompatible or malformed shapes."""


class ConfigError(BlurlabError, ValueError):
    """Invalid configuration value (unknown variant, bad hyperparameter)."""


class DataError(BlurlabError):
    """Input data is missing, malformed, or violates a documented range."""


class WeightFormatError(BlurlabError):
    """Weight container is truncated, inconsistent, or does not match the model."""


class NumericError(BlurlabError, ArithmeticError):
    """A numeric invariant broke at runtime (NaN/Inf gradients, failed check)."""


class ContractError(BlurlabError, RuntimeError):
    """An API usage contract was violated (e.g. a backward cache reused)."""
