"""Exception hierarchy for pls-attn.

The split between :class:`ValidationError` and :class:`NumericalError`
mirrors the CLI exit-code contract: validation problems exit 1,
numerical failures exit 2.
"""


class PlsAttnError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(PlsAttnError, ValueError):
    """Bad input: shapes, values, configuration, or file contents."""


class DimensionError(ValidationError):
    """Matrix shapes are inconsistent with the requested operation."""


class ConfigError(ValidationError):
    """A configuration value is outside its allowed range."""


class DegeneracyError(ValidationError):
    """The input is rank-deficient or otherwise degenerate."""


class CenteringError(ValidationError):
    """Data expected to be column-centered is not."""


class ParseError(ValidationError):
    """A CSV or model file could not be parsed."""


class UnsupportedVersionError(ParseError):
    """A model file declares a format version this package cannot read."""


class NumericalError(PlsAttnError, RuntimeError):
    """An iterative computation produced non-finite values.

    When raised from inside the descent loop, ``trace`` carries the
    partial iteration history recorded up to the failure.
    """

    trace = None
