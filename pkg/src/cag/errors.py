"""Exception hierarchy shared across the package.

Everything raised on purpose derives from :class:`CagError` so callers (and
the CLI) can tell expected failures apart from genuine bugs.
"""


class CagError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(CagError):
    """A dataset, model, or config document could not be parsed."""


class IoError(CagError):
    """A file could not be read or written."""


class DimensionMismatch(CagError):
    """Array shapes are inconsistent with each other or with a trained model."""


class DuplicateInput(CagError):
    """Two samples share (numerically) the same control-parameter value."""


class InvalidParameter(CagError):
    """A configuration value or argument is outside its valid range."""


class ConvergenceFailure(CagError):
    """An iterative procedure exhausted its budget without meeting its goal."""


class NumericalFailure(CagError):
    """A matrix factorization or decomposition failed beyond repair."""


class VersionMismatch(CagError):
    """A serialized model declares a format version this build cannot read."""


class DivisionByZero(CagError):
    """A relative error was requested against an exactly zero reference."""
