class SketchError(Exception):
    """Errors originating from this package."""


class ConfigurationError(SketchError):
    """Errors related to run parameters and configuration files."""


class InputError(SketchError):
    """A stream row or timestamp violates an operation's precondition."""


class FormatError(InputError):
    """Errors related to parsing CSV stream files."""


class ShapeError(SketchError):
    """Matrix or vector dimensions do not line up."""


class NumericalError(SketchError):
    """The linear algebra backend could not complete a decomposition."""


class ReportError(SketchError):
    """Errors related to writing report files."""
