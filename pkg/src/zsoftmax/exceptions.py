class ZSoftmaxError(Exception):
    """Base class for errors raised by this package."""


class InvalidParameterError(ZSoftmaxError, ValueError):
    pass


class ShapeError(ZSoftmaxError, ValueError):
    pass


class ParseError(ZSoftmaxError, ValueError):
    """Malformed attribute CSV or config file. Carries the offending line number."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class FormatError(ZSoftmaxError, ValueError):
    """Malformed binary feature or checkpoint file."""


class TrainingError(ZSoftmaxError, RuntimeError):
    pass
