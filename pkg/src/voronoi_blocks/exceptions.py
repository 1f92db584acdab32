"""Exception types raised across the package."""


class VoronoiBlocksError(Exception):
    """Base class for all package errors."""


class InputError(VoronoiBlocksError, ValueError):
    """Malformed input data or configuration."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class EmptyInput(InputError):
    pass


class DuplicatePoints(InputError):
    def __init__(self, message, indices=()):
        self.indices = tuple(indices)
        super().__init__(message)


class OutOfBounds(InputError):
    pass


class InvalidSpec(InputError):
    pass


class DomainError(VoronoiBlocksError, ValueError):
    """Arguments outside the domain of the block posterior."""


class QuantizationError(DomainError):
    """A cell holds less than one volume quantum."""

    def __init__(self, message, report=None):
        self.report = report
        super().__init__(message)


class InvalidMerge(VoronoiBlocksError, ValueError):
    pass


class TooLarge(VoronoiBlocksError, ValueError):
    pass
