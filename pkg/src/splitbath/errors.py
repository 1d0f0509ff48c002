"""Exception hierarchy shared by all modules."""


class SplitBathError(Exception):
    """Base class for every error raised by the package."""


class InvalidInputError(SplitBathError, ValueError):
    pass


class ParseError(InvalidInputError):
    """Malformed input file; ``line`` is the 1-based offending line, if known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class NumericError(SplitBathError, ArithmeticError):
    """A numerical routine failed to reach its target accuracy."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class PoleError(NumericError):
    pass


class ResourceError(SplitBathError, MemoryError):
    pass


class StructuralError(SplitBathError, ValueError):
    """Shapes, dimensions or null spaces do not have the required structure."""


class ConfigError(InvalidInputError):
    """Invalid scenario file; ``field`` is the dotted path of the bad entry."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}" if field else message)
        self.field = field
