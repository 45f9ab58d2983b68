class PoleSwapException(Exception):

    original_exception = None

    def __init__(self, message, original_exception=None):
        super().__init__(message)
        self.original_exception = original_exception


class ShapeError(ValueError):
    pass


class StructureError(ValueError):
    pass


class DimensionError(ValueError):
    pass


class DomainError(ValueError):
    pass


class RangeError(ValueError):
    pass


class SizeMismatch(ValueError):
    pass


class ZeroVectorError(ValueError):
    pass


class SingularPoleError(PoleSwapException):
    pass


class CoincidentPolesError(PoleSwapException):
    pass


class DegenerateShiftError(PoleSwapException):
    pass


class DegeneratePencilError(PoleSwapException):
    pass


class GuardError(PoleSwapException):
    pass


class OracleFailure(PoleSwapException):
    pass


class SingularShiftError(PoleSwapException):
    pass


class RefinementLimitError(PoleSwapException):

    refinements = 0
    residual = None

    def __init__(self, message, refinements=0, residual=None):
        super().__init__(message)
        self.refinements = refinements
        self.residual = residual


class ConvergenceError(PoleSwapException):

    iterations = 0
    window = None

    def __init__(self, message, iterations=0, window=None, original_exception=None):
        super().__init__(message, original_exception=original_exception)
        self.iterations = iterations
        self.window = window


class ParseError(PoleSwapException):

    line = None
    column = None

    def __init__(self, message, line=None, column=None, original_exception=None):
        if line is not None:
            location = f"line {line}"
            if column is not None:
                location = f"{location}, column {column}"
            message = f"{message} ({location})"
        super().__init__(message, original_exception=original_exception)
        self.line = line
        self.column = column
