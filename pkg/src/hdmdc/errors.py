"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class HdmdcError(Exception):
    exit_code = 1


class ConfigError(HdmdcError):
    exit_code = 2


class DataError(HdmdcError, ValueError):
    exit_code = 3


class InvalidInputError(DataError):
    pass


class SchemaError(DataError):
    pass


class GridError(DataError):
    pass


class BoundsError(DataError):
    pass


class InsufficientDataError(DataError):
    pass


class DegenerateChannelError(DataError):
    pass


class NumericalError(HdmdcError, ArithmeticError):
    exit_code = 4


class NumericalFailureError(NumericalError):
    pass


class DivergenceError(NumericalError):
    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class EnsembleFailureError(NumericalError):
    pass
