"""Exception hierarchy.

Every error raised by the package derives from :class:`HeadkinError`. The
CLI maps the three families to exit codes: configuration problems (1),
data problems (2) and numerical failures (3).
"""


class HeadkinError(Exception):
    exit_code = 2


class ConfigError(HeadkinError, ValueError):
    exit_code = 1


class DataError(HeadkinError, ValueError):
    exit_code = 2


class SchemaError(DataError):
    pass


class ParseError(DataError):
    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row


class EmptyInputError(DataError):
    pass


class UnusableSeriesError(DataError):
    pass


class DomainError(DataError):
    pass


class ShapeError(DataError):
    pass


class InsufficientDataError(DataError):
    pass


class DegenerateInputError(DataError):
    pass


class DegenerateLabelsError(DataError):
    pass


class NumericError(HeadkinError, ArithmeticError):
    exit_code = 3
