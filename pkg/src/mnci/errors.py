"""Exception hierarchy. The CLI maps each class to an exit status."""


class MNCIError(Exception):
    exit_code = 2


class ConfigError(MNCIError, ValueError):
    """Invalid configuration or flag value."""

    exit_code = 1


class DataError(MNCIError, ValueError):
    """Input data that cannot be used (missing ids, too few labels, ...)."""

    exit_code = 2


class ParseError(DataError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ContractError(MNCIError, ValueError):
    """A precondition of an operation was violated by the caller."""

    exit_code = 2


class NumericError(MNCIError, ArithmeticError):
    """Non-finite values encountered."""

    exit_code = 3
