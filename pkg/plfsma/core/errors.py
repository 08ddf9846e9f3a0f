"""Exception hierarchy. Every exception carries the process exit code the CLI returns for it."""

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4


class PlfsmaException(Exception):
    exit_code = 1

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail

    def __str__(self) -> str:
        return self.detail


class ContractViolation(PlfsmaException, ValueError):
    """A caller broke a precondition: wrong shapes, asymmetric input, empty lists."""

    exit_code = EXIT_DATA


class ConfigurationError(PlfsmaException):
    """A parameter or setting cannot be used as given."""

    exit_code = EXIT_USAGE


class UsageError(ConfigurationError):
    exit_code = EXIT_USAGE


class DataFormatError(PlfsmaException):
    """An input file is unreadable or inconsistent."""

    exit_code = EXIT_DATA


class NumericalFailure(PlfsmaException):
    exit_code = EXIT_NUMERICAL
