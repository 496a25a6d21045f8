"""Errors raised by the simulator. Everything derives from ``TalbotError``."""


class TalbotError(Exception):
    pass


class DomainError(TalbotError, ValueError):
    pass


class UsageError(TalbotError, ValueError):
    pass


class ConfigurationError(TalbotError, ValueError):
    pass


class OutOfRangeError(TalbotError, ValueError):
    pass


class InsufficientFringesError(TalbotError, ValueError):
    pass


class ResolutionError(TalbotError, RuntimeError):
    pass


class NumericalFailure(TalbotError, RuntimeError):
    def __init__(self, message: str, step_index: int):
        super().__init__(f"{message} (step {step_index})")
        self.step_index = step_index


class IntegrationTimeout(TalbotError, RuntimeError):
    pass


class ConfigParseError(TalbotError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{message}")
        self.line = line


class OutputDirectoryError(TalbotError, OSError):
    pass


class SnapshotFormatError(TalbotError, ValueError):
    pass
