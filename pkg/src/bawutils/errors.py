"""Contains all custom exceptions raised by bawutils"""
from typing import Any, List, Optional, Sequence


class BawUtilsException(Exception):
    pass


class ConfigException(BawUtilsException):
    pass


class AttributeNotFoundException(ConfigException):
    pass


class UnknownConfigKeyException(ConfigException):
    pass


class ArgumentException(BawUtilsException, ValueError):
    pass


class MaterialNotFoundException(BawUtilsException, KeyError):
    def __init__(self, name: str, available: Sequence[str]) -> None:
        self.name = name
        self.available = list(available)
        super().__init__(f"Unknown material {name!r}. Available materials: {', '.join(self.available) or 'none'}")

    def __str__(self) -> str:
        # KeyError would otherwise repr() the message
        return str(self.args[0])


class TouchstoneParseException(BawUtilsException):
    def __init__(self, message: str, line_number: Optional[int] = None) -> None:
        self.line_number = line_number
        prefix = f"line {line_number}: " if line_number is not None else ""
        super().__init__(f"{prefix}{message}")


class NumericException(BawUtilsException):
    pass


class MultiModeException(NumericException):
    def __init__(self, message: str, count: int) -> None:
        self.count = count
        super().__init__(message)


class FittingException(NumericException):
    def __init__(self, message: str, best: Any = None) -> None:
        self.best = best
        super().__init__(message)


class PoleException(NumericException):
    pass


class NotFoundException(NumericException):
    pass


class PartialResultException(NumericException):
    def __init__(self, message: str, missing: List[str], partial: Any = None) -> None:
        self.missing = list(missing)
        self.partial = partial
        super().__init__(message)


class SummaryException(NumericException):
    pass


class ConstraintException(BawUtilsException):
    pass
