# app/core/exceptions.py

from typing import Iterable


class SubmodularError(Exception):
    """Base error for the toolkit"""


class ParameterError(SubmodularError, ValueError):
    """Parameter outside its documented range"""


class ElementRangeError(ParameterError):
    def __init__(self, element: int, n: int):
        self.element = element
        self.n = n
        super().__init__(f"Element id {element} outside ground set of size {n}")


class EmptyGroundSetError(ParameterError):
    def __init__(self, operation: str):
        super().__init__(f"{operation} requires a non-empty ground set")


class NegativeValueError(SubmodularError):
    def __init__(self, members: Iterable[int], value: float):
        self.members = tuple(members)
        self.value = value
        super().__init__(f"Objective returned {value!r} < 0 on S={set(self.members) or '{}'}")


class EnumerationLimitError(SubmodularError):
    def __init__(self, operation: str, n: int, limit: int):
        self.n = n
        self.limit = limit
        super().__init__(f"{operation} enumerates 2^n subsets; n={n} exceeds the cap {limit}")


class IngestError(SubmodularError):
    def __init__(self, path: str, reason: str):
        self.path = path
        super().__init__(f"{path}: {reason}")


class ConfigError(SubmodularError):
    """Invalid experiment configuration"""


class ThresholdAuditError(SubmodularError):
    def __init__(self, element: int, solution: int, gain: float, gate: float):
        super().__init__(
            f"Accepted pair ({element}, {solution}) has true gain {gain!r} below gate {gate!r}"
        )
