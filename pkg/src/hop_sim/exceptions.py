from typing import Any

import numpy as np


class HopSimError(Exception):
    pass


class ParameterError(HopSimError, ValueError):
    pass


class ArgumentRangeError(HopSimError, ValueError):
    pass


class ExpOverflowError(HopSimError, OverflowError):
    def __init__(self, message: str, index: int):
        super().__init__(message)
        self.index = index

    def __reduce__(self) -> tuple[Any, ...]:
        return type(self), (self.args[0], self.index)


class DriftSingularityError(HopSimError, ArithmeticError):
    pass


class StepSizeError(HopSimError, ValueError):
    pass


class ConditioningError(HopSimError):
    def __init__(self, message: str, condition_number: float):
        super().__init__(message)
        self.condition_number = condition_number

    def __reduce__(self) -> tuple[Any, ...]:
        return type(self), (self.args[0], self.condition_number)


class UnsupportedModelError(HopSimError):
    pass


class DomainError(HopSimError, ValueError):
    pass


class ConfigurationError(HopSimError):
    pass


class StepFailureError(HopSimError):
    """Substep refinement exhausted for one SDE path."""

    def __init__(self, message: str, state: np.ndarray, time: float, stream: int):
        super().__init__(message)
        self.state = state
        self.time = time
        self.stream = stream

    def __reduce__(self) -> tuple[Any, ...]:
        return type(self), (self.args[0], self.state, self.time, self.stream)


class OdeSingularityError(HopSimError):
    def __init__(self, message: str, time: float):
        super().__init__(message)
        self.time = time

    def __reduce__(self) -> tuple[Any, ...]:
        return type(self), (self.args[0], self.time)
