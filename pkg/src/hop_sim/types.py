import enum
import math
import sys

import numpy as np
import numpy.typing as npt

if sys.version_info >= (3, 11):
    from enum import StrEnum
else:

    class StrEnum(str, enum.Enum):
        # backport of enum.StrEnum (3.11+): str() and format() yield the value
        __str__ = str.__str__
        __format__ = str.__format__

        @staticmethod
        def _generate_next_value_(name: str, start: int, count: int, last_values: list[str]) -> str:
            return name.lower()


class ModelKind(StrEnum):
    COMPACT_A = "compactA"
    NONCOMPACT_A = "noncompactA"
    NONCOMPACT_BC = "noncompactBC"

    @property
    def is_type_a(self) -> bool:
        return self in (ModelKind.COMPACT_A, ModelKind.NONCOMPACT_A)


class OutputFormat(StrEnum):
    CSV = "csv"
    JSON = "json"


class LogLevel(StrEnum):
    critical = "critical"
    error = "error"
    warning = "warning"
    info = "info"
    debug = "debug"


# Coupling value of the freezing limit
INFINITY = math.inf

RealArray = npt.NDArray[np.float64]
ComplexArray = npt.NDArray[np.complex128]
