"""
Vectorized observables evaluated on batches of unfolded states.

Every observable maps an array of shape (paths, N) to a complex array of
shape (paths,). They are plain frozen dataclasses so that worker processes can
receive them by pickling.
"""

import dataclasses
from typing import Protocol

import numpy as np

from hop_sim.symfunc import char_poly, elementary_symmetric
from hop_sim.types import ComplexArray


class Observable(Protocol):
    @property
    def label(self) -> str: ...

    def __call__(self, states: np.ndarray) -> ComplexArray: ...


def _centered(states: np.ndarray) -> np.ndarray:
    return states - states.mean(axis=-1, keepdims=True)


@dataclasses.dataclass(frozen=True)
class Constant:
    value: complex = 1.0

    @property
    def label(self) -> str:
        return f"const({self.value})"

    def __call__(self, states: np.ndarray) -> ComplexArray:
        return np.full(states.shape[0], self.value, dtype=np.complex128)


@dataclasses.dataclass(frozen=True)
class CircleElementary:
    """e_l(e^{i x}), optionally of the centered configuration."""

    l: int
    centered: bool = False

    @property
    def label(self) -> str:
        return f"e{self.l}(exp(i*{'diff' if self.centered else 'x'}))"

    def __call__(self, states: np.ndarray) -> ComplexArray:
        x = _centered(states) if self.centered else states
        return elementary_symmetric(np.exp(1j * x), self.l)[..., self.l]


@dataclasses.dataclass(frozen=True)
class ExpElementary:
    """ẽ_l(x) = e_l(e^{x}), optionally of the centered configuration."""

    l: int
    centered: bool = False

    @property
    def label(self) -> str:
        return f"e{self.l}(exp({'diff' if self.centered else 'x'}))"

    def __call__(self, states: np.ndarray) -> ComplexArray:
        x = _centered(states) if self.centered else states
        return elementary_symmetric(np.exp(x), self.l)[..., self.l].astype(np.complex128)


@dataclasses.dataclass(frozen=True)
class CoshElementary:
    l: int

    @property
    def label(self) -> str:
        return f"e{self.l}(cosh(x))"

    def __call__(self, states: np.ndarray) -> ComplexArray:
        return elementary_symmetric(np.cosh(states), self.l)[..., self.l].astype(np.complex128)


@dataclasses.dataclass(frozen=True)
class JacobiPolynomial:
    """H_{λ(n)}(x) = Σ_l coeffs[l]·e_l(cosh x)."""

    n: int
    coeffs: tuple[float, ...]

    @property
    def label(self) -> str:
        return f"H{self.n}(x)"

    def __call__(self, states: np.ndarray) -> ComplexArray:
        basis = elementary_symmetric(np.cosh(states), self.n)
        return (basis @ np.asarray(self.coeffs)).astype(np.complex128)


@dataclasses.dataclass(frozen=True)
class CharPoly:
    """∏_j (y - g(x_j)) for g one of exp(i·), exp or cosh, optionally of the centered configuration."""

    y: complex
    transform: str = "circle"
    centered: bool = False

    @property
    def label(self) -> str:
        source = "diff" if self.centered else "x"
        return f"charpoly[{self.transform}]({source}; y={self.y})"

    def __call__(self, states: np.ndarray) -> ComplexArray:
        x = _centered(states) if self.centered else states
        if self.transform == "circle":
            roots = np.exp(1j * x)
        elif self.transform == "exp":
            roots = np.exp(x).astype(np.complex128)
        elif self.transform == "cosh":
            roots = np.cosh(x).astype(np.complex128)
        else:
            raise ValueError(f"unknown transform {self.transform}")
        return char_poly(roots, self.y)


@dataclasses.dataclass(frozen=True)
class CenterPhase:
    """e^{sign·i·l·cg} with cg the coordinate mean."""

    l: int
    sign: int = -1

    @property
    def label(self) -> str:
        return f"exp({'-' if self.sign < 0 else ''}i*{self.l}*cg)"

    def __call__(self, states: np.ndarray) -> ComplexArray:
        return np.exp(self.sign * 1j * self.l * states.mean(axis=-1))


@dataclasses.dataclass(frozen=True)
class SumDisplacementSquared:
    """(Σ_j x_j - origin)², whose mean is 2Nt/κ for type-A models."""

    origin: float

    @property
    def label(self) -> str:
        return "(sum(x)-sum(x0))^2"

    def __call__(self, states: np.ndarray) -> ComplexArray:
        return ((states.sum(axis=-1) - self.origin) ** 2).astype(np.complex128)

