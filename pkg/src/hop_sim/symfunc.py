"""
Elementary symmetric polynomials and the observable transforms built on them.
"""

import dataclasses
import logging

import numpy as np
import numpy.typing as npt

from hop_sim.exceptions import ArgumentRangeError, ExpOverflowError
from hop_sim.types import ComplexArray, RealArray

logger = logging.getLogger(__name__)

# exp and cosh overflow float64 beyond this magnitude
OVERFLOW_THRESHOLD = float(np.log(np.finfo(np.float64).max))


def elementary_symmetric(values: npt.ArrayLike, l_max: int) -> np.ndarray:
    """Compute e_0..e_{l_max} of the last axis of ``values``.

    Multiplies out ∏_j (1 + values[..., j]·s) once per input, keeping the
    coefficients of s^0..s^{l_max}. Leading axes are treated as a batch.

    Args:
        values: array of shape (..., N), real or complex
        l_max: highest degree to keep, 0 ≤ l_max ≤ N

    Returns:
        np.ndarray: shape (..., l_max + 1), dtype of the promoted input

    Raises:
        ArgumentRangeError: if l_max is outside 0..N
    """
    v = np.asarray(values)
    if not np.iscomplexobj(v):
        v = v.astype(np.float64, copy=False)
    n = v.shape[-1]
    if not 0 <= l_max <= n:
        raise ArgumentRangeError(f"degree {l_max} outside 0..{n}")

    coeffs = np.zeros((*v.shape[:-1], l_max + 1), dtype=v.dtype)
    coeffs[..., 0] = 1
    for j in range(n):
        upper = min(j + 1, l_max)
        if upper == 0:
            continue
        coeffs[..., 1 : upper + 1] = coeffs[..., 1 : upper + 1] + v[..., j, None] * coeffs[..., 0:upper]
    return coeffs


def _check_degree(n: int, l: int) -> None:
    if not 0 <= l <= n:
        raise ArgumentRangeError(f"l={l} outside 0..{n}")


def _check_overflow(x: RealArray) -> None:
    bad = np.flatnonzero(np.abs(x) > OVERFLOW_THRESHOLD)
    if bad.size:
        index = int(bad[0])
        raise ExpOverflowError(f"|x[{index}]| = {abs(x[index]):.6g} overflows exp", index)


def elem_sym(values: npt.ArrayLike, l: int) -> complex:
    """Return the l-th elementary symmetric polynomial of ``values``."""
    v = np.asarray(values, dtype=np.complex128)
    _check_degree(v.shape[-1], l)
    return complex(elementary_symmetric(v, l)[l])


def trig_elem_sym(x: npt.ArrayLike, l: int) -> float:
    """ẽ_l(x) = e_l(e^{x_1}, ..., e^{x_N})."""
    arr = np.asarray(x, dtype=np.float64)
    _check_degree(arr.shape[-1], l)
    _check_overflow(arr)
    return float(elementary_symmetric(np.exp(arr), l)[l])


def cosh_elem_sym(x: npt.ArrayLike, l: int) -> float:
    """e_l(cosh x_1, ..., cosh x_N)."""
    arr = np.asarray(x, dtype=np.float64)
    _check_degree(arr.shape[-1], l)
    _check_overflow(arr)
    return float(elementary_symmetric(np.cosh(arr), l)[l])


@dataclasses.dataclass(frozen=True)
class PolyCoeffs:
    """Monic polynomial Σ_l coeffs[l]·y^{degree-l}, coeffs[l] = (-1)^l e_l(roots)."""

    degree: int
    coeffs: ComplexArray

    def __post_init__(self) -> None:
        if self.coeffs.shape != (self.degree + 1,):
            raise ArgumentRangeError(f"expected {self.degree + 1} coefficients, got {self.coeffs.shape}")
        if self.coeffs[0] != 1:
            raise ArgumentRangeError("polynomial must be monic")

    def evaluate(self, y: npt.ArrayLike) -> ComplexArray:
        yy = np.asarray(y, dtype=np.complex128)
        acc = np.ones_like(yy)
        for c in self.coeffs[1:]:
            acc = acc * yy + c
        return acc

    def roots(self) -> ComplexArray:
        return np.roots(self.coeffs).astype(np.complex128)


def poly_from_roots(roots: npt.ArrayLike) -> PolyCoeffs:
    r = np.asarray(roots, dtype=np.complex128)
    n = r.shape[-1]
    signs = (-1.0) ** np.arange(n + 1)
    return PolyCoeffs(degree=n, coeffs=signs * elementary_symmetric(r, n))


def char_poly(values: npt.ArrayLike, y: complex) -> ComplexArray:
    """Batched ∏_j (y - values[..., j])."""
    v = np.asarray(values, dtype=np.complex128)
    return np.prod(y - v, axis=-1)
