"""
Process families: parameter algebra, chambers, folding, drift fields and eigenvalues.
"""

import logging
import math

import numpy as np
import numpy.typing as npt

from hop_sim.exceptions import (
    ArgumentRangeError,
    DriftSingularityError,
    ParameterError,
    UnsupportedModelError,
)
from hop_sim.schemas import ModelSpec, Partition, bc_constraint_violation
from hop_sim.types import ModelKind, RealArray

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi


def bc_multiplicity(p: float, q: float, kappa: float, N: int) -> tuple[float, float, float]:
    """Map (p, q, κ) to the root multiplicities (k1, k2, k3).

    Args:
        p: parameter p, at least N-1+1/(2κ)
        q: parameter q, at least p
        kappa: finite positive coupling
        N: number of particles

    Returns:
        tuple[float, float, float]: κ(q-p), κ·k_{0,2}, κ

    Raises:
        ParameterError: naming the violated inequality
    """
    if not (kappa > 0 and math.isfinite(kappa)):
        raise ParameterError(f"0 < κ < inf violated: κ={kappa}")
    violation = bc_constraint_violation(N, p, q, kappa)
    if violation:
        raise ParameterError(violation)
    k02 = p - (N - 1) - 1.0 / (2.0 * kappa)
    return kappa * (q - p), kappa * k02, kappa


def bc_parameters(k1: float, k2: float, k3: float, N: int) -> tuple[float, float, float]:
    """Inverse of ``bc_multiplicity``: (k1, k2, k3) to (p, q, κ)."""
    if k1 < 0 or k2 < 0 or k3 <= 0:
        raise ParameterError(f"k1 >= 0, k2 >= 0, k3 > 0 violated: ({k1}, {k2}, {k3})")
    q = N - 1 + (1.0 + 2.0 * k1 + 2.0 * k2) / (2.0 * k3)
    p = N - 1 + (1.0 + 2.0 * k2) / (2.0 * k3)
    return p, q, k3


def weyl_vector(model: ModelSpec) -> RealArray:
    """ρ(κ)_j = κ/2·((q-p) + 2k_{0,2} + 2(N-j)) for j = 1..N."""
    if model.kind is not ModelKind.NONCOMPACT_BC:
        raise UnsupportedModelError("weyl_vector is implemented for noncompactBC")
    if model.is_frozen:
        raise UnsupportedModelError("ρ(κ) diverges in the freezing limit")
    assert model.p is not None and model.q is not None
    j = np.arange(1, model.N + 1, dtype=np.float64)
    return model.kappa / 2.0 * ((model.q - model.p) + 2.0 * model.k02 + 2.0 * (model.N - j))


def _wall_coefficients(model: ModelSpec) -> tuple[float, float]:
    assert model.p is not None and model.q is not None
    return model.q - model.p, 2.0 * model.k02


def _pair_sum(func: np.ufunc, arg: np.ndarray) -> np.ndarray:
    n = arg.shape[-1]
    off = ~np.eye(n, dtype=bool)
    out = np.zeros_like(arg)
    out[..., off] = func(arg[..., off])
    return out.sum(axis=-1)


def _cot(z: np.ndarray) -> np.ndarray:
    return 1.0 / np.tan(z)


def _coth(z: np.ndarray) -> np.ndarray:
    return 1.0 / np.tanh(z)


def drift_field(model: ModelSpec, x: npt.ArrayLike) -> np.ndarray:
    """Drift of the renormalized SDE over the last axis of ``x``.

    No singularity checks; poles surface as inf or nan. The field is
    equivariant under the model's symmetry group, so it may be evaluated on
    unfolded states directly.
    """
    arr = np.asarray(x, dtype=np.float64)
    diff = (arr[..., :, None] - arr[..., None, :]) / 2.0
    if model.kind is ModelKind.COMPACT_A:
        return _pair_sum(_cot, diff)
    if model.kind is ModelKind.NONCOMPACT_A:
        return _pair_sum(_coth, diff)

    total = (arr[..., :, None] + arr[..., None, :]) / 2.0
    out = _pair_sum(_coth, diff) + _pair_sum(_coth, total)
    c_half, c_full = _wall_coefficients(model)
    # zero coefficients must not meet a pole at the wall
    if c_half != 0:
        out = out + c_half * _coth(arr / 2.0)
    if c_full != 0:
        out = out + c_full * _coth(arr)
    return out


def has_wall_pole(model: ModelSpec) -> bool:
    if model.kind is not ModelKind.NONCOMPACT_BC:
        return False
    c_half, c_full = _wall_coefficients(model)
    return c_half != 0 or c_full != 0


def chamber_gaps(model: ModelSpec, y: npt.ArrayLike) -> np.ndarray:
    """Distances to the chamber walls for chamber-ordered states.

    CompactA includes the wrap-around gap y_1 + 2π - y_N. NoncompactBC
    includes y_N only when the drift has a pole at the wall.
    """
    arr = np.asarray(y, dtype=np.float64)
    if model.kind is ModelKind.COMPACT_A:
        inner = arr[..., 1:] - arr[..., :-1]
        wrap = arr[..., :1] + TWO_PI - arr[..., -1:]
        return np.concatenate([inner, wrap], axis=-1)
    inner = arr[..., :-1] - arr[..., 1:]
    if has_wall_pole(model):
        return np.concatenate([inner, arr[..., -1:]], axis=-1)
    return inner


def fold_states(model: ModelSpec, x: npt.ArrayLike) -> RealArray:
    """Batched chamber fold over the last axis."""
    arr = np.asarray(x, dtype=np.float64)
    if model.kind is ModelKind.NONCOMPACT_A:
        return -np.sort(-arr, axis=-1)
    if model.kind is ModelKind.NONCOMPACT_BC:
        return -np.sort(-np.abs(arr), axis=-1)

    # affine Weyl group W ⋉ 2πQ^∨: the coordinate sum is preserved exactly
    n = arr.shape[-1]
    winding = np.floor(arr / TWO_PI)
    residues = np.sort(arr - TWO_PI * winding, axis=-1)
    total = winding.sum(axis=-1).astype(np.int64)
    rotation = np.mod(total, n)
    lift = (total - rotation) // n
    index = np.arange(n) + rotation[..., None]
    wrapped = index >= n
    rotated = np.take_along_axis(residues, np.mod(index, n), axis=-1)
    return rotated + TWO_PI * (wrapped + lift[..., None])


def chamber_fold(model: ModelSpec, x: npt.ArrayLike) -> RealArray:
    return fold_states(model, np.asarray(x, dtype=np.float64))


def is_in_chamber(model: ModelSpec, x: npt.ArrayLike, atol: float = 1e-12) -> bool:
    arr = np.asarray(x, dtype=np.float64)
    if model.kind is ModelKind.COMPACT_A:
        ordered = bool(np.all(np.diff(arr) >= -atol))
        return ordered and bool(arr[-1] <= arr[0] + TWO_PI + atol)
    ordered = bool(np.all(np.diff(arr) <= atol))
    if model.kind is ModelKind.NONCOMPACT_BC:
        return ordered and bool(arr[-1] >= -atol)
    return ordered


def validate_configuration(model: ModelSpec, x: npt.ArrayLike) -> RealArray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.shape != (model.N,):
        raise ParameterError(f"configuration needs {model.N} coordinates, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ParameterError("configuration must be finite")
    if not is_in_chamber(model, arr):
        raise ParameterError(f"{arr.tolist()} lies outside the {model.kind} chamber")
    return arr


def min_gap(model: ModelSpec, x: npt.ArrayLike) -> float:
    return float(np.min(chamber_gaps(model, fold_states(model, x))))


def drift(model: ModelSpec, x: npt.ArrayLike, separation_floor: float = 1e-9) -> RealArray:
    """Drift vector at an interior configuration.

    Raises:
        DriftSingularityError: if coordinates are closer than ``separation_floor``
    """
    arr = np.asarray(x, dtype=np.float64)
    gap = min_gap(model, arr)
    if gap < separation_floor:
        raise DriftSingularityError(f"minimal gap {gap:.3g} below separation floor {separation_floor:.3g}")
    with np.errstate(divide="ignore", invalid="ignore"):
        out = drift_field(model, arr)
    if not np.all(np.isfinite(out)):
        raise DriftSingularityError(f"drift not finite at {arr.tolist()}")
    return out


def eigenvalue_elem(model: ModelSpec, l: int) -> float:
    """Eigenvalue of the l-th elementary eigenfunction under the renormalized generator."""
    if not 0 <= l <= model.N:
        raise ArgumentRangeError(f"l={l} outside 0..{model.N}")
    coupling = 0.0 if model.is_frozen else 1.0 / model.kappa
    if model.kind is ModelKind.COMPACT_A:
        return -l * (coupling + model.N - l)
    if model.kind is ModelKind.NONCOMPACT_A:
        return l * (coupling + model.N - l)
    assert model.p is not None and model.q is not None
    return l * (model.p + model.q - l + 1.0)


def eigenvalue_bc_partition(model: ModelSpec, partition: Partition) -> float:
    """r_λ = Σ_j λ_j((λ_j-1)/κ + p + q + 2 - 2j)."""
    if model.kind is not ModelKind.NONCOMPACT_BC:
        raise UnsupportedModelError("eigenvalue_bc_partition requires noncompactBC")
    parts = partition.padded(model.N)
    if model.is_frozen and any(part > 1 for part in parts):
        raise UnsupportedModelError("κ=inf supports only partitions 1^n")
    assert model.p is not None and model.q is not None
    coupling = 0.0 if model.is_frozen else 1.0 / model.kappa
    return float(
        sum(lam * ((lam - 1) * coupling + model.p + model.q + 2 - 2 * j) for j, lam in enumerate(parts, start=1))
    )


def eigenvalue_jack_compact(model: ModelSpec, partition: Partition) -> float:
    """-Σ_j λ_j(λ_j/k + N + 1 - 2j) for the compact type-A Jack eigenfunction."""
    if model.kind is not ModelKind.COMPACT_A:
        raise UnsupportedModelError("eigenvalue_jack_compact requires compactA")
    coupling = 0.0 if model.is_frozen else 1.0 / model.kappa
    parts = partition.padded(model.N)
    return float(-sum(lam * (lam * coupling + model.N + 1 - 2 * j) for j, lam in enumerate(parts, start=1)))


def hypergeometric_eigenvalue(model: ModelSpec, spectral: npt.ArrayLike) -> float:
    """(|λ|² - |ρ(κ)|²)/κ for the BC hypergeometric function with spectral parameter λ."""
    rho = weyl_vector(model)
    lam = np.asarray(spectral, dtype=np.float64)
    return float((lam @ lam - rho @ rho) / model.kappa)


def equispaced_configuration(model: ModelSpec) -> RealArray:
    """Zero-sum equally spaced start (spacing 2π/N for compactA)."""
    N = model.N
    j = np.arange(N, dtype=np.float64)
    if model.kind is ModelKind.COMPACT_A:
        return TWO_PI * j / N - math.pi * (N - 1) / N
    if model.kind is ModelKind.NONCOMPACT_A:
        return (N - 1) / 2.0 - j
    return N - j


def zero_configuration(model: ModelSpec) -> RealArray:
    return np.zeros(model.N)
