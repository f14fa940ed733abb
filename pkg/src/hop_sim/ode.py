"""
Freezing-limit (κ=inf) dynamics: RK4 integration of the drift ODE, closed
forms and conservation checks.
"""

import logging
import math
from collections.abc import Sequence

import numpy as np
import numpy.typing as npt

from hop_sim.exceptions import (
    ConfigurationError,
    DomainError,
    OdeSingularityError,
    ParameterError,
    UnsupportedModelError,
)
from hop_sim.generator import jacobi_coeffs
from hop_sim.models import chamber_gaps, drift_field, eigenvalue_elem, has_wall_pole, validate_configuration
from hop_sim.schemas import CoeffTable, ModelSpec, PathSample
from hop_sim.symfunc import elementary_symmetric
from hop_sim.types import ComplexArray, ModelKind, RealArray

logger = logging.getLogger(__name__)

RHO = 0.1
H_MAX = 0.1
MAX_LEVELS = 12
BOUNDARY_EPS = 1e-8
COLLAPSE_RATIO = 0.25
MIN_RELATIVE_STEP = 1e-12
DEFAULT_RECORDS = 101


def _field(model: ModelSpec, x: RealArray) -> RealArray:
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        return drift_field(model, x)


def _rk4(model: ModelSpec, x: RealArray, h: float) -> RealArray:
    k1 = _field(model, x)
    k2 = _field(model, x + 0.5 * h * k1)
    k3 = _field(model, x + 0.5 * h * k2)
    k4 = _field(model, x + h * k3)
    return x + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def _smallest_gap(model: ModelSpec, x: RealArray) -> float:
    gaps = chamber_gaps(model, x)
    return float(gaps.min()) if gaps.size else math.inf


def _integrate_level(
    model: ModelSpec, x0: RealArray, breakpoints: RealArray, rho: float, h_max: float, tau0: float
) -> tuple[RealArray, int]:
    """Graded-mesh RK4: h = min(h_max, ρ(t + τ0)), refined locally on gap collapse."""
    out = np.empty((breakpoints.size, x0.size))
    out[0] = x0
    x = x0.copy()
    t = 0.0
    gap = _smallest_gap(model, x)
    steps = 0
    for index, target in enumerate(breakpoints[1:], start=1):
        while target - t > 1e-15 * max(1.0, target):
            h = min(h_max, rho * (t + tau0), target - t)
            while True:
                candidate = _rk4(model, x, h)
                new_gap = _smallest_gap(model, candidate) if np.all(np.isfinite(candidate)) else -math.inf
                if new_gap > 0 and new_gap >= COLLAPSE_RATIO * gap:
                    break
                h /= 2
                if h < MIN_RELATIVE_STEP * (t + tau0):
                    raise OdeSingularityError(f"step collapsed below {h:.3g} at t={t:.6g}", time=t)
            x = candidate
            gap = new_gap
            t = target if h == target - t else t + h
            steps += 1
        out[index] = x
    return out, steps


def _converged_run(
    model: ModelSpec, x0: RealArray, breakpoints: RealArray, tol: float
) -> tuple[RealArray, dict[str, float]]:
    """Halve the mesh globally until two successive levels agree to ``tol``."""
    tau0 = _smallest_gap(model, x0) ** 2 / 16.0 if math.isfinite(_smallest_gap(model, x0)) else 1.0
    h_top = min(H_MAX, float(breakpoints[-1]) / 8.0)
    previous: RealArray | None = None
    for level in range(MAX_LEVELS):
        scale = 2.0**-level
        try:
            states, steps = _integrate_level(model, x0, breakpoints, RHO * scale, h_top * scale, tau0)
        except OdeSingularityError:
            if level == MAX_LEVELS - 1:
                raise
            logger.warning(f"ODE level {level} hit a gap collapse, refining")
            previous = None
            continue
        if previous is not None:
            change = float(np.max(np.abs(states - previous) / (1.0 + np.abs(previous))))
            if change < tol:
                logger.debug(f"ODE converged at level {level} ({steps} steps, change {change:.3g})")
                return states, {"levels": float(level), "steps": float(steps), "h_max": h_top * scale}
        previous = states
    raise OdeSingularityError(f"no convergence to tol={tol} after {MAX_LEVELS} levels", time=float(breakpoints[-1]))


def boundary_offsets(model: ModelSpec, x0: RealArray, eps: float) -> RealArray | None:
    """Symmetric ε-perturbation that moves a boundary start into the interior.

    Coinciding coordinates are spread with equal spacing ε around their common
    value; a BC cluster at 0 is moved to (mε, ..., ε). Returns None for
    interior starts.
    """
    N = x0.size
    tol = 1e-12 * (1.0 + float(np.max(np.abs(x0))))
    ascending = model.kind is ModelKind.COMPACT_A
    offsets = np.zeros(N)
    start = 0
    while start < N:
        end = start
        while end + 1 < N and abs(x0[end + 1] - x0[end]) < tol:
            end += 1
        size = end - start + 1
        at_wall = model.kind is ModelKind.NONCOMPACT_BC and abs(x0[end]) < tol
        if at_wall and (size > 1 or has_wall_pole(model)):
            offsets[start : end + 1] = eps * np.arange(size, 0, -1)
        elif size > 1:
            spread = eps * (np.arange(size) - (size - 1) / 2.0)
            offsets[start : end + 1] = spread if ascending else -spread
        start = end + 1
    return offsets if np.any(offsets) else None


def integrate_freezing(
    model: ModelSpec,
    x0: npt.ArrayLike,
    t_end: float,
    tol: float = 1e-9,
    times: Sequence[float] | np.ndarray | None = None,
    eps: float = BOUNDARY_EPS,
) -> PathSample:
    """Integrate the κ=inf ODE ẋ = drift(x) from x0.

    Boundary starts are perturbed by ±ε, integrated at ε and ε/2 and
    extrapolated linearly to ε=0; the ε/ε/2 discrepancy is reported in
    ``meta["eps_sensitivity"]``.

    Args:
        model: a model with κ=inf
        x0: start in the closed chamber
        t_end: final time
        tol: agreement required between successive global refinements
        times: recording times, default 101 equally spaced points
        eps: boundary perturbation size

    Returns:
        PathSample: states at the recording times

    Raises:
        UnsupportedModelError: for finite κ
        OdeSingularityError: on gap collapse or failed convergence, with the time
    """
    if not model.is_frozen:
        raise UnsupportedModelError("integrate_freezing needs κ=inf, use the sde module for finite κ")
    start = validate_configuration(model, x0)
    if t_end < 0:
        raise ConfigurationError(f"t_end must be non-negative, got {t_end}")
    grid = np.linspace(0.0, t_end, DEFAULT_RECORDS) if times is None else np.asarray(times, dtype=np.float64)
    if grid.size and (grid.min() < 0 or grid.max() > t_end * (1 + 1e-12)):
        raise ConfigurationError(f"recording times must lie in [0, {t_end}]")
    breakpoints = np.unique(np.concatenate([[0.0, t_end], np.minimum(grid, t_end)]))
    if t_end == 0:
        return PathSample(model=model, times=np.zeros(1), states=start[None, :], dt=0.0)

    offsets = boundary_offsets(model, start, eps)
    if offsets is None:
        states, meta = _converged_run(model, start, breakpoints, tol)
    else:
        coarse, meta = _converged_run(model, start + offsets, breakpoints, tol)
        fine, _ = _converged_run(model, start + offsets / 2.0, breakpoints, tol)
        states = 2.0 * fine - coarse
        states[0] = start
        meta = meta | {"eps": eps, "eps_sensitivity": float(np.max(np.abs(fine - coarse)))}
        logger.info(f"Boundary start ε-ramp sensitivity {meta['eps_sensitivity']:.3g}")
    return PathSample(
        model=model,
        times=breakpoints,
        states=states,
        dt=float(meta["h_max"]),
        meta={"tol": tol} | meta,
    )


def closed_form_noncompact_a(N: int, t: float) -> RealArray:
    """Freezing trajectory of noncompactA from x0 = 0 for N = 2, 3.

    N=2: (arcosh(e^t), -arcosh(e^t)); N=3: (a, 0, -a) with
    a = arcosh((3e^{2t} - 1)/2), so that e^a + e^{-a} + 1 = 3e^{2t}.
    """
    if t < 0:
        raise DomainError(f"closed form defined for t >= 0, got t={t}")
    if N == 2:
        a = math.acosh(math.exp(t))
        return np.array([a, -a])
    if N == 3:
        a = math.acosh((3.0 * math.exp(2.0 * t) - 1.0) / 2.0)
        return np.array([a, 0.0, -a])
    raise ParameterError(f"closed forms exist for N in (2, 3), got N={N}")


def limit_configuration_compact_a(x0: npt.ArrayLike) -> ComplexArray:
    """t→inf limit of e^{ix(t)}: Z_1·(1, ω, ..., ω^{N-1}), Z_1 = e^{i(Σx - π(N-1))/N}."""
    x = np.asarray(x0, dtype=np.float64)
    N = x.size
    z1 = np.exp(1j * (x.sum() - math.pi * (N - 1)) / N)
    return z1 * np.exp(2j * math.pi * np.arange(N) / N)


def _invariant_observables(
    model: ModelSpec, states: RealArray, table: CoeffTable | None
) -> tuple[list[int], np.ndarray]:
    if model.kind is ModelKind.COMPACT_A:
        return list(range(1, model.N + 1)), elementary_symmetric(np.exp(1j * states), model.N)[..., 1:]
    if model.kind is ModelKind.NONCOMPACT_A:
        return list(range(1, model.N + 1)), elementary_symmetric(np.exp(states), model.N)[..., 1:]
    assert table is not None
    ls = list(range(1, table.n_max + 1))
    return ls, np.stack([table.h_values(states, n) for n in ls], axis=-1)


def ode_elem_invariant_check(
    model: ModelSpec,
    x0: npt.ArrayLike,
    times: Sequence[float] | np.ndarray,
    table: CoeffTable | None = None,
    tol: float = 1e-10,
) -> float:
    """Worst relative deviation of observable(x(t)) from e^{λ_l t}·observable(x0).

    The observables are e_l∘e^{i·} (compactA), ẽ_l (noncompactA) and H_{λ(n)}
    (noncompactBC, table computed on demand).
    """
    if not model.is_frozen:
        raise UnsupportedModelError("invariant check runs on the κ=inf ODE")
    grid = np.asarray(times, dtype=np.float64)
    if model.kind is ModelKind.NONCOMPACT_BC and table is None:
        assert model.p is not None and model.q is not None
        table = jacobi_coeffs(model.N, model.p, model.q, model.kappa, model.N)
    path = integrate_freezing(model, x0, float(grid.max()), tol=tol, times=grid)
    ls, values = _invariant_observables(model, path.states, table)
    initial = values[0]
    worst = 0.0
    for t, row in zip(path.times, values, strict=True):
        for column, l in enumerate(ls):
            predicted = np.exp(eigenvalue_elem(model, l) * t) * initial[column]
            deviation = abs(row[column] - predicted) / max(abs(predicted), 1e-12)
            worst = max(worst, float(deviation))
    return worst
