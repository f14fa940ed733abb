"""
Renormalized generators: finite-difference application, eigenfunction
residuals and the BC Jacobi coefficient table.
"""

import logging
from collections.abc import Callable, Sequence
from math import comb

import numpy as np
import numpy.typing as npt
from scipy.linalg import solve_triangular

from hop_sim.exceptions import ConditioningError, ParameterError, StepSizeError
from hop_sim.models import drift, eigenvalue_elem, min_gap
from hop_sim.schemas import CoeffTable, ModelSpec
from hop_sim.symfunc import elem_sym, elementary_symmetric, trig_elem_sym
from hop_sim.types import ModelKind, RealArray

logger = logging.getLogger(__name__)

ScalarFunction = Callable[[RealArray], complex | float]

JACOBI_SEED = 20240531
MAX_RESAMPLES = 8
CONDITION_LIMIT = 1e12


def generator_action(
    model: ModelSpec, x: RealArray, gradient: np.ndarray, laplacian: complex | float
) -> complex | float:
    """Assemble (1/κ)Δf + drift·∇f from precomputed derivatives."""
    b = drift(model, x)
    transport = complex(np.dot(b, gradient))
    if model.is_frozen:
        return _as_scalar(transport)
    return _as_scalar(laplacian / model.kappa + transport)


def _as_scalar(value: complex) -> complex | float:
    value = complex(value)
    return value.real if value.imag == 0 else value


def apply_generator(model: ModelSpec, f: ScalarFunction, x: npt.ArrayLike, h: float = 1e-3) -> complex | float:
    """Apply the renormalized generator to ``f`` by central differences.

    Args:
        model: process family and parameters
        f: scalar function of N reals, real or complex valued
        x: interior configuration
        h: difference step

    Returns:
        complex | float: (1/κ)Δ_h f(x) + drift(x)·∇_h f(x), Laplacian dropped at κ=inf

    Raises:
        StepSizeError: if the configuration's smallest gap is not above 10h
    """
    if h <= 0:
        raise StepSizeError(f"step must be positive, got {h}")
    point = np.asarray(x, dtype=np.float64)
    gap = min_gap(model, point)
    if gap <= 10 * h:
        raise StepSizeError(f"minimal gap {gap:.3g} needs h < {gap / 10:.3g}, got h={h}")

    center = complex(f(point))
    gradient = np.zeros(model.N, dtype=np.complex128)
    laplacian = 0j
    for j in range(model.N):
        shift = np.zeros(model.N)
        shift[j] = h
        forward = complex(f(point + shift))
        backward = complex(f(point - shift))
        gradient[j] = (forward - backward) / (2 * h)
        laplacian += (forward - 2 * center + backward) / (h * h)
    return generator_action(model, point, gradient, laplacian)


def eigenfunction(model: ModelSpec, l: int, table: CoeffTable | None = None) -> ScalarFunction:
    """The model's l-th simultaneous eigenfunction."""
    if model.kind is ModelKind.COMPACT_A:
        return lambda x: elem_sym(np.exp(1j * x), l)
    if model.kind is ModelKind.NONCOMPACT_A:
        return lambda x: trig_elem_sym(x, l)
    if table is None or table.n_max < l:
        raise ParameterError(f"noncompactBC eigenfunction {l} needs a CoeffTable with n_max >= {l}")
    return lambda x: table.h_value(l, x)


def eigen_residual(
    model: ModelSpec,
    l: int,
    grid: Sequence[npt.ArrayLike],
    h: float = 1e-3,
    table: CoeffTable | None = None,
) -> float:
    """Worst relative eigen-relation defect of the l-th eigenfunction over ``grid``."""
    f = eigenfunction(model, l, table)
    eigenvalue = eigenvalue_elem(model, l)
    worst = 0.0
    for point in grid:
        x = np.asarray(point, dtype=np.float64)
        value = complex(f(x))
        defect = abs(complex(apply_generator(model, f, x, h)) - eigenvalue * value) / (1 + abs(value))
        worst = max(worst, defect)
    return worst


def random_interior_points(
    model: ModelSpec,
    count: int,
    seed: int,
    min_gap: float = 0.3,
    low: float | None = None,
    high: float | None = None,
) -> RealArray:
    """Draw chamber-ordered points whose wall distances are all at least ``min_gap``.

    Defaults: [0, 2π) for compactA, [-2, 2] for noncompactA and [0.5, 3]
    for noncompactBC, widened when N gaps do not fit.
    """
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    N = model.N
    defaults = {
        ModelKind.COMPACT_A: (0.0, 2 * np.pi - min_gap),
        ModelKind.NONCOMPACT_A: (-2.0, 2.0),
        ModelKind.NONCOMPACT_BC: (0.5, 3.0),
    }
    lo, hi = defaults[model.kind]
    lo = lo if low is None else low
    hi = hi if high is None else high
    span = max(hi - lo - min_gap * (N - 1), min_gap)

    slack = np.sort(rng.uniform(0.0, span, size=(count, N)), axis=1)
    ladder = min_gap * np.arange(N, dtype=np.float64)
    ascending = lo + slack + ladder
    if model.kind is ModelKind.COMPACT_A:
        return ascending
    return ascending[:, ::-1].copy()


def _cosh_basis_derivatives(x: RealArray, l: int) -> tuple[float, RealArray, float]:
    """Value, gradient and Laplacian of e_l(cosh x) in closed form.

    e_l is affine in each argument, so ∂_j = sinh x_j·e_{l-1}(cosh x without j)
    and ∂_j² = cosh x_j·e_{l-1}(cosh x without j).
    """
    c = np.cosh(x)
    value = float(elementary_symmetric(c, l)[l])
    if l == 0:
        return value, np.zeros_like(x), 0.0
    reduced = np.array([elementary_symmetric(np.delete(c, j), l - 1)[l - 1] for j in range(x.size)])
    gradient = np.sinh(x) * reduced
    laplacian = float(np.dot(c, reduced))
    return value, gradient, laplacian


def _basis_action(model: ModelSpec, x: RealArray, l: int, method: str, h: float) -> tuple[float, float]:
    if method == "exact":
        value, gradient, laplacian = _cosh_basis_derivatives(x, l)
        return value, float(np.real(generator_action(model, x, gradient, laplacian)))
    f = eigenfunction_cosh_basis(l)
    return float(np.real(f(x))), float(np.real(apply_generator(model, f, x, h)))


def eigenfunction_cosh_basis(l: int) -> ScalarFunction:
    return lambda x: float(elementary_symmetric(np.cosh(x), l)[l])


def generator_matrix(
    model: ModelSpec, n_max: int, seed: int = JACOBI_SEED, method: str = "exact", h: float = 1e-3
) -> RealArray:
    """Matrix M with L(e_l∘cosh) = Σ_m M[l][m]·e_m∘cosh, 0 ≤ l, m ≤ n_max.

    Solved from n_max + 1 generic sample points; resampled when the basis
    system is ill-conditioned.

    Raises:
        ConditioningError: if every resample stays above the condition limit
    """
    if model.kind is not ModelKind.NONCOMPACT_BC:
        raise ParameterError("generator_matrix is defined on the noncompactBC cosh basis")
    size = n_max + 1
    condition = float("inf")
    for attempt in range(MAX_RESAMPLES):
        points = random_interior_points(model, size, seed + attempt, min_gap=0.5)
        basis = np.empty((size, size))
        action = np.empty((size, size))
        for s, point in enumerate(points):
            for l in range(size):
                basis[s, l], action[s, l] = _basis_action(model, point, l, method, h)
        condition = float(np.linalg.cond(basis))
        if condition < CONDITION_LIMIT:
            return np.linalg.solve(basis, action).T
        logger.warning(f"Sample system condition {condition:.3g} on attempt {attempt}, resampling")
    raise ConditioningError(
        f"basis system stays ill-conditioned after {MAX_RESAMPLES} samples (cond={condition:.3g})", condition
    )


def jacobi_coeffs(
    N: int,
    p: float,
    q: float,
    kappa: float,
    n_max: int,
    seed: int = JACOBI_SEED,
    method: str = "exact",
    h: float = 1e-3,
) -> CoeffTable:
    """Coefficients c[n][l] of H_{λ(n)} = Σ_l c[n][l]·e_l∘cosh.

    Args:
        N: number of particles
        p: BC parameter p
        q: BC parameter q
        kappa: coupling used to assemble the generator (result does not depend on it)
        n_max: highest row, at most N
        seed: seed of the generic sample points
        method: ``exact`` closed-form basis derivatives or ``fd`` central differences
        h: difference step for ``fd``

    Returns:
        CoeffTable: rows normalized by Σ_l c[n][l]·binomial(N, l) = 1

    Raises:
        ParameterError: for inadmissible parameters or n_max > N
        ConditioningError: if the sample system or the eigenvalue gaps degenerate
    """
    model = ModelSpec.noncompact_bc(N, p, q, kappa)
    if not 0 <= n_max <= N:
        raise ParameterError(f"0 <= n_max <= N violated: n_max={n_max}, N={N}")
    matrix = generator_matrix(model, n_max, seed, method, h)

    scale = max(float(np.abs(matrix).max()), 1.0)
    upper = float(np.abs(np.triu(matrix, 1)).max()) if n_max else 0.0
    if upper > 1e-6 * scale:
        logger.warning(f"Generator matrix upper part {upper:.3g} exceeds tolerance relative to {scale:.3g}")
    diagonal = np.diag(matrix)

    rows: list[tuple[float, ...]] = []
    for n in range(n_max + 1):
        row = np.zeros(n + 1)
        row[n] = 1.0
        for m in range(n - 1, -1, -1):
            gap = diagonal[n] - diagonal[m]
            if abs(gap) < 1e-12 * scale:
                raise ConditioningError(f"eigenvalues r_{n} and r_{m} coincide", float("inf"))
            row[m] = float(np.dot(row[m + 1 : n + 1], matrix[m + 1 : n + 1, m])) / gap
        norm = sum(row[l] * comb(N, l) for l in range(n + 1))
        rows.append(tuple(float(v) for v in row / norm))

    logger.debug(f"Jacobi table N={N} p={p} q={q} n_max={n_max} built at κ={kappa}")
    return CoeffTable(N=N, p=p, q=q, n_max=n_max, c=tuple(rows))


def solve_a(table: CoeffTable, x: npt.ArrayLike) -> RealArray:
    """Coefficients a[n][l] with E e_n(cosh X_t) = Σ_l a[n][l]·e^{r_l t} from start x."""
    coeffs = table.matrix()
    assert np.all(np.diag(coeffs) != 0)
    inverse = solve_triangular(coeffs, np.eye(table.n_max + 1), lower=True)
    start = np.asarray(x, dtype=np.float64)
    h_start = np.array([table.h_value(l, start) for l in range(table.n_max + 1)])
    return np.tril(inverse * h_start[None, :])


def expected_cosh_elem(table: CoeffTable, x: npt.ArrayLike, t: float) -> RealArray:
    """E e_n(cosh X_t) for n = 0..n_max, independent of κ."""
    a = solve_a(table, x)
    return a @ np.exp(table.eigenvalues() * t)
