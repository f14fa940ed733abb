"""
Verification harness: Monte Carlo and ODE checks of the martingale,
center-of-gravity, stationary and determinantal identities.
"""

import dataclasses
import itertools
import logging
import math
from collections.abc import Callable, Sequence

import numpy as np
import numpy.typing as npt

from hop_sim.exceptions import ConfigurationError, ParameterError, UnsupportedModelError
from hop_sim.generator import (
    JACOBI_SEED,
    eigen_residual,
    expected_cosh_elem,
    generator_matrix,
    jacobi_coeffs,
    random_interior_points,
)
from hop_sim.models import eigenvalue_elem, equispaced_configuration, validate_configuration, zero_configuration
from hop_sim.observables import (
    CenterPhase,
    CharPoly,
    CircleElementary,
    CoshElementary,
    ExpElementary,
    JacobiPolynomial,
    Observable,
    SumDisplacementSquared,
)
from hop_sim.ode import (
    closed_form_noncompact_a,
    integrate_freezing,
    limit_configuration_compact_a,
    ode_elem_invariant_check,
)
from hop_sim.schemas import (
    CheckReport,
    CheckRequest,
    CheckRow,
    McEstimate,
    ModelSpec,
    MonteCarloParams,
    PathSample,
)
from hop_sim.services.ensemble_service import EnsembleService
from hop_sim.settings import Settings
from hop_sim.symfunc import PolyCoeffs, char_poly, elementary_symmetric, poly_from_roots
from hop_sim.types import INFINITY, ModelKind, RealArray
from hop_sim.utils import correlation, joint_difference, mc_estimate

logger = logging.getLogger(__name__)

DEFAULT_TIMES = (0.1, 0.2, 0.4)
DEFAULT_Y = (0.5, 1.0, 2.0)
# closed forms are matched to this absolute accuracy
CLOSED_FORM_ACCURACY = 1e-6
EPS_SENSITIVITY_LIMIT = 1e-7
ORACLE_ACCURACY = 1e-12
RESIDUAL_LIMIT = 1e-4
# accepted band around the second-order ratio 4
CONVERGENCE_BAND = 0.5
CONSERVATION_TOL = 1e-10
CONSERVATION_LIMIT = 1e-6
CONSERVATION_LIMIT_BC = 1e-5
COEFF_AGREEMENT = 1e-8
DIAGONAL_AGREEMENT = 1e-6


def cog_decompose(path: PathSample) -> tuple[PathSample, RealArray]:
    """Split a type-A path into its zero-sum part and its center of gravity.

    Returns:
        tuple: (diff path with coordinate sums 0, cg[i] = coordinate mean at times[i])
    """
    if not path.model.kind.is_type_a:
        raise UnsupportedModelError("center-of-gravity decomposition applies to type-A models")
    cg = path.states.mean(axis=1)
    diff = path.model_copy(update={"states": path.states - cg[:, None]})
    return diff, cg


def diff_exponent(model: ModelSpec, l: int) -> float:
    """Rate of E e_l(diff) in the compact (negative) or noncompact (positive) case.

    l(N-l)(1 + 1/(Nk)): the eigenvalue of e_l less the center-of-gravity
    factor e^{∓l²t/(Nk)}.
    """
    coupling = 0.0 if model.is_frozen else 1.0 / (model.N * model.kappa)
    rate = l * (model.N - l) * (1.0 + coupling)
    return -rate if model.kind is ModelKind.COMPACT_A else rate


def _diff_roots(model: ModelSpec, x: np.ndarray) -> np.ndarray:
    centered = x - x.mean(axis=-1, keepdims=True)
    return np.exp(1j * centered) if model.kind is ModelKind.COMPACT_A else np.exp(centered).astype(np.complex128)


def expected_diff_elementary(model: ModelSpec, x0: npt.ArrayLike, t: float) -> np.ndarray:
    """E e_l of the diff process at time t for l = 0..N."""
    roots = _diff_roots(model, np.asarray(x0, dtype=np.float64))
    start = elementary_symmetric(roots, model.N)
    rates = np.array([diff_exponent(model, l) for l in range(model.N + 1)])
    return np.exp(rates * t) * start


def diff_polynomial_coefficients(model: ModelSpec, x0: npt.ArrayLike, t: float) -> PolyCoeffs:
    """Monic y ↦ E∏(y - g(diff_j(t))) = Σ_l y^{N-l}(-1)^l E e_l(g(diff(t))), g = e^{i·} or exp."""
    signs = (-1.0) ** np.arange(model.N + 1)
    return PolyCoeffs(degree=model.N, coeffs=signs * expected_diff_elementary(model, x0, t))


def diff_polynomial(model: ModelSpec, x0: npt.ArrayLike, t: float, y: complex) -> complex:
    return complex(diff_polynomial_coefficients(model, x0, t).evaluate(y))


def _exact(value: complex, stderr: float) -> McEstimate:
    return McEstimate(mean_re=value.real, mean_im=value.imag, stderr=stderr, n_paths=0)


class VerificationService:
    def __init__(self, ensemble: EnsembleService, settings: Settings | None = None):
        self.ensemble = ensemble
        self.settings = settings or Settings()

    def _deterministic_stderr(self, value: complex) -> float:
        return 10.0 * self.settings.ode_tol * (1.0 + abs(value))

    def _require_finite(self, model: ModelSpec) -> None:
        if model.is_frozen:
            raise UnsupportedModelError("Monte Carlo checks need finite κ")

    def _estimates(
        self,
        model: ModelSpec,
        x0: np.ndarray,
        mc: MonteCarloParams,
        observables: Sequence[Observable],
        times: Sequence[float],
    ) -> list[list[McEstimate]]:
        cfg = mc.sde_config(max(times))
        return self.ensemble.simulate_ensemble(model, x0, cfg, mc.n_paths, observables, times)

    def check_martingale(
        self, model: ModelSpec, x0: npt.ArrayLike, ls: Sequence[int], times: Sequence[float], mc: MonteCarloParams
    ) -> CheckReport:
        """E f_l(X_t) against e^{λ_l t}·f_l(x0) for the model's eigenfamily f_l.

        The family is e_l∘e^{i·} (compactA), ẽ_l (noncompactA) or H_{λ(l)}
        (noncompactBC), so the rescaled observables are martingales.
        """
        self._require_finite(model)
        start = validate_configuration(model, x0)
        observables: list[Observable]
        if model.kind is ModelKind.COMPACT_A:
            observables = [CircleElementary(l) for l in ls]
            name = "compact-martingale"
        elif model.kind is ModelKind.NONCOMPACT_A:
            observables = [ExpElementary(l) for l in ls]
            name = "noncompact-martingale"
        else:
            assert model.p is not None and model.q is not None
            table = jacobi_coeffs(model.N, model.p, model.q, model.kappa, max(ls))
            observables = [JacobiPolynomial(l, table.c[l]) for l in ls]
            name = "bc-martingale"

        estimates = self._estimates(model, start, mc, observables, times)
        rows = []
        for observable, l, per_time in zip(observables, ls, estimates, strict=True):
            initial = complex(observable(start[None, :])[0])
            for t, estimate in zip(times, per_time, strict=True):
                predicted = math.exp(eigenvalue_elem(model, l) * t) * initial
                rows.append(CheckRow.from_estimate(observable.label, t, predicted, estimate))
        return CheckReport.build(name, CHECKS[name].description, rows, {"n_paths": mc.n_paths, "dt": mc.dt})

    def check_diff_martingale(
        self,
        model: ModelSpec,
        x0: npt.ArrayLike,
        ls: Sequence[int],
        times: Sequence[float],
        y_values: Sequence[float],
        mc: MonteCarloParams,
        name: str = "diff-martingale",
    ) -> CheckReport:
        """E e_l of the zero-sum part against e^{∓l(N-l)(1+1/(Nk))t}·e_l(start), plus its polynomial at y."""
        self._require_finite(model)
        start = validate_configuration(model, x0)
        if not model.kind.is_type_a:
            raise UnsupportedModelError("diff process is defined for type-A models")
        if abs(start.sum()) > 1e-12 * (1.0 + np.abs(start).max()):
            raise ParameterError(f"start must have zero coordinate sum, got {start.sum():.3g}")

        compact = model.kind is ModelKind.COMPACT_A
        transform = "circle" if compact else "exp"
        elem_obs: list[Observable] = [
            CircleElementary(l, centered=True) if compact else ExpElementary(l, centered=True) for l in ls
        ]
        poly_obs: list[Observable] = [CharPoly(y, transform, centered=True) for y in y_values]
        estimates = self._estimates(model, start, mc, elem_obs + poly_obs, times)

        rows = []
        for i, l in enumerate(ls):
            for r, t in enumerate(times):
                predicted = complex(expected_diff_elementary(model, start, t)[l])
                rows.append(CheckRow.from_estimate(elem_obs[i].label, t, predicted, estimates[i][r]))
        for j, y in enumerate(y_values):
            for r, t in enumerate(times):
                predicted = diff_polynomial(model, start, t, y)
                rows.append(CheckRow.from_estimate(poly_obs[j].label, t, predicted, estimates[len(ls) + j][r]))
        return CheckReport.build(name, CHECKS[name].description, rows, {"n_paths": mc.n_paths, "dt": mc.dt})

    def check_center_of_gravity(
        self, model: ModelSpec, x0: npt.ArrayLike, ls: Sequence[int], times: Sequence[float], mc: MonteCarloParams
    ) -> CheckReport:
        """Center-of-gravity Brownian identities and its independence from the zero-sum part.

        Rows: E e^{-il·cg_t} = e^{-tl²/(Nk) - il·cg_0}; E(Σx_t - Σx_0)² = 2Nt/κ;
        |corr(e_1(diff), e^{i·cg})| within 3/sqrt(n_paths).
        """
        self._require_finite(model)
        if not model.kind.is_type_a:
            raise UnsupportedModelError("center of gravity is defined for type-A models")
        start = validate_configuration(model, x0)
        cg0 = float(start.mean())
        compact = model.kind is ModelKind.COMPACT_A
        observables: list[Observable] = [CenterPhase(l) for l in ls]
        observables += [
            SumDisplacementSquared(float(start.sum())),
            CircleElementary(1, centered=True) if compact else ExpElementary(1, centered=True),
            CenterPhase(1, sign=1),
        ]
        cfg = mc.sde_config(max(times))
        samples, capped = self.ensemble.sample(model, start, cfg, mc.n_paths, observables, times)

        rows = []
        N, kappa = model.N, model.kappa
        for i, l in enumerate(ls):
            for r, t in enumerate(times):
                predicted = complex(math.exp(-t * l * l / (N * kappa)) * np.exp(-1j * l * cg0))
                estimate = mc_estimate(samples[i, r], capped)
                rows.append(CheckRow.from_estimate(observables[i].label, t, predicted, estimate))
        base = len(ls)
        for r, t in enumerate(times):
            spread = mc_estimate(samples[base, r], capped)
            rows.append(CheckRow.from_estimate(observables[base].label, t, 2.0 * N * t / kappa, spread))
            corr = correlation(samples[base + 1, r], samples[base + 2, r])
            estimate = McEstimate(
                mean_re=corr, stderr=1.0 / math.sqrt(mc.n_paths), n_paths=mc.n_paths, capped_pieces=capped
            )
            rows.append(CheckRow.from_estimate("corr(diff, cg)", t, 0.0, estimate))
        name = "center-of-gravity"
        return CheckReport.build(name, CHECKS[name].description, rows, {"n_paths": mc.n_paths, "dt": mc.dt})

    def stationary_transient(self, model: ModelSpec, y_values: Sequence[float], t_long: float, special: bool) -> float:
        """Bound on |E∏(y - Z) - stationary value| after t_long from any start."""
        N = model.N
        worst = 0.0
        for y in y_values:
            bound = 0.0
            for l in range(1, N if special else N + 1):
                rate = -diff_exponent(model, l) if special else -eigenvalue_elem(model, l)
                bound += abs(y) ** (N - l) * math.comb(N, l) * math.exp(-rate * t_long)
            worst = max(worst, bound)
        return worst

    def check_stationary_compact_a(
        self,
        model: ModelSpec,
        y_values: Sequence[float],
        t_long: float,
        mc: MonteCarloParams,
        x0: npt.ArrayLike | None = None,
        special_unitary: bool = False,
    ) -> CheckReport:
        """Long-run E∏(y - Z_j) against the stationary value.

        The circular ensemble gives y^N. The zero-sum (special unitary)
        variant has ∏Z_j = 1, which gives y^N + (-1)^N.

        Raises:
            ConfigurationError: if the transient cannot be pushed under the bias budget
        """
        self._require_finite(model)
        if model.kind is not ModelKind.COMPACT_A:
            raise UnsupportedModelError("stationary check applies to compactA")
        budget = self.settings.bias_budget
        transient = self.stationary_transient(model, y_values, t_long, special_unitary)
        if transient > budget:
            raise ConfigurationError(
                f"t_long={t_long} leaves a transient {transient:.3g} above the budget {budget:.3g}"
            )
        if t_long / mc.dt > 1e8:
            raise ConfigurationError(f"t_long={t_long} needs more than 1e8 steps at dt={mc.dt}")

        start = equispaced_configuration(model) if x0 is None else validate_configuration(model, x0)
        observables: list[Observable] = [CharPoly(y, "circle", centered=special_unitary) for y in y_values]
        estimates = self._estimates(model, start, mc, observables, [t_long])
        N = model.N
        rows = []
        for observable, y, per_time in zip(observables, y_values, estimates, strict=True):
            stationary = y**N + ((-1) ** N if special_unitary else 0)
            rows.append(CheckRow.from_estimate(observable.label, t_long, stationary, per_time[0], bias_budget=budget))

        name = "stationary-special-unitary" if special_unitary else "stationary-unitary"
        group = ("SU(N)" if special_unitary else "U(N)") if model.kappa == 1 else "circular ensemble"
        notes: dict[str, str | float | int] = {
            "ensemble": group,
            "t_long": t_long,
            "bias_budget": budget,
            "transient_bound": transient,
            "n_paths": mc.n_paths,
        }
        return CheckReport.build(name, CHECKS[name].description, rows, notes)

    def detpoly_noncompact_a(
        self, model: ModelSpec, x0: npt.ArrayLike, t: float, y_values: Sequence[float], mc: MonteCarloParams
    ) -> CheckReport:
        """P_{t,N,k,x}(y) against E∏(y - e^{diff_j(t)}); κ=inf uses the ODE and compares roots too."""
        if model.kind is not ModelKind.NONCOMPACT_A:
            raise UnsupportedModelError("detpoly applies to noncompactA")
        start = validate_configuration(model, x0)
        if abs(start.sum()) > 1e-12 * (1.0 + np.abs(start).max()):
            raise ParameterError(f"start must have zero coordinate sum, got {start.sum():.3g}")

        rows = []
        notes: dict[str, str | float | int] = {"t": t}
        if model.is_frozen:
            path = integrate_freezing(model, start, t, tol=self.settings.ode_tol, times=[t])
            roots = _diff_roots(model, path.final_state)
            for y in y_values:
                value = complex(np.prod(y - roots))
                estimate = _exact(value, self._deterministic_stderr(value))
                rows.append(CheckRow.from_estimate(f"P(y={y})", t, diff_polynomial(model, start, t, y), estimate))
            predicted_roots = np.sort_complex(diff_polynomial_coefficients(model, start, t).roots())
            for j, (want, got) in enumerate(zip(predicted_roots, np.sort_complex(roots), strict=True)):
                estimate = _exact(complex(got), self._deterministic_stderr(got))
                rows.append(CheckRow.from_estimate(f"root {j}", t, complex(want), estimate))
            notes |= {"eps_sensitivity": path.meta.get("eps_sensitivity", 0.0)}
        else:
            observables: list[Observable] = [CharPoly(y, "exp", centered=True) for y in y_values]
            estimates = self._estimates(model, start, mc, observables, [t])
            for observable, y, per_time in zip(observables, y_values, estimates, strict=True):
                predicted = diff_polynomial(model, start, t, y)
                rows.append(CheckRow.from_estimate(observable.label, t, predicted, per_time[0]))
            notes |= {"n_paths": mc.n_paths, "dt": mc.dt}
        name = "noncompact-detpoly"
        return CheckReport.build(name, CHECKS[name].description, rows, notes)

    def _bc_oracle(self, model: ModelSpec, start: np.ndarray, t: float) -> RealArray:
        path = integrate_freezing(model.with_kappa(INFINITY), start, t, tol=self.settings.ode_tol, times=[t])
        return path.final_state

    def determinant_polynomial(self, model: ModelSpec, x0: npt.ArrayLike, t: float) -> PolyCoeffs:
        """P_{t,N,k,x} for type A (closed form), D_{t,x} = ∏(y - cosh x_∞(t)) for noncompactBC (ODE)."""
        start = validate_configuration(model, x0)
        if model.kind.is_type_a:
            return diff_polynomial_coefficients(model, start, t)
        return poly_from_roots(np.cosh(self._bc_oracle(model, start, t)))

    def check_bc_determinantal(
        self, model: ModelSpec, x0: npt.ArrayLike, t: float, y_values: Sequence[float], mc: MonteCarloParams
    ) -> CheckReport:
        """E∏(y - cosh X_{t,κ}) against ∏(y - cosh x_∞(t)), with e_n(cosh) cross-checks through solve_a."""
        self._require_finite(model)
        if model.kind is not ModelKind.NONCOMPACT_BC:
            raise UnsupportedModelError("determinantal check applies to noncompactBC")
        start = validate_configuration(model, x0)
        assert model.p is not None and model.q is not None
        frozen = self._bc_oracle(model, start, t)
        polynomial = poly_from_roots(np.cosh(frozen))
        table = jacobi_coeffs(model.N, model.p, model.q, model.kappa, model.N)
        expansion = expected_cosh_elem(table, start, t)

        observables: list[Observable] = [CharPoly(y, "cosh") for y in y_values]
        observables += [CoshElementary(n) for n in range(1, model.N + 1)]
        estimates = self._estimates(model, start, mc, observables, [t])

        rows = []
        for i, y in enumerate(y_values):
            predicted = complex(polynomial.evaluate(y))
            rows.append(CheckRow.from_estimate(observables[i].label, t, predicted, estimates[i][0]))
        frozen_elem = elementary_symmetric(np.cosh(frozen), model.N)
        for n in range(1, model.N + 1):
            estimate = estimates[len(y_values) + n - 1][0]
            rows.append(CheckRow.from_estimate(f"e{n}(cosh(x)) vs expansion", t, float(expansion[n]), estimate))
            ode_value = complex(frozen_elem[n])
            rows.append(
                CheckRow.from_estimate(
                    f"e{n}(cosh(x_inf)) vs expansion",
                    t,
                    float(expansion[n]),
                    _exact(ode_value, self._deterministic_stderr(ode_value)),
                )
            )
        name = "bc-determinantal"
        notes: dict[str, str | float | int] = {"n_paths": mc.n_paths, "dt": mc.dt, "kappa": model.kappa}
        return CheckReport.build(name, CHECKS[name].description, rows, notes)

    def check_kappa_independence(
        self,
        model: ModelSpec,
        x0: npt.ArrayLike,
        t: float,
        y_values: Sequence[float],
        kappa_alt: float,
        mc: MonteCarloParams,
    ) -> CheckReport:
        """Two finite κ against each other (joint standard error) and against the κ=inf side."""
        self._require_finite(model)
        if model.kind is not ModelKind.NONCOMPACT_BC:
            raise UnsupportedModelError("κ-independence check applies to noncompactBC")
        start = validate_configuration(model, x0)
        other = model.with_kappa(kappa_alt)
        frozen = self._bc_oracle(model, start, t)
        polynomial = poly_from_roots(np.cosh(frozen))

        observables: list[Observable] = [CharPoly(y, "cosh") for y in y_values]
        observables += [CoshElementary(n) for n in range(1, model.N + 1)]
        first = self._estimates(model, start, mc, observables, [t])
        # independent streams so the joint standard error applies
        second = self._estimates(other, start, mc.model_copy(update={"seed": mc.seed + 1}), observables, [t])
        frozen_elem = elementary_symmetric(np.cosh(frozen), model.N)

        rows = []
        for i, observable in enumerate(observables):
            if i < len(y_values):
                predicted = complex(polynomial.evaluate(y_values[i]))
            else:
                predicted = complex(frozen_elem[i - len(y_values) + 1])
            a, b = first[i][0], second[i][0]
            rows.append(CheckRow.from_estimate(f"{observable.label} κ={model.kappa}", t, predicted, a))
            rows.append(CheckRow.from_estimate(f"{observable.label} κ={kappa_alt}", t, predicted, b))
            rows.append(CheckRow.from_estimate(f"{observable.label} difference", t, 0.0, joint_difference(a, b)))
        name = "bc-kappa-independence"
        notes: dict[str, str | float | int] = {"kappa": model.kappa, "kappa_alt": kappa_alt, "n_paths": mc.n_paths}
        return CheckReport.build(name, CHECKS[name].description, rows, notes)

    def check_dt_halving(
        self, model: ModelSpec, x0: npt.ArrayLike, t: float, mc: MonteCarloParams, l: int = 1
    ) -> CheckReport:
        """Shift of the first eigen-observable mean when dt is halved under shared Brownian paths.

        The coarse run sums consecutive fine increments, so the shift is
        estimated path by path; it must stay under one standard error of the
        coarse estimator (z = 3·|shift|/stderr).
        """
        self._require_finite(model)
        start = validate_configuration(model, x0)
        observable: Observable
        if model.kind is ModelKind.COMPACT_A:
            observable = CircleElementary(l)
        elif model.kind is ModelKind.NONCOMPACT_A:
            observable = ExpElementary(l)
        else:
            observable = CoshElementary(l)
        coarse_cfg = mc.sde_config(t, noise_coarsening=2)
        fine_cfg = mc.sde_config(t, dt=mc.dt / 2)
        coarse_run = self.ensemble.sample(model, start, coarse_cfg, mc.n_paths, [observable], [t])
        fine_run = self.ensemble.sample(model, start, fine_cfg, mc.n_paths, [observable], [t])
        capped = max(coarse_run.capped_pieces, fine_run.capped_pieces)
        coarse = coarse_run.values[0, 0]
        fine = fine_run.values[0, 0]

        coarse_estimate = mc_estimate(coarse, capped)
        shift = mc_estimate(coarse - fine, capped)
        criterion = McEstimate(
            mean_re=shift.mean_re,
            mean_im=shift.mean_im,
            stderr=coarse_estimate.stderr / 3.0,
            n_paths=mc.n_paths,
            capped_pieces=capped,
        )
        rows = [CheckRow.from_estimate(f"{observable.label} dt-halving shift", t, 0.0, criterion)]
        if model.kind.is_type_a:
            predicted = math.exp(eigenvalue_elem(model, l) * t) * complex(observable(start[None, :])[0])
            rows.append(CheckRow.from_estimate(observable.label, t, predicted, coarse_estimate))
        notes: dict[str, str | float | int] = {
            "dt": mc.dt,
            "shift": abs(shift.mean),
            "shift_stderr": shift.stderr,
            "estimator_stderr": coarse_estimate.stderr,
        }
        name = "dt-halving"
        return CheckReport.build(name, CHECKS[name].description, rows, notes)

    def check_freezing_closed_form(self, N: int, times: Sequence[float]) -> CheckReport:
        """ODE from x0 = 0 against the N = 2, 3 closed forms, plus the ε-ramp sensitivity."""
        model = ModelSpec.noncompact_a(N, INFINITY)
        path = integrate_freezing(model, zero_configuration(model), max(times), tol=self.settings.ode_tol, times=times)
        rows = []
        for t in times:
            index = int(np.argmin(np.abs(path.times - t)))
            expected = closed_form_noncompact_a(N, t)
            for j in range(N):
                estimate = _exact(complex(path.states[index, j]), CLOSED_FORM_ACCURACY / 3.0)
                rows.append(CheckRow.from_estimate(f"x{j + 1}", t, float(expected[j]), estimate))
        sensitivity = float(path.meta.get("eps_sensitivity", 0.0))
        rows.append(
            CheckRow.from_estimate("eps sensitivity", max(times), 0.0, _exact(sensitivity, EPS_SENSITIVITY_LIMIT / 3.0))
        )
        name = "freezing-closed-form"
        return CheckReport.build(name, CHECKS[name].description, rows, {"N": N, "tol": self.settings.ode_tol})

    def check_frozen_equispaced(
        self, model: ModelSpec, times: Sequence[float], y_values: Sequence[float]
    ) -> CheckReport:
        """κ=inf compactA from the equispaced start: ∏(y - e^{i·diff}) is constant in t.

        The start is its own t→inf limit, so e_l(e^{ix(t)}) also matches the limit configuration.
        """
        if model.kind is not ModelKind.COMPACT_A:
            raise UnsupportedModelError("frozen equispaced check applies to compactA")
        frozen = model.with_kappa(INFINITY)
        start = equispaced_configuration(frozen)
        path = integrate_freezing(frozen, start, max(times), tol=self.settings.ode_tol, times=times)
        diff, _ = cog_decompose(path)
        rows = []
        for t in times:
            index = int(np.argmin(np.abs(diff.times - t)))
            roots = np.exp(1j * diff.states[index])
            for y in y_values:
                value = complex(char_poly(roots, y))
                rows.append(
                    CheckRow.from_estimate(
                        f"charpoly(y={y})",
                        t,
                        diff_polynomial(frozen, start, 0.0, y),
                        _exact(value, self._deterministic_stderr(value)),
                    )
                )
        limit = elementary_symmetric(limit_configuration_compact_a(start), model.N)
        reached = elementary_symmetric(np.exp(1j * path.final_state), model.N)
        for l in range(1, model.N + 1):
            value = complex(reached[l])
            estimate = _exact(value, self._deterministic_stderr(value))
            rows.append(CheckRow.from_estimate(f"e_{l} vs limit", max(times), complex(limit[l]), estimate))
        name = "frozen-equispaced-determinant"
        return CheckReport.build(name, CHECKS[name].description, rows, {"N": model.N})

    def check_symmetric_oracle(self, max_N: int, samples: int = 100, seed: int = 0) -> CheckReport:
        """Batched e_l against brute-force subset sums on random complex inputs, N ≤ max_N.

        The error of each e_l is relative to max(|e_l|, tiny) with tiny the smallest normal float.
        """
        rng = np.random.default_rng(seed)
        rows = []
        for N in range(1, max_N + 1):
            values = rng.standard_normal((samples, N)) + 1j * rng.standard_normal((samples, N))
            fast = elementary_symmetric(values, N)
            worst = 0.0
            for l in range(N + 1):
                brute = np.zeros(samples, dtype=np.complex128)
                for subset in itertools.combinations(range(N), l):
                    brute += values[:, list(subset)].prod(axis=1)
                scale = np.maximum(np.abs(brute), np.finfo(np.float64).tiny)
                worst = max(worst, float(np.max(np.abs(fast[:, l] - brute) / scale)))
            rows.append(CheckRow.from_estimate(f"N={N}", 0.0, 0.0, _exact(worst, ORACLE_ACCURACY / 3.0)))
        name = "symmetric-oracle"
        return CheckReport.build(name, CHECKS[name].description, rows, {"samples": samples, "seed": seed})

    def check_eigen_residual(self, model: ModelSpec, count: int = 20, seed: int = JACOBI_SEED + 1) -> CheckReport:
        """Finite-difference generator residuals of the eigenfamily and their h-halving ratio."""
        table = None
        if model.kind is ModelKind.NONCOMPACT_BC:
            assert model.p is not None and model.q is not None
            table = jacobi_coeffs(model.N, model.p, model.q, model.kappa, model.N)
        grid = list(random_interior_points(model, count, seed))
        h = self.settings.fd_step
        rows = []
        for l in range(1, model.N + 1):
            coarse = eigen_residual(model, l, grid, h, table)
            fine = eigen_residual(model, l, grid, h / 2, table)
            rows.append(CheckRow.from_estimate(f"residual l={l}", 0.0, 0.0, _exact(coarse, RESIDUAL_LIMIT / 3.0)))
            if fine > 1e-12:
                ratio = _exact(coarse / fine, CONVERGENCE_BAND / 3.0)
                rows.append(CheckRow.from_estimate(f"h-halving ratio l={l}", 0.0, 4.0, ratio))
        name = "eigen-residual"
        return CheckReport.build(name, CHECKS[name].description, rows, {"points": count, "h": h})

    def check_ode_conservation(self, model: ModelSpec, x0: npt.ArrayLike, times: Sequence[float]) -> CheckReport:
        """Deviation of the κ=inf trajectory from the exponential law of its eigen-observables."""
        frozen = model.with_kappa(INFINITY)
        deviation = ode_elem_invariant_check(frozen, x0, times, tol=CONSERVATION_TOL)
        limit = CONSERVATION_LIMIT_BC if model.kind is ModelKind.NONCOMPACT_BC else CONSERVATION_LIMIT
        rows = [CheckRow.from_estimate("max relative deviation", max(times), 0.0, _exact(deviation, limit / 3.0))]
        name = "ode-conservation"
        return CheckReport.build(name, CHECKS[name].description, rows, {"tol": CONSERVATION_TOL})

    def check_coeff_kappa_independence(self, model: ModelSpec, kappa_alt: float, n_max: int) -> CheckReport:
        """Coefficient tables at two κ agree; the generator matrix is lower triangular with diagonal r_l."""
        if model.kind is not ModelKind.NONCOMPACT_BC:
            raise UnsupportedModelError("coefficient tables exist for noncompactBC")
        assert model.p is not None and model.q is not None
        first = jacobi_coeffs(model.N, model.p, model.q, model.kappa, n_max)
        second = jacobi_coeffs(model.N, model.p, model.q, kappa_alt, n_max)
        rows = []
        for n in range(n_max + 1):
            for l in range(n + 1):
                estimate = _exact(second.c[n][l], COEFF_AGREEMENT / 3.0)
                rows.append(CheckRow.from_estimate(f"c[{n}][{l}]", 0.0, first.c[n][l], estimate))
        matrix = generator_matrix(model, n_max, JACOBI_SEED, "exact", self.settings.fd_step)
        eigenvalues = first.eigenvalues()
        for l in range(n_max + 1):
            estimate = _exact(float(matrix[l, l]), DIAGONAL_AGREEMENT / 3.0)
            rows.append(CheckRow.from_estimate(f"M[{l}][{l}] vs r_{l}", 0.0, float(eigenvalues[l]), estimate))
        upper = float(np.abs(np.triu(matrix, 1)).max()) if n_max else 0.0
        rows.append(CheckRow.from_estimate("upper triangle", 0.0, 0.0, _exact(upper, DIAGONAL_AGREEMENT / 3.0)))
        name = "coeff-kappa-independence"
        notes: dict[str, str | float | int] = {"kappa": model.kappa, "kappa_alt": kappa_alt, "n_max": n_max}
        return CheckReport.build(name, CHECKS[name].description, rows, notes)


@dataclasses.dataclass(frozen=True)
class CheckDefinition:
    description: str
    run: Callable[[VerificationService, CheckRequest], CheckReport]
    # name of the identity the check reproduces, accepted by --check as well
    anchor: str | None = None


def _start(request: CheckRequest, default: Callable[[ModelSpec], RealArray]) -> RealArray:
    return np.asarray(request.x0, dtype=np.float64) if request.x0 is not None else default(request.model)


def _times(request: CheckRequest, fallback: Sequence[float] = DEFAULT_TIMES) -> tuple[float, ...]:
    return request.times or tuple(fallback)


def _ls(request: CheckRequest, fallback: Sequence[int]) -> tuple[int, ...]:
    return request.ls or tuple(fallback)


def _ys(request: CheckRequest, fallback: Sequence[float] = DEFAULT_Y) -> tuple[float, ...]:
    return request.y_values or tuple(fallback)


def _require_kind(request: CheckRequest, kind: ModelKind) -> None:
    if request.model.kind is not kind:
        raise UnsupportedModelError(f"check needs --model {kind.value}, got {request.model.kind.value}")


def _run_compact_martingale(service: VerificationService, request: CheckRequest) -> CheckReport:
    _require_kind(request, ModelKind.COMPACT_A)
    start = _start(request, zero_configuration)
    return service.check_martingale(request.model, start, _ls(request, [1]), _times(request), request.mc)


def _run_noncompact_martingale(service: VerificationService, request: CheckRequest) -> CheckReport:
    _require_kind(request, ModelKind.NONCOMPACT_A)
    start = _start(request, lambda m: np.linspace(1.0, -1.0, m.N))
    return service.check_martingale(request.model, start, _ls(request, [1]), _times(request), request.mc)


def _run_bc_martingale(service: VerificationService, request: CheckRequest) -> CheckReport:
    _require_kind(request, ModelKind.NONCOMPACT_BC)
    start = _start(request, lambda m: np.arange(m.N + 1, 1, -1, dtype=np.float64) / 2.0 + 0.5)
    ls = _ls(request, range(1, request.model.N + 1))
    return service.check_martingale(request.model, start, ls, _times(request), request.mc)


def _run_diff_martingale(service: VerificationService, request: CheckRequest) -> CheckReport:
    start = _start(request, equispaced_configuration)
    # e_N of the zero-sum part is identically 1
    ls = _ls(request, range(1, request.model.N))
    return service.check_diff_martingale(request.model, start, ls, _times(request), _ys(request), request.mc)


def _run_equispaced_determinant(service: VerificationService, request: CheckRequest) -> CheckReport:
    _require_kind(request, ModelKind.COMPACT_A)
    start = equispaced_configuration(request.model)
    ls = _ls(request, range(1, request.model.N))
    return service.check_diff_martingale(
        request.model, start, ls, _times(request, [0.3]), _ys(request), request.mc, name="equispaced-determinant"
    )


def _run_center_of_gravity(service: VerificationService, request: CheckRequest) -> CheckReport:
    start = _start(request, equispaced_configuration)
    return service.check_center_of_gravity(request.model, start, _ls(request, [1]), _times(request), request.mc)


def _run_stationary(service: VerificationService, request: CheckRequest, special: bool) -> CheckReport:
    x0 = None if request.x0 is None else np.asarray(request.x0)
    return service.check_stationary_compact_a(
        request.model, _ys(request, [2.0]), request.t_long, request.mc, x0=x0, special_unitary=special
    )


def _run_detpoly(service: VerificationService, request: CheckRequest) -> CheckReport:
    start = _start(request, zero_configuration)
    t = _times(request, [1.0])[-1]
    return service.detpoly_noncompact_a(request.model, start, t, _ys(request), request.mc)


def _bc_start(model: ModelSpec) -> RealArray:
    return np.arange(model.N, 0, -1, dtype=np.float64)


def _run_bc_determinantal(service: VerificationService, request: CheckRequest) -> CheckReport:
    start = _start(request, _bc_start)
    t = _times(request, [0.5])[-1]
    return service.check_bc_determinantal(request.model, start, t, _ys(request, [5.0, 10.0]), request.mc)


def _run_kappa_independence(service: VerificationService, request: CheckRequest) -> CheckReport:
    start = _start(request, _bc_start)
    t = _times(request, [0.5])[-1]
    kappa_alt = request.kappa_alt or 4.0 * request.model.kappa
    return service.check_kappa_independence(request.model, start, t, _ys(request, [5.0, 10.0]), kappa_alt, request.mc)


def _run_dt_halving(service: VerificationService, request: CheckRequest) -> CheckReport:
    start = _start(request, zero_configuration)
    t = _times(request, [0.2])[-1]
    return service.check_dt_halving(request.model, start, t, request.mc)


def _run_freezing_closed_form(service: VerificationService, request: CheckRequest) -> CheckReport:
    times = _times(request, np.linspace(0.1, 2.0, 20).tolist())
    return service.check_freezing_closed_form(request.model.N, times)


def _run_frozen_equispaced(service: VerificationService, request: CheckRequest) -> CheckReport:
    return service.check_frozen_equispaced(request.model, _times(request, [0.5, 1.0, 2.0]), _ys(request))


def _run_symmetric_oracle(service: VerificationService, request: CheckRequest) -> CheckReport:
    return service.check_symmetric_oracle(request.model.N, seed=request.mc.seed)


def _run_eigen_residual(service: VerificationService, request: CheckRequest) -> CheckReport:
    return service.check_eigen_residual(request.model)


def _conservation_start(model: ModelSpec) -> RealArray:
    if model.kind is ModelKind.COMPACT_A:
        return random_interior_points(model, 1, JACOBI_SEED)[0]
    if model.kind is ModelKind.NONCOMPACT_A:
        return 2.0 * equispaced_configuration(model)
    return _bc_start(model)


def _run_ode_conservation(service: VerificationService, request: CheckRequest) -> CheckReport:
    start = _start(request, _conservation_start)
    return service.check_ode_conservation(request.model, start, _times(request, np.linspace(0.1, 1.0, 10).tolist()))


def _run_coeff_kappa_independence(service: VerificationService, request: CheckRequest) -> CheckReport:
    kappa_alt = request.kappa_alt or 3.0 * request.model.kappa
    n_max = request.n_max if request.n_max is not None else request.model.N
    return service.check_coeff_kappa_independence(request.model, kappa_alt, n_max)


CHECKS: dict[str, CheckDefinition] = {
    "compact-martingale": CheckDefinition(
        "compactA: e^{l(1/k+N-l)t}·e_l(e^{iX_t}) is a martingale", _run_compact_martingale, "corollary-3.6"
    ),
    "noncompact-martingale": CheckDefinition(
        "noncompactA: e^{-l(1/k+N-l)t}·ẽ_l(X_t) is a martingale", _run_noncompact_martingale, "corollary-4.1"
    ),
    "bc-martingale": CheckDefinition(
        "noncompactBC: e^{-r_n t}·H_{λ(n)}(X_t) is a martingale", _run_bc_martingale, "lemma-5.1"
    ),
    "diff-martingale": CheckDefinition(
        "type A: E e_l of the zero-sum part decays or grows at rate l(N-l)(1+1/(Nk))",
        _run_diff_martingale,
        "corollary-3.8",
    ),
    "equispaced-determinant": CheckDefinition(
        "compactA, equispaced zero-sum start: E∏(y - e^{i·diff_j}) = y^N + (-1)^N for all t",
        _run_equispaced_determinant,
        "example-3.10",
    ),
    "center-of-gravity": CheckDefinition(
        "type A: center of gravity is Brownian with variance 2t/(Nk) and independent of the zero-sum part",
        _run_center_of_gravity,
        "lemma-3.3",
    ),
    "stationary-unitary": CheckDefinition(
        "compactA long run: E∏(y - Z_j) = y^N under the circular ensemble (U(N) at k=1)",
        lambda service, request: _run_stationary(service, request, special=False),
        "corollary-3.12",
    ),
    "stationary-special-unitary": CheckDefinition(
        "compactA zero-sum part long run: E∏(y - Z_j) = y^N + (-1)^N (SU(N) at k=1)",
        lambda service, request: _run_stationary(service, request, special=True),
        "corollary-3.13",
    ),
    "noncompact-detpoly": CheckDefinition(
        "noncompactA: E∏(y - e^{diff_j(t)}) = P_{t,N,k,x}(y), roots of P from the ODE at κ=inf",
        _run_detpoly,
        "corollary-4.3",
    ),
    "bc-determinantal": CheckDefinition(
        "noncompactBC: E∏(y - cosh X_{t,κ}) equals the κ=inf ODE polynomial", _run_bc_determinantal, "equation-5.12"
    ),
    "bc-kappa-independence": CheckDefinition(
        "noncompactBC: E e_n(cosh X_{t,κ}) agrees across two κ and with κ=inf",
        _run_kappa_independence,
        "corollary-5.2",
    ),
    "dt-halving": CheckDefinition(
        "halving dt under shared Brownian paths moves the estimate by less than one standard error", _run_dt_halving
    ),
    "freezing-closed-form": CheckDefinition(
        "noncompactA κ=inf from 0: arcosh(e^t) for N=2, arcosh((3e^{2t}-1)/2) for N=3",
        _run_freezing_closed_form,
        "example-4.5",
    ),
    "frozen-equispaced-determinant": CheckDefinition(
        "compactA κ=inf equispaced start is stationary: ∏(y - e^{i·diff_j}) constant in t",
        _run_frozen_equispaced,
        "lemma-3.1",
    ),
    "symmetric-oracle": CheckDefinition(
        "e_l by the batched recurrence equals brute-force subset sums (relative error < 1e-12)",
        _run_symmetric_oracle,
    ),
    "eigen-residual": CheckDefinition(
        "finite-difference generator residuals of the eigenfamily < 1e-4, h-halving ratio in [3.5, 4.5]",
        _run_eigen_residual,
        "lemma-3.4",
    ),
    "ode-conservation": CheckDefinition(
        "κ=inf trajectories: e^{-λ_l t}·observable_l(x(t)) is constant", _run_ode_conservation, "equation-4.4"
    ),
    "coeff-kappa-independence": CheckDefinition(
        "noncompactBC: Jacobi coefficient tables agree across κ; generator matrix diagonal is r_l",
        _run_coeff_kappa_independence,
        "equation-5.11",
    ),
}

_ANCHORS = {definition.anchor: name for name, definition in CHECKS.items() if definition.anchor is not None}


def resolve_check(name: str) -> str:
    """Registered check name for a check name or its anchor.

    Raises:
        ParameterError: if neither a check nor an anchor has this name
    """
    if name in CHECKS:
        return name
    if name in _ANCHORS:
        return _ANCHORS[name]
    raise ParameterError(f"unknown check {name!r} (see verify --list)")
