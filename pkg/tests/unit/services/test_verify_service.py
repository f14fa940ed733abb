"""
Unit tests for VerificationService and the check registry.
"""

import math
from unittest.mock import Mock, patch

import numpy as np
import pytest

from hop_sim.exceptions import ConfigurationError, ParameterError, UnsupportedModelError
from hop_sim.models import equispaced_configuration
from hop_sim.schemas import CheckRequest, McEstimate, ModelSpec, MonteCarloParams, PathSample
from hop_sim.services.ensemble_service import EnsembleSample, EnsembleService
from hop_sim.services.verify_service import (
    CHECKS,
    VerificationService,
    cog_decompose,
    diff_exponent,
    diff_polynomial,
    expected_diff_elementary,
    resolve_check,
)
from hop_sim.symfunc import elementary_symmetric
from hop_sim.types import INFINITY


@pytest.fixture
def mock_ensemble():
    """EnsembleService double for Monte Carlo checks."""
    return Mock(spec=EnsembleService)


@pytest.fixture
def mocked_verification(mock_ensemble, settings):
    return VerificationService(mock_ensemble, settings)


def _estimates(values, stderr=0.01):
    return [[McEstimate(mean_re=v.real, mean_im=v.imag, stderr=stderr, n_paths=100) for v in row] for row in values]


def _centered_sample(mean, size, rng, spread=0.5):
    """Complex sample of exactly the given mean."""
    noise = rng.standard_normal(size) + 1j * rng.standard_normal(size)
    return mean + spread * (noise - noise.mean())


class TestDiffProcess:
    """Test cases for the zero-sum part helpers."""

    def test_cog_decompose(self, noncompact_model):
        # Setup
        path = PathSample(
            model=noncompact_model, times=np.array([0.0, 0.1]), states=np.array([[1.0, -1.0], [2.0, 1.0]]), dt=0.1
        )

        # Execute
        diff, cg = cog_decompose(path)

        # Verify
        np.testing.assert_allclose(cg, [0.0, 1.5])
        np.testing.assert_allclose(diff.states.sum(axis=1), 0.0)
        np.testing.assert_allclose(diff.states[1], [0.5, -0.5])

    def test_cog_rejects_bc(self, bc_model):
        path = PathSample(model=bc_model, times=np.array([0.0]), states=np.array([[2.0, 1.0]]), dt=0.1)

        with pytest.raises(UnsupportedModelError):
            cog_decompose(path)

    def test_diff_exponent(self, compact_model, noncompact_model):
        """Test l(N-l)(1 + 1/(Nk)) with decay in the compact case."""
        assert diff_exponent(compact_model, 1) == pytest.approx(-2.0 * (1 + 1 / 3))
        assert diff_exponent(noncompact_model, 1) == pytest.approx(1.0 + 1 / 2)
        assert diff_exponent(compact_model, 3) == 0.0

    def test_expected_diff_at_zero(self, compact_model):
        x0 = np.array([0.2, 0.4, 1.5])

        expected = expected_diff_elementary(compact_model, x0, 0.0)

        centered = x0 - x0.mean()
        np.testing.assert_allclose(expected, elementary_symmetric(np.exp(1j * centered), 3))
        assert expected[3] == pytest.approx(1.0)

    def test_equispaced_polynomial_is_constant(self, compact_model):
        """Test y^N + (-1)^N at every t from the equispaced start."""
        x0 = equispaced_configuration(compact_model)

        for t in (0.0, 0.7, 3.0):
            assert diff_polynomial(compact_model, x0, t, 2.0) == pytest.approx(7.0)

    def test_frozen_polynomial_roots_match_closed_form(self, verification):
        model = ModelSpec.noncompact_a(2, INFINITY)

        roots = np.sort(verification.determinant_polynomial(model, np.zeros(2), 1.0).roots().real)

        a = math.acosh(math.e)
        np.testing.assert_allclose(roots, [math.exp(-a), math.exp(a)], rtol=1e-12)

    def test_bc_polynomial_from_ode(self, verification, bc_model):
        polynomial = verification.determinant_polynomial(bc_model, [2.0, 1.0], 0.0)

        np.testing.assert_allclose(np.sort(polynomial.roots().real), np.cosh([1.0, 2.0]), rtol=1e-10)


class TestDeterministicChecks:
    """Test cases for checks that need no Monte Carlo."""

    def test_symmetric_oracle(self, verification):
        report = verification.check_symmetric_oracle(4, samples=20)

        assert report.passed
        assert len(report.rows) == 4
        assert all(row.mean_re < 1e-12 for row in report.rows)

    def test_symmetric_oracle_flags_relative_error(self, verification):
        """Test a 1e-10 relative error in one e_l fails the oracle."""
        # Setup
        def perturbed(values, n):
            out = elementary_symmetric(values, n)
            out[..., -1] *= 1 + 1e-10
            return out

        # Execute
        with patch("hop_sim.services.verify_service.elementary_symmetric", side_effect=perturbed):
            report = verification.check_symmetric_oracle(3, samples=10)

        # Verify
        assert not report.passed

    def test_eigen_residual(self, verification, compact_model):
        report = verification.check_eigen_residual(compact_model, count=5)

        assert report.passed
        assert report.name == "eigen-residual"

    def test_ode_conservation(self, verification):
        model = ModelSpec.noncompact_a(3, 1.0)

        report = verification.check_ode_conservation(model, 2 * equispaced_configuration(model), [0.2, 0.5])

        assert report.passed

    def test_coeff_kappa_independence(self, verification, bc_model):
        report = verification.check_coeff_kappa_independence(bc_model, 3.0, 2)

        assert report.passed
        assert report.notes["kappa_alt"] == 3.0

    def test_coeff_check_needs_bc(self, verification, compact_model):
        with pytest.raises(UnsupportedModelError):
            verification.check_coeff_kappa_independence(compact_model, 3.0, 2)

    def test_freezing_closed_form(self, verification):
        report = verification.check_freezing_closed_form(2, [0.5, 1.0])

        assert report.passed
        assert [row.label for row in report.rows][-1] == "eps sensitivity"

    def test_frozen_equispaced(self, verification, compact_model):
        report = verification.check_frozen_equispaced(compact_model, [0.5, 1.0], [0.5, 2.0])

        assert report.passed
        # two times by two y values, then e_1..e_3 against the limit configuration
        assert len(report.rows) == 7
        assert [row.label for row in report.rows][-1] == "e_3 vs limit"


class TestMonteCarloChecks:
    """Test cases for Monte Carlo checks against a mocked ensemble."""

    def test_martingale_passes_on_exact_means(self, mocked_verification, mock_ensemble, noncompact_model):
        """Test predictions e^{λ_1 t}·ẽ_1(x0) are what the rows compare against."""
        # Setup
        times = [0.1, 0.2]
        initial = math.e + 1 / math.e
        mock_ensemble.simulate_ensemble.return_value = _estimates([[math.exp(2 * t) * initial for t in times]])

        # Execute
        report = mocked_verification.check_martingale(noncompact_model, [1.0, -1.0], [1], times, MonteCarloParams())

        # Verify
        assert report.passed
        assert report.name == "noncompact-martingale"
        assert [row.t for row in report.rows] == times
        mock_ensemble.simulate_ensemble.assert_called_once()

    def test_martingale_fails_on_biased_means(self, mocked_verification, mock_ensemble, noncompact_model):
        # Setup
        times = [0.1]
        initial = math.e + 1 / math.e
        mock_ensemble.simulate_ensemble.return_value = _estimates([[math.exp(0.2) * initial + 0.05]])

        # Execute
        report = mocked_verification.check_martingale(noncompact_model, [1.0, -1.0], [1], times, MonteCarloParams())

        # Verify
        assert not report.passed
        assert report.rows[0].z == pytest.approx(5.0)

    def test_frozen_model_rejected(self, mocked_verification, frozen_noncompact_model):
        with pytest.raises(UnsupportedModelError):
            mocked_verification.check_martingale(
                frozen_noncompact_model, [1.0, 0.0, -1.0], [1], [0.1], MonteCarloParams()
            )

    def test_diff_requires_zero_sum(self, mocked_verification, noncompact_model):
        with pytest.raises(ParameterError):
            mocked_verification.check_diff_martingale(
                noncompact_model, [1.0, 0.0], [1], [0.1], [1.0], MonteCarloParams()
            )

    @pytest.mark.parametrize(("special", "expected"), [(False, 8.0), (True, 7.0)])
    def test_stationary_predictions(self, mocked_verification, mock_ensemble, compact_model, special, expected):
        """Test y^N for the circular ensemble and y^N + (-1)^N for its zero-sum part."""
        # Setup
        mock_ensemble.simulate_ensemble.return_value = _estimates([[complex(expected)]])

        # Execute
        report = mocked_verification.check_stationary_compact_a(
            compact_model, [2.0], 10.0, MonteCarloParams(), special_unitary=special
        )

        # Verify
        assert report.passed
        assert report.rows[0].predicted == expected
        assert report.notes["ensemble"] == ("SU(N)" if special else "U(N)")

    def test_dt_halving_on_coupled_runs(self, mocked_verification, mock_ensemble, compact_model, rng):
        """Test the coarse run sums fine noise and a small path-wise shift passes."""
        # Setup
        mc = MonteCarloParams(n_paths=4000, dt=2e-3)
        predicted = 3.0 * math.exp(-0.6)
        coarse = _centered_sample(predicted, mc.n_paths, rng)
        fine = coarse - 1e-4
        mock_ensemble.sample.side_effect = [
            EnsembleSample(coarse[None, None, :], 0),
            EnsembleSample(fine[None, None, :], 0),
        ]

        # Execute
        report = mocked_verification.check_dt_halving(compact_model, [0.0, 0.0, 0.0], 0.2, mc)

        # Verify
        assert report.passed
        assert report.rows[1].predicted == pytest.approx(predicted)
        assert report.notes["shift"] == pytest.approx(1e-4)
        coarse_cfg = mock_ensemble.sample.call_args_list[0].args[2]
        fine_cfg = mock_ensemble.sample.call_args_list[1].args[2]
        assert coarse_cfg.noise_coarsening == 2
        assert coarse_cfg.dt == pytest.approx(mc.dt)
        assert fine_cfg.noise_coarsening == 1
        assert fine_cfg.dt == pytest.approx(mc.dt / 2)

    def test_dt_halving_fails_on_large_shift(self, mocked_verification, mock_ensemble, compact_model, rng):
        # Setup
        mc = MonteCarloParams(n_paths=4000, dt=2e-3)
        coarse = _centered_sample(3.0 * math.exp(-0.6), mc.n_paths, rng)
        mock_ensemble.sample.side_effect = [
            EnsembleSample(coarse[None, None, :], 0),
            EnsembleSample((coarse - 0.05)[None, None, :], 5),
        ]

        # Execute
        report = mocked_verification.check_dt_halving(compact_model, [0.0, 0.0, 0.0], 0.2, mc)

        # Verify
        assert not report.passed
        assert report.notes["capped_pieces"] == 5

    def test_center_of_gravity_reports_capped_pieces(self, mocked_verification, mock_ensemble, compact_model, rng):
        """Test exact center-of-gravity moments pass and capped pieces reach the notes."""
        # Setup
        mc = MonteCarloParams(n_paths=2000)
        t = 0.1
        phase = _centered_sample(math.exp(-t / 3.0), mc.n_paths, rng, spread=0.1)
        spread = _centered_sample(6.0 * t, mc.n_paths, rng, spread=0.1)
        diff_part = np.ones(mc.n_paths, dtype=np.complex128)
        cg_part = np.exp(1j * rng.uniform(0.0, 2 * math.pi, mc.n_paths))
        values = np.stack([phase, spread, diff_part, cg_part])[:, None, :]
        mock_ensemble.sample.return_value = EnsembleSample(values, 2)

        # Execute
        report = mocked_verification.check_center_of_gravity(
            compact_model, equispaced_configuration(compact_model), [1], [t], mc
        )

        # Verify
        assert report.passed
        assert len(report.rows) == 3
        assert report.notes["capped_pieces"] == 2
        assert all(row.capped_pieces == 2 for row in report.rows)

    def test_stationary_short_run_rejected(self, mocked_verification, compact_model):
        with pytest.raises(ConfigurationError):
            mocked_verification.check_stationary_compact_a(compact_model, [2.0], 0.5, MonteCarloParams())

    def test_stationary_needs_compact(self, mocked_verification, noncompact_model):
        with pytest.raises(UnsupportedModelError):
            mocked_verification.check_stationary_compact_a(noncompact_model, [2.0], 10.0, MonteCarloParams())


class TestCheckRegistry:
    """Test cases for the named check registry."""

    def test_every_check_is_described(self):
        assert len(CHECKS) == 18
        for name, definition in CHECKS.items():
            assert definition.description, name

    def test_run_by_name(self, verification, compact_model):
        report = CHECKS["symmetric-oracle"].run(verification, CheckRequest(model=compact_model))

        assert report.name == "symmetric-oracle"
        assert report.passed

    def test_model_kind_enforced(self, mocked_verification, noncompact_model):
        with pytest.raises(UnsupportedModelError):
            CHECKS["compact-martingale"].run(mocked_verification, CheckRequest(model=noncompact_model))

    def test_anchors_are_unique(self):
        anchors = [definition.anchor for definition in CHECKS.values() if definition.anchor is not None]

        assert len(anchors) == len(set(anchors))
        assert not set(anchors) & set(CHECKS)

    @pytest.mark.parametrize(
        ("name", "expected"),
        [
            ("example-3.10", "equispaced-determinant"),
            ("corollary-3.6", "compact-martingale"),
            ("example-4.5", "freezing-closed-form"),
            ("dt-halving", "dt-halving"),
        ],
    )
    def test_resolve_check(self, name, expected):
        assert resolve_check(name) == expected

    def test_resolve_unknown_check(self):
        with pytest.raises(ParameterError):
            resolve_check("no-such-check")
