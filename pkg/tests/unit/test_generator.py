"""
Unit tests for generator application and the BC Jacobi coefficient table.
"""

import math

import numpy as np
import pytest

from hop_sim.exceptions import ParameterError, StepSizeError
from hop_sim.generator import (
    JACOBI_SEED,
    apply_generator,
    eigen_residual,
    eigenfunction,
    expected_cosh_elem,
    generator_matrix,
    jacobi_coeffs,
    random_interior_points,
    solve_a,
)
from hop_sim.models import chamber_gaps, is_in_chamber
from hop_sim.schemas import ModelSpec
from hop_sim.symfunc import elementary_symmetric
from hop_sim.types import INFINITY


class TestApplyGenerator:
    """Test cases for finite-difference generator application."""

    def test_constant_is_annihilated(self, noncompact_model):
        value = apply_generator(noncompact_model, lambda x: 1.0, [1.0, -1.0])

        assert value == pytest.approx(0.0, abs=1e-9)

    def test_linear_sum_picks_up_drift(self, noncompact_model):
        """Test L(x_1 + x_2) is the drift sum, zero for type A."""
        value = apply_generator(noncompact_model, lambda x: x.sum(), [1.0, -1.0])

        assert value == pytest.approx(0.0, abs=1e-8)

    def test_square_norm(self, noncompact_model):
        """Test L|x|² = 2N/κ + 2 x·b(x)."""
        x = np.array([1.0, -1.0])

        value = apply_generator(noncompact_model, lambda y: float(y @ y), x)

        assert value == pytest.approx(4.0 + 4.0 / math.tanh(1.0), rel=1e-6)

    def test_frozen_drops_laplacian(self):
        model = ModelSpec.noncompact_a(2, INFINITY)

        value = apply_generator(model, lambda y: float(y @ y), [1.0, -1.0])

        assert value == pytest.approx(4.0 / math.tanh(1.0), rel=1e-6)

    def test_step_too_large(self, noncompact_model):
        with pytest.raises(StepSizeError):
            apply_generator(noncompact_model, lambda x: 1.0, [0.05, -0.05], h=1e-2)

    def test_non_positive_step(self, noncompact_model):
        with pytest.raises(StepSizeError):
            apply_generator(noncompact_model, lambda x: 1.0, [1.0, -1.0], h=0.0)


class TestEigenResiduals:
    """Test cases for the eigen-relations L f_l = λ_l f_l."""

    @pytest.mark.parametrize(
        "model",
        [
            ModelSpec.compact_a(3, 1.0),
            ModelSpec.compact_a(4, 0.5),
            ModelSpec.noncompact_a(3, 2.0),
            ModelSpec.noncompact_a(3, INFINITY),
        ],
        ids=["compact-n3", "compact-n4", "noncompact-n3", "noncompact-frozen"],
    )
    def test_type_a_residuals(self, model):
        points = random_interior_points(model, 20, JACOBI_SEED + 1)

        for l in range(model.N + 1):
            assert eigen_residual(model, l, points) < 1e-4

    def test_bc_residuals(self):
        model = ModelSpec.noncompact_bc(2, 3.0, 4.0, 1.0)
        table = jacobi_coeffs(2, 3.0, 4.0, 1.0, 2)
        points = random_interior_points(model, 20, JACOBI_SEED + 1)

        for n in range(3):
            assert eigen_residual(model, n, points, table=table) < 1e-4

    def test_second_order_convergence(self):
        """Test halving h shrinks the defect by about four."""
        model = ModelSpec.noncompact_a(3, 1.0)
        point = [np.array([1.2, 0.1, -0.9])]

        coarse = eigen_residual(model, 1, point, h=2e-2)
        fine = eigen_residual(model, 1, point, h=1e-2)

        assert 3.5 <= coarse / fine <= 4.5

    def test_bc_eigenfunction_needs_table(self, bc_model):
        with pytest.raises(ParameterError):
            eigenfunction(bc_model, 1)


class TestInteriorPoints:
    """Test cases for random_interior_points."""

    @pytest.mark.parametrize(
        "model",
        [ModelSpec.compact_a(4, 1.0), ModelSpec.noncompact_a(3, 1.0), ModelSpec.noncompact_bc(3, 3.0, 4.0, 1.0)],
        ids=["compact", "noncompact", "bc"],
    )
    def test_points_keep_their_distance(self, model):
        points = random_interior_points(model, 50, 7, min_gap=0.3)

        assert points.shape == (50, model.N)
        for point in points:
            assert is_in_chamber(model, point)
            assert chamber_gaps(model, point).min() >= 0.3 - 1e-12

    def test_seeded(self, compact_model):
        np.testing.assert_array_equal(
            random_interior_points(compact_model, 5, 11), random_interior_points(compact_model, 5, 11)
        )


class TestJacobiCoeffs:
    """Test cases for the H_{λ(n)} coefficient table."""

    def test_normalized_at_origin(self):
        table = jacobi_coeffs(3, 3.0, 4.0, 1.0, 3)

        for n in range(4):
            assert table.h_value(n, np.zeros(3)) == pytest.approx(1.0)

    def test_leading_rows(self):
        """Test H_0 = 1 and H_1 is affine in e_1(cosh x)."""
        table = jacobi_coeffs(2, 2.0, 2.0, 1.0, 2)

        assert table.c[0] == pytest.approx((1.0,))
        assert len(table.c[1]) == 2
        assert table.c[1][0] + 2 * table.c[1][1] == pytest.approx(1.0)

    def test_independent_of_kappa(self):
        first = jacobi_coeffs(3, 3.0, 4.0, 1.0, 3).matrix()
        second = jacobi_coeffs(3, 3.0, 4.0, 4.0, 3).matrix()

        np.testing.assert_allclose(first, second, rtol=1e-8, atol=1e-8)

    def test_generator_matrix_diagonal(self):
        model = ModelSpec.noncompact_bc(3, 3.0, 4.0, 2.0)
        table = jacobi_coeffs(3, 3.0, 4.0, 2.0, 3)

        matrix = generator_matrix(model, 3)

        np.testing.assert_allclose(np.diag(matrix), table.eigenvalues(), rtol=1e-6)
        np.testing.assert_allclose(np.triu(matrix, 1), 0.0, atol=1e-6)

    def test_fd_method_agrees(self):
        exact = jacobi_coeffs(2, 3.0, 4.0, 1.0, 2).matrix()
        fd = jacobi_coeffs(2, 3.0, 4.0, 1.0, 2, method="fd").matrix()

        np.testing.assert_allclose(fd, exact, rtol=1e-3, atol=1e-4)

    def test_n_max_above_n(self):
        with pytest.raises(ParameterError):
            jacobi_coeffs(2, 2.0, 2.0, 1.0, 3)

    def test_inadmissible_parameters(self):
        with pytest.raises(ValueError):
            jacobi_coeffs(2, 1.0, 2.0, 1.0, 2)

    def test_type_a_has_no_cosh_basis(self, noncompact_model):
        with pytest.raises(ParameterError):
            generator_matrix(noncompact_model, 2)


class TestExpectation:
    """Test cases for solve_a and expected_cosh_elem."""

    def test_time_zero_is_start_value(self):
        table = jacobi_coeffs(3, 3.0, 4.0, 1.0, 3)
        x = np.array([1.5, 0.8, 0.2])

        expected = expected_cosh_elem(table, x, 0.0)

        np.testing.assert_allclose(expected, elementary_symmetric(np.cosh(x), 3), rtol=1e-10)

    def test_a_is_lower_triangular(self):
        table = jacobi_coeffs(2, 2.0, 2.0, 1.0, 2)

        a = solve_a(table, [1.0, 0.5])

        np.testing.assert_array_equal(np.triu(a, 1), 0.0)
        assert a[0, 0] == pytest.approx(1.0)

    def test_growth_rate_of_e1(self):
        """Test E H_1(X_t) = e^{r_1 t} from the origin, read through H_1 = c0 + c1·e_1."""
        table = jacobi_coeffs(2, 2.0, 2.0, 1.0, 1)
        c0, c1 = table.c[1]
        t = 0.3

        value = expected_cosh_elem(table, np.zeros(2), t)[1]

        assert value == pytest.approx((math.exp(table.eigenvalues()[1] * t) - c0) / c1)
