"""
Unit tests for vectorized observables.
"""

import math
import pickle
from unittest.mock import patch

import numpy as np
import pytest

from hop_sim.observables import (
    CenterPhase,
    CharPoly,
    CircleElementary,
    Constant,
    CoshElementary,
    ExpElementary,
    JacobiPolynomial,
    SumDisplacementSquared,
)
from hop_sim.symfunc import char_poly, elementary_symmetric


@pytest.fixture
def states(rng):
    return rng.uniform(-1.0, 1.0, size=(6, 3))


class TestElementaryObservables:
    """Test cases for the elementary families."""

    def test_circle(self, states):
        values = CircleElementary(2)(states)

        expected = elementary_symmetric(np.exp(1j * states), 2)[:, 2]
        np.testing.assert_allclose(values, expected)

    def test_centered_circle_ignores_common_shift(self, states):
        shifted = states + 0.7

        observable = CircleElementary(1, centered=True)

        np.testing.assert_allclose(observable(shifted), observable(states))

    def test_exp(self, states):
        values = ExpElementary(1)(states)

        np.testing.assert_allclose(values, np.exp(states).sum(axis=1))
        assert values.dtype == np.complex128

    def test_cosh(self, states):
        np.testing.assert_allclose(CoshElementary(3)(states), np.cosh(states).prod(axis=1))

    def test_jacobi_polynomial(self, states):
        observable = JacobiPolynomial(1, (-0.5, 0.25))

        np.testing.assert_allclose(observable(states), -0.5 + 0.25 * np.cosh(states).sum(axis=1))


class TestCharPoly:
    """Test cases for CharPoly."""

    @pytest.mark.parametrize(
        ("transform", "g"),
        [("circle", lambda x: np.exp(1j * x)), ("exp", np.exp), ("cosh", np.cosh)],
    )
    def test_product(self, states, transform, g):
        values = CharPoly(2.0, transform)(states)

        np.testing.assert_allclose(values, np.prod(2.0 - g(states), axis=1))

    def test_expands_into_elementary(self, states):
        """Test ∏(y - z_j) = Σ_l (-1)^l e_l(z) y^{N-l}."""
        y = 0.5
        e = elementary_symmetric(np.exp(1j * states), 3)

        expansion = sum((-1) ** l * e[:, l] * y ** (3 - l) for l in range(4))

        np.testing.assert_allclose(CharPoly(y, "circle")(states), expansion)

    def test_uses_batched_char_poly(self, states):
        with patch("hop_sim.observables.char_poly", wraps=char_poly) as wrapped:
            CharPoly(2.0, "exp")(states)

        wrapped.assert_called_once()
        assert wrapped.call_args.args[1] == 2.0

    def test_unknown_transform(self, states):
        with pytest.raises(ValueError):
            CharPoly(1.0, "sinh")(states)


class TestCenterObservables:
    """Test cases for center-of-gravity observables."""

    def test_center_phase(self):
        states = np.array([[0.3, 0.6, 0.9]])

        np.testing.assert_allclose(CenterPhase(2)(states), [np.exp(-2j * 0.6)])
        np.testing.assert_allclose(CenterPhase(2, sign=1)(states), [np.exp(2j * 0.6)])

    def test_sum_displacement(self):
        states = np.array([[1.0, 2.0], [0.0, 0.0]])

        np.testing.assert_allclose(SumDisplacementSquared(1.0)(states), [4.0, 1.0])

    def test_labels_are_distinct(self):
        labels = {CircleElementary(1).label, CircleElementary(1, centered=True).label, CenterPhase(1).label}

        assert len(labels) == 3


class TestPickling:
    """Test cases for plain-dataclass observables."""

    def test_round_trip(self):
        observable = JacobiPolynomial(2, (0.1, -0.2, 0.3))

        assert pickle.loads(pickle.dumps(observable)) == observable

    def test_constant_value(self):
        values = Constant()(np.zeros((4, 2)))

        np.testing.assert_array_equal(values, np.ones(4))
        assert math.isclose(abs(Constant(2.0)(np.zeros((1, 2)))[0]), 2.0)
