"""Builtin activations: values, derivative consistency, registry errors."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from signalprop.activations import builtin, supported_names
from signalprop.errors import ConfigurationError

EPS = 1e-6


class TestRegistry:
    def test_supported_names(self):
        assert set(supported_names()) >= {"tanh", "linear", "hard_tanh"}

    def test_unknown_name(self):
        with pytest.raises(ConfigurationError, match="relu6"):
            builtin("relu6")

    def test_boundedness_flags(self):
        assert builtin("tanh").bounded
        assert builtin("hard_tanh").bounded
        assert not builtin("linear").bounded

    def test_frozen(self):
        act = builtin("tanh")
        with pytest.raises(AttributeError):
            act.name = "other"


@pytest.mark.parametrize("name", ["tanh", "linear", "hard_tanh"])
class TestDerivativeConsistency:
    def test_first_derivative(self, name):
        act = builtin(name)
        # Stay away from the hard_tanh kinks at +-1.
        x = np.array([-2.7, -0.5, 0.0, 0.31, 1.9])
        numeric = (act.phi(x + EPS) - act.phi(x - EPS)) / (2 * EPS)
        np.testing.assert_allclose(act.d_phi(x), numeric, atol=1e-8)

    def test_second_derivative(self, name):
        act = builtin(name)
        x = np.array([-2.7, -0.5, 0.0, 0.31, 1.9])
        numeric = (act.d_phi(x + EPS) - act.d_phi(x - EPS)) / (2 * EPS)
        np.testing.assert_allclose(act.dd_phi(x), numeric, atol=1e-8)


class TestValues:
    def test_tanh_odd(self):
        act = builtin("tanh")
        x = np.linspace(-3, 3, 13)
        np.testing.assert_allclose(act.phi(-x), -act.phi(x), atol=1e-15)

    def test_hard_tanh_saturates(self):
        act = builtin("hard_tanh")
        x = np.array([-5.0, -1.0, 0.3, 1.0, 5.0])
        np.testing.assert_array_equal(act.phi(x), [-1.0, -1.0, 0.3, 1.0, 1.0])
        np.testing.assert_array_equal(act.d_phi(np.array([-5.0, 0.0, 5.0])), [0.0, 1.0, 0.0])

    def test_linear_identity(self):
        act = builtin("linear")
        x = np.linspace(-2, 2, 7)
        np.testing.assert_array_equal(act.phi(x), x)
        np.testing.assert_array_equal(act.d_phi(x), np.ones_like(x))
        np.testing.assert_array_equal(act.dd_phi(x), np.zeros_like(x))


@given(st.floats(-10, 10))
@settings(max_examples=50, deadline=None)
def test_tanh_slope_bounded(x):
    act = builtin("tanh")
    assert 0.0 < float(act.d_phi(np.float64(x))) <= 1.0
