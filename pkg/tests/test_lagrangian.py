import numpy as np
import pytest

from herglotz.errors import EvaluationError, UnknownIdentifier
from herglotz.lagrangian import (
    LagrangianSpec,
    field_alphabet,
    first_order_alphabet,
    higher_order_alphabet,
)


def test_alphabets():
    assert first_order_alphabet(2) == ["t", "x1", "x2", "v1", "v2", "z"]
    assert higher_order_alphabet(2) == ["t", "x1", "v1_1", "v1_2", "z"]
    assert field_alphabet(1) == ["t", "s1", "u", "ut", "ux1", "z"]


def test_symbolic_partials():
    lag = LagrangianSpec.first_order("v1^2 + z*x1")
    env = {"t": 0.0, "x1": np.array([1.0, 2.0]), "v1": np.array([3.0, 4.0]), "z": 0.5}
    assert np.allclose(lag.value(env), [9.5, 17])
    assert np.allclose(lag.partial("v1", env), [6, 8])
    assert np.allclose(lag.partial("x1", env), [0.5, 0.5])
    assert lag.is_zero("t") and not lag.is_zero("z")


def test_zero_partial_broadcasts():
    lag = LagrangianSpec.first_order("v1^2")
    env = {"t": np.zeros(3), "x1": np.zeros(3), "v1": np.ones(3), "z": np.zeros(3)}
    assert lag.partial("z", env).shape == (3,)


def test_variables_outside_alphabet_are_rejected():
    with pytest.raises(UnknownIdentifier):
        LagrangianSpec.first_order("x2 + v1", 1)


def test_higher_order_alias():
    lag = LagrangianSpec.higher_order("v1^2 + v1_2", 2)
    env = {"t": 0.0, "x1": 0.0, "v1_1": 3.0, "v1_2": 1.0, "z": 0.0}
    assert lag.partial("v1_1", env) == pytest.approx(6)


def test_domain_error_becomes_evaluation_error():
    lag = LagrangianSpec.first_order("log(x1)")
    with pytest.raises(EvaluationError):
        lag.value({"t": 0.0, "x1": np.array([0.0]), "v1": 0.0, "z": 0.0})


def test_native_lagrangian_uses_finite_differences():
    lag = LagrangianSpec.native(lambda t, x1, v1, z: v1 ** 2 + np.sin(x1) * z,
                                first_order_alphabet(1))
    env = {"t": 0.0, "x1": np.array([0.3]), "v1": np.array([2.0]), "z": np.array([1.5])}
    assert lag.partial("v1", env) == pytest.approx(4.0, rel=1e-6)
    assert lag.partial("x1", env) == pytest.approx(np.cos(0.3) * 1.5, rel=1e-6)
