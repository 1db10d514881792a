"""
tests.cost_test
===============
"""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import pymhe
from pymhe.cost import HorizonCost, StageCost, estimate_smoothness
from pymhe.model import benchmark2d, finite_difference_jacobian, linear1d

from . import SEED, quadratic_cost

coordinate = st.floats(-2.0, 2.0, allow_nan=False, allow_infinity=False)


def test_predictions_start_one_step_ahead() -> None:
    """Test the first residual compares ``h(f_0(z))`` with the window."""
    cost = HorizonCost(benchmark2d(), np.array([[0.0]]))
    assert float(cost.value(np.array([1.0, 0.0]))) == pytest.approx(1.0)
    np.testing.assert_allclose(
        cost.residuals(np.array([1.0, 0.0])), [[1.0]]
    )


def test_batched_value() -> None:
    """Test costs are vectorized over leading axes."""
    cost = quadratic_cost(y=1.0)
    np.testing.assert_allclose(
        cost.value(np.array([[0.0], [1.0], [3.0]])), [1.0, 0.0, 4.0]
    )
    np.testing.assert_allclose(
        cost.gradient(np.array([[0.0], [3.0]])), [[-2.0], [4.0]]
    )


@settings(max_examples=50, deadline=None)
@given(x1=coordinate, x2=coordinate)
def test_gradient(x1: float, x2: float) -> None:
    """Test the chain rule gradient against central differences.

    :param x1: First state.
    :param x2: Second state.
    """
    cost = HorizonCost(benchmark2d(), np.array([[0.2], [-0.1], [0.4]]))
    z = np.array([x1, x2])
    expected = finite_difference_jacobian(
        lambda x: cost.value(x)[..., None], z
    )[0]
    np.testing.assert_allclose(cost.gradient(z), expected, atol=1e-5)


@pytest.mark.parametrize("length", [1, 5, 10])
def test_gradient_window_lengths(length: int) -> None:
    """Test the chain rule gradient for short and long windows.

    :param length: Window length.
    """
    rng = np.random.default_rng(SEED)
    cost = HorizonCost(benchmark2d(), rng.uniform(-1.0, 1.0, (length, 1)))
    for z in rng.uniform(-2.0, 2.0, (16, 2)):
        expected = finite_difference_jacobian(
            lambda x: cost.value(x)[..., None], z
        )[0]
        np.testing.assert_allclose(
            cost.gradient(z), expected, rtol=1e-6, atol=1e-5
        )


def test_weighted_stage() -> None:
    """Test a weighted quadratic matches the same user cost."""
    weight = np.array([[3.0]])
    window = np.array([[0.5], [1.0]])
    weighted = HorizonCost(
        linear1d(0.9), window, stage=StageCost(weight=weight)
    )
    user = HorizonCost(
        linear1d(0.9),
        window,
        stage=StageCost(
            kind="user", fn=lambda r: 3.0 * np.sum(r**2, axis=(-2, -1))
        ),
    )
    z = np.array([0.7])
    assert float(weighted.value(z)) == pytest.approx(float(user.value(z)))
    np.testing.assert_allclose(
        weighted.gradient(z), user.gradient(z), rtol=1e-6
    )


def test_noisy_value() -> None:
    """Test disturbances enter the prediction and the outputs."""
    cost = HorizonCost(linear1d(1.0), np.array([[0.0]]))
    value = cost.value_noisy(np.array([0.0]), w=[[0.2]], v=[[0.1]])
    assert float(value) == pytest.approx(0.09)
    np.testing.assert_allclose(
        cost.gradient_noisy(np.array([0.0]), w=[[0.2]], v=[[0.1]]), [0.6]
    )


def test_from_measurements() -> None:
    """Test the window is cut after the time index."""
    outputs = np.arange(10.0)
    cost = HorizonCost.from_measurements(linear1d(), outputs, 3, 4)
    np.testing.assert_array_equal(cost.window[:, 0], [4.0, 5.0, 6.0, 7.0])
    assert cost.N == 4
    assert cost.k == 3
    with pytest.raises(pymhe.exceptions.ConfigurationError) as err:
        HorizonCost.from_measurements(linear1d(), outputs, 6, 4)

    assert str(err.value) == pymhe.messages.WINDOW_TOO_SHORT.format(
        k=6, needed=11, available=10
    )


def test_certify() -> None:
    """Test the drift certificate ``l L <= 1/2``."""
    HorizonCost(linear1d(), [[0.0]], l_smooth=20.0, drift_L=0.025).certify()
    with pytest.raises(pymhe.exceptions.InfeasibleCertificateError) as err:
        HorizonCost(
            linear1d(), [[0.0]], l_smooth=20.0, drift_L=0.03
        ).certify()

    assert err.value.exit_code == 2


@pytest.mark.parametrize(
    "kwargs,message",
    [
        ({"kind": "cubic"}, "stage cost kind"),
        ({"kind": "user"}, "needs a callable"),
        ({"weight": np.array([[1.0, 2.0], [0.0, 1.0]])}, "positive definite"),
        ({"weight": np.array([[-1.0]])}, "positive definite"),
    ],
    ids=["kind", "callable", "asymmetric", "negative"],
)
def test_invalid_stage(kwargs: dict[str, object], message: str) -> None:
    """Test stage costs are validated on construction.

    :param kwargs: Stage cost fields.
    :param message: Expected part of the error.
    """
    with pytest.raises(pymhe.exceptions.ConfigurationError) as err:
        StageCost(**kwargs)  # type: ignore

    assert message in str(err.value)


def test_user_stage_must_vanish() -> None:
    """Test a user cost must be zero at zero residual."""
    with pytest.raises(pymhe.exceptions.ConfigurationError):
        HorizonCost(
            linear1d(),
            [[0.0]],
            stage=StageCost(kind="user", fn=lambda r: 1.0 + r.sum((-2, -1))),
        )


@pytest.mark.parametrize(
    "kwargs",
    [
        {"window": np.zeros((0, 1))},
        {"window": np.zeros((2, 2))},
        {"l_smooth": 0.0},
        {"drift_L": -1.0},
    ],
    ids=["empty", "dimension", "smoothness", "drift"],
)
def test_invalid_cost(kwargs: dict[str, object]) -> None:
    """Test windows and constants are validated on construction.

    :param kwargs: Fields to make invalid.
    """
    fields: dict[str, object] = {"window": np.zeros((1, 1))}
    fields.update(kwargs)
    with pytest.raises(pymhe.exceptions.ConfigurationError):
        HorizonCost(linear1d(), **fields)  # type: ignore


def test_estimate_smoothness() -> None:
    """Test sampled constants of a scalar quadratic."""
    cost = quadratic_cost(y=0.3)
    following = quadratic_cost(y=0.3)
    estimate = estimate_smoothness(
        cost, ([-1.0], [1.0]), samples=64, seed=SEED, following=following
    )
    assert estimate.l_hat == pytest.approx(2.0)
    assert estimate.L_hat == pytest.approx(0.0)
    assert 0 < estimate.l_w_hat <= 2.0 * np.sqrt(2.0) + 1e-9
    with pytest.raises(pymhe.exceptions.ConfigurationError):
        estimate_smoothness(cost, ([-1.0], [1.0]), samples=1)
