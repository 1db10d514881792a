"""
tests.privacy_test
==================
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

import pymhe
from pymhe.cost import HorizonCost
from pymhe.model import linear1d
from pymhe.oracle import GridAxis, GridDensity
from pymhe.privacy import (
    KINDS,
    PrivacyConstants,
    PrivacySchedule,
    check,
    dp_verify_on_grid,
    estimate_alpha,
    max_s_schedule,
    w2_pointwise_s_bound,
)

UNIT = PrivacyConstants(l=2.0, eta=0.1, c_f1=1.0, diam_K0=1.0)


@pytest.mark.parametrize(
    "kind,T,epsilon,expected",
    [
        ("w2_horizon", 10, 1.0, 1.0 / 3.0),
        ("kl_pointwise", 3, 0.04, 0.5436890127),
        ("kl_horizon", 2, 0.04, math.sqrt(2.0) - 1.0),
    ],
    ids=["w2-horizon", "kl-pointwise", "kl-horizon"],
)
def test_max_s_schedule(
    kind: str, T: int, epsilon: float, expected: float
) -> None:
    """Test the largest constant weight on the boundary of each condition.

    :param kind: Condition.
    :param T: Number of steps.
    :param epsilon: Privacy budget.
    :param expected: Boundary weight.
    """
    s_star = max_s_schedule(kind, UNIT, T, epsilon, 0.1)
    assert s_star == pytest.approx(expected, abs=1e-8)
    assert check(kind, PrivacySchedule(epsilon, 0.1, s_star, T, UNIT)).feasible


def test_w2_pointwise_bound() -> None:
    """Test the closed form bound of the final weight."""
    bound = w2_pointwise_s_bound(
        1.0, 0.1, l=1.0, eta=1.0, c_f1=1.0, diam_K0=1.0, T=5
    )
    assert bound == pytest.approx(1.0 / 1.2)
    constants = PrivacyConstants(l=1.0, eta=1.0, c_f1=1.0, diam_K0=1.0)
    assert max_s_schedule(
        "w2_pointwise", constants, 5, 1.0, 0.1
    ) == pytest.approx(1.0 / 1.2, abs=1e-8)
    with pytest.raises(pymhe.exceptions.ConfigurationError):
        w2_pointwise_s_bound(0.0, 0.1, 1.0, 1.0, 1.0, 1.0, 5)


def test_w2_pointwise_grows_with_contraction() -> None:
    """Test contracting dynamics admit a larger final weight."""
    expanding = w2_pointwise_s_bound(1.0, 0.1, 1.0, 1.0, 1.5, 1.0, 4)
    contracting = w2_pointwise_s_bound(1.0, 0.1, 1.0, 1.0, 0.5, 1.0, 4)
    assert contracting > expanding


@pytest.mark.parametrize("kind", KINDS)
def test_zero_radius_is_unconstrained(kind: str) -> None:
    """Test identical measurement sequences need no regularization.

    :param kind: Condition.
    """
    assert max_s_schedule(kind, UNIT, 5, 1.0, 0.0) == 1.0


def test_trivial_reports() -> None:
    """Test conditions without a finite right-hand side are trivial."""
    report = check("kl_horizon", PrivacySchedule(1.0, 0.0, 0.5, 3, UNIT))
    assert report.trivial
    assert report.feasible
    assert report.slack == math.inf
    assert report.assumptions == (pymhe.messages.INDEPENDENT_COUPLING,)


def test_unregularized_horizon_is_infeasible() -> None:
    """Test weight 1 makes the Wasserstein horizon sum diverge."""
    report = check("w2_horizon", PrivacySchedule(1.0, 0.1, 1.0, 3, UNIT))
    assert not report.feasible
    assert report.lhs == math.inf
    assert report.assumptions == (
        pymhe.messages.Q_MODULUS.format(name="identity"),
    )


def test_schedule_weights() -> None:
    """Test sequences hold their last weight to the horizon."""
    schedule = PrivacySchedule(1.0, 0.1, (0.2, 0.4), 4, UNIT)
    np.testing.assert_allclose(schedule.weights, [0.2, 0.4, 0.4, 0.4])
    assert schedule.dp_config(7).seed == 7


def test_decreasing_schedule_is_checked_per_step() -> None:
    """Test a per-step schedule against the constant one."""
    constant = check("kl_pointwise", PrivacySchedule(0.04, 0.1, 0.5, 3, UNIT))
    varying = check(
        "kl_pointwise", PrivacySchedule(0.04, 0.1, (0.9, 0.5, 0.5), 3, UNIT)
    )
    assert constant.lhs == pytest.approx(0.875)
    assert varying.lhs == pytest.approx(0.5 + 0.25 + 0.225)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"epsilon": 0.0},
        {"delta": -0.1},
        {"horizon_T": 0},
        {"s": 0.0},
        {"s": (0.5, 1.5)},
    ],
    ids=["epsilon", "delta", "horizon", "zero-weight", "large-weight"],
)
def test_invalid_schedule(kwargs: dict[str, object]) -> None:
    """Test schedules are validated on construction.

    :param kwargs: Field to make invalid.
    """
    fields: dict[str, object] = {
        "epsilon": 1.0,
        "delta": 0.1,
        "s": 0.5,
        "horizon_T": 3,
        "constants": UNIT,
    }
    fields.update(kwargs)
    with pytest.raises(pymhe.exceptions.ConfigurationError):
        PrivacySchedule(**fields)  # type: ignore


@pytest.mark.parametrize(
    "kwargs",
    [{"l": 0.0}, {"eta": -1.0}, {"c_f1": -1.0}, {"alpha": (0.1, -0.1)}],
    ids=["smoothness", "eta", "lipschitz", "alpha"],
)
def test_invalid_constants(kwargs: dict[str, object]) -> None:
    """Test constants are validated on construction.

    :param kwargs: Field to make invalid.
    """
    fields: dict[str, object] = {
        "l": 1.0,
        "eta": 1.0,
        "c_f1": 1.0,
        "diam_K0": 1.0,
    }
    fields.update(kwargs)
    with pytest.raises(pymhe.exceptions.ConfigurationError):
        PrivacyConstants(**fields)  # type: ignore


def test_alpha_schedule() -> None:
    """Test cost gaps hold their last value."""
    constants = PrivacyConstants(1.0, 1.0, 1.0, 1.0, alpha=(0.1, 0.2))
    assert [constants.alpha_at(k) for k in (1, 2, 5)] == [0.1, 0.2, 0.2]


def test_unknown_kind() -> None:
    """Test an unknown condition is a configuration error."""
    with pytest.raises(pymhe.exceptions.ConfigurationError) as err:
        check("renyi", PrivacySchedule(1.0, 0.1, 0.5, 3, UNIT))

    assert "renyi" in str(err.value)


@settings(max_examples=25, deadline=None)
@given(
    kind=st.sampled_from(KINDS),
    epsilon=st.floats(0.01, 5.0),
    factor=st.floats(1.0, 4.0),
    delta=st.floats(0.01, 0.5),
)
def test_budget_monotonicity(
    kind: str, epsilon: float, factor: float, delta: float
) -> None:
    """Test a larger budget or a closer neighbour never lowers ``s*``.

    :param kind: Condition.
    :param epsilon: Privacy budget.
    :param factor: Scale of the larger budget.
    :param delta: Adjacency radius.
    """
    s_star = max_s_schedule(kind, UNIT, 4, epsilon, delta)
    assert max_s_schedule(kind, UNIT, 4, epsilon * factor, delta) >= (
        s_star - 1e-9
    )
    assert max_s_schedule(kind, UNIT, 4, epsilon, delta * factor) <= (
        s_star + 1e-9
    )


@settings(max_examples=40, deadline=None)
@given(
    kind=st.sampled_from(KINDS),
    name=st.sampled_from(["diam_K0", "l", "eta"]),
    factor=st.floats(1.0, 4.0),
    epsilon=st.floats(0.01, 5.0),
)
def test_constant_monotonicity(
    kind: str, name: str, factor: float, epsilon: float
) -> None:
    """Test a larger support, smoothness or step size never raises ``s*``.

    :param kind: Condition.
    :param name: Constant that is scaled.
    :param factor: Scale of the larger constant.
    :param epsilon: Privacy budget.
    """
    larger = dataclasses.replace(UNIT, **{name: getattr(UNIT, name) * factor})
    assert max_s_schedule(kind, larger, 4, epsilon, 0.1) <= (
        max_s_schedule(kind, UNIT, 4, epsilon, 0.1) + 1e-9
    )


@settings(max_examples=40, deadline=None)
@given(
    kind=st.sampled_from(KINDS),
    T=st.integers(1, 20),
    epsilon=st.floats(0.01, 5.0),
    delta=st.floats(0.0, 0.5),
)
def test_max_s_is_feasible(
    kind: str, T: int, epsilon: float, delta: float
) -> None:
    """Test the largest weight satisfies its own condition.

    :param kind: Condition.
    :param T: Number of steps.
    :param epsilon: Privacy budget.
    :param delta: Adjacency radius.
    """
    s_star = max_s_schedule(kind, UNIT, T, epsilon, delta)
    assume(s_star > 0)
    report = check(kind, PrivacySchedule(epsilon, delta, s_star, T, UNIT))
    assert report.feasible
    assert report.trivial or report.slack >= -1e-9


def test_estimate_alpha() -> None:
    """Test the smallest cost gap over the probe points."""
    model = linear1d(1.0)
    alpha = estimate_alpha(
        HorizonCost(model, np.array([[0.3]])),
        HorizonCost(model, np.array([[0.4]])),
        model,
        [[0.0], [1.0]],
        2,
    )
    assert alpha == pytest.approx(0.07)


@pytest.fixture(name="grid_case")
def fixture_grid_case() -> dict[str, object]:
    """Scalar random walk observed on a grid with adjacent outputs.

    :return: Keyword arguments of the grid verification.
    """
    return {
        "model": linear1d(1.0),
        "measurements": np.full(8, 0.3),
        "adjacent": np.full(8, 0.4),
        "prior": GridDensity.uniform([GridAxis(-2.0, 2.0, 81)]),
        "N": 1,
    }


def test_dp_verify_within_budget(grid_case: dict[str, object]) -> None:
    """Test the largest particle filter weight keeps the divergence low.

    :param grid_case: Keyword arguments of the grid verification.
    """
    constants = PrivacyConstants(l=2.0, eta=0.5, c_f1=1.0, diam_K0=4.0)
    s_star = max_s_schedule("kl_pointwise", constants, 5, 0.5, 0.1)
    schedule = PrivacySchedule(0.5, 0.1, s_star, 5, constants)
    result = dp_verify_on_grid(schedule=schedule, **grid_case)  # type: ignore
    assert len(result.trace) == 5
    assert result.trace[-1] <= 0.25 + 1e-9
    assert result.within_budget


def test_dp_verify_unregularized(grid_case: dict[str, object]) -> None:
    """Test the plain filter exceeds the budget.

    :param grid_case: Keyword arguments of the grid verification.
    """
    constants = PrivacyConstants(l=2.0, eta=0.5, c_f1=1.0, diam_K0=4.0)
    schedule = PrivacySchedule(0.5, 0.1, 1.0, 5, constants)
    result = dp_verify_on_grid(schedule=schedule, **grid_case)  # type: ignore
    assert not result.within_budget
