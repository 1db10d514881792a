"""
tests.oracle_test
=================
"""

from __future__ import annotations

import itertools
import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import pymhe
from pymhe.cost import StageCost
from pymhe.model import linear1d, sine1d
from pymhe.oracle import (
    GridAxis,
    GridDensity,
    empirical_w2,
    entropy,
    fie_grid_search,
    grid_filter_step,
    kl_divergence,
    max_divergence,
    pushforward,
    rmse,
    total_variation,
)
from pymhe.w2 import Ensemble

from . import quadratic_cost

AXIS = GridAxis(-2.0, 2.0, 40)


def _gaussian(center: float, axis: GridAxis = AXIS) -> GridDensity:
    values = np.exp(-((axis.centers - center) ** 2))
    return GridDensity((axis,), values).normalize()


def test_grid_axis() -> None:
    """Test cell geometry of an axis."""
    axis = GridAxis(0.0, 1.0, 4)
    assert axis.width == 0.25
    np.testing.assert_allclose(axis.centers, [0.125, 0.375, 0.625, 0.875])
    np.testing.assert_allclose(axis.edges, [0.0, 0.25, 0.5, 0.75, 1.0])
    with pytest.raises(pymhe.exceptions.ConfigurationError):
        GridAxis(0.0, 1.0, 0)

    with pytest.raises(pymhe.exceptions.ConfigurationError):
        GridAxis(1.0, 1.0, 4)


def test_uniform_density() -> None:
    """Test the uniform density is normalized and centered."""
    density = GridDensity.uniform([AXIS, GridAxis(0.0, 1.0, 10)])
    assert density.dim == 2
    assert density.normalized
    assert density.mass == pytest.approx(1.0)
    np.testing.assert_allclose(density.mean(), [0.0, 0.5], atol=1e-12)
    assert density.centers().shape == (400, 2)


@pytest.mark.parametrize(
    "axes,values,message",
    [
        ((AXIS,) * 3, np.ones((40, 40, 40)), "1 or 2 dimensions"),
        ((AXIS,), np.ones(39), "grid values have shape"),
        ((AXIS,), -np.ones(40), "non-negative"),
    ],
    ids=["dimension", "shape", "negative"],
)
def test_invalid_density(
    axes: tuple[GridAxis, ...], values: np.ndarray, message: str
) -> None:
    """Test densities are validated on construction.

    :param axes: Grid axes.
    :param values: Cell values.
    :param message: Expected part of the error.
    """
    with pytest.raises(pymhe.exceptions.ConfigurationError) as err:
        GridDensity(axes, values)

    assert message in str(err.value)


@settings(max_examples=30, deadline=None)
@given(
    dim=st.integers(1, 2),
    size=st.integers(1, 8),
    seed=st.integers(0, 2**32 - 1),
)
def test_empirical_w2_triangle(dim: int, size: int, seed: int) -> None:
    """Test the matched distance obeys the triangle inequality.

    :param dim: State dimension.
    :param size: Number of samples of every ensemble.
    :param seed: Seed of the samples.
    """
    rng = np.random.default_rng(seed)
    a, b, c = (
        Ensemble.uniform(rng.normal(size=(size, dim))) for _ in range(3)
    )
    assert empirical_w2(a, c) <= empirical_w2(a, b) + empirical_w2(b, c) + (
        1e-9
    )


@pytest.mark.parametrize("seed", range(5))
def test_empirical_w2_exhaustive(seed: int) -> None:
    """Test the assignment against every matching of five points.

    :param seed: Seed of the samples.
    """
    rng = np.random.default_rng(seed)
    a, b = rng.normal(size=(2, 5, 2))
    expected = min(
        math.sqrt(np.mean(np.sum((a - b[list(i)]) ** 2, axis=-1)))
        for i in itertools.permutations(range(5))
    )
    assert empirical_w2(
        Ensemble.uniform(a), Ensemble.uniform(b)
    ) == pytest.approx(expected)


def test_from_ensemble() -> None:
    """Test the weighted histogram of an ensemble."""
    ensemble = Ensemble(np.array([[-1.5], [0.5]]), np.array([0.25, 0.75]))
    density = GridDensity.from_ensemble(ensemble, [GridAxis(-2.0, 2.0, 4)])
    assert density.normalized
    np.testing.assert_allclose(density.values, [0.25, 0.0, 0.75, 0.0])


def test_pushforward_identity() -> None:
    """Test the identity map leaves the density in place."""
    density = _gaussian(0.3)
    moved = pushforward(density, linear1d(1.0))
    np.testing.assert_allclose(moved.values, density.values, atol=1e-12)


def test_pushforward_contraction() -> None:
    """Test a contraction keeps the mass and halves the mean."""
    density = _gaussian(0.8)
    moved = pushforward(density, linear1d(0.5))
    assert moved.mass == pytest.approx(density.mass)
    assert moved.mean()[0] == pytest.approx(0.5 * density.mean()[0], abs=0.02)


def test_grid_escape() -> None:
    """Test an expansion losing mass off the grid is an error."""
    with pytest.raises(pymhe.exceptions.GridEscapeError) as err:
        grid_filter_step(
            GridDensity.uniform([AXIS]), linear1d(2.0), quadratic_cost(), 1.0
        )

    assert err.value.fraction == pytest.approx(0.5, abs=0.05)


def test_grid_filter_step() -> None:
    """Test one exact step against the closed form."""
    density = grid_filter_step(
        GridDensity.uniform([AXIS]), linear1d(1.0), quadratic_cost(y=0.5), 2.0
    )
    expected = np.exp(-2.0 * (AXIS.centers - 0.5) ** 2)
    expected /= expected.sum() * AXIS.width
    np.testing.assert_allclose(density.values, expected, rtol=1e-9)
    assert density.mean()[0] == pytest.approx(0.5, abs=5e-3)


def test_grid_filter_step_tempered() -> None:
    """Test tempering flattens the density and accepts plain callables."""
    prior = _gaussian(0.0)
    sharp = grid_filter_step(prior, linear1d(1.0), lambda z: 0 * z[:, 0], 1.0)
    flat = grid_filter_step(
        prior, linear1d(1.0), lambda z: 0 * z[:, 0], 1.0, s=0.5
    )
    assert entropy(flat) < entropy(sharp)
    with pytest.raises(pymhe.exceptions.ConfigurationError):
        grid_filter_step(prior, linear1d(1.0), quadratic_cost(), 1.0, s=0.0)


def test_divergences() -> None:
    """Test the divergences on equal, shifted and disjoint densities."""
    p, q = _gaussian(0.0), _gaussian(0.5)
    assert max_divergence(p, p) == 0.0
    assert kl_divergence(p, p) == pytest.approx(0.0)
    assert total_variation(p, p) == 0.0
    assert max_divergence(p, q) > kl_divergence(p, q) > 0
    assert 0 < total_variation(p, q) < 1
    left = np.zeros(40)
    left[:20] = 1.0
    disjoint_p = GridDensity((AXIS,), left).normalize()
    disjoint_q = GridDensity((AXIS,), left[::-1].copy()).normalize()
    assert max_divergence(disjoint_p, disjoint_q) == math.inf
    assert kl_divergence(disjoint_p, disjoint_q) == math.inf
    assert total_variation(disjoint_p, disjoint_q) == pytest.approx(1.0)


def test_entropy_of_uniform() -> None:
    """Test the entropy functional of the uniform density."""
    assert entropy(GridDensity.uniform([AXIS])) == pytest.approx(
        -math.log(4.0)
    )


def test_grid_mismatch() -> None:
    """Test metrics refuse densities on different grids."""
    other = _gaussian(0.0, GridAxis(-2.0, 2.0, 20))
    with pytest.raises(pymhe.exceptions.ConfigurationError) as err:
        total_variation(_gaussian(0.0), other)

    assert str(err.value) == pymhe.messages.GRID_MISMATCH


def test_density_csv(tmp_path: Path) -> None:
    """Test a written density reads back on the same cells.

    :param tmp_path: Create and return temporary directory.
    """
    density = GridDensity.uniform([GridAxis(0.0, 1.0, 4), AXIS])
    path = density.to_csv(tmp_path / "density.csv")
    restored = GridDensity.from_csv(path)
    assert restored.values.shape == (4, 40)
    np.testing.assert_allclose(restored.values, density.values)
    np.testing.assert_allclose(restored.centers(), density.centers())


def test_empirical_w2() -> None:
    """Test matched and shifted ensembles in one and two dimensions."""
    a = Ensemble.uniform([[0.0], [1.0]])
    assert empirical_w2(a, Ensemble.uniform([[1.0], [0.0]])) == 0.0
    assert empirical_w2(
        a, Ensemble.uniform([[0.5], [1.5]])
    ) == pytest.approx(0.5)
    b = Ensemble.uniform([[0.0, 0.0], [1.0, 0.0]])
    assert empirical_w2(
        b, Ensemble.uniform([[1.0, 0.0], [0.0, 0.0]])
    ) == pytest.approx(0.0)
    assert empirical_w2(
        b, Ensemble.uniform([[1.0, 2.0], [0.0, 2.0]])
    ) == pytest.approx(2.0)


@pytest.mark.parametrize(
    "other,message",
    [
        (Ensemble.uniform([[0.0], [1.0], [2.0]]), "resample to equal"),
        (Ensemble([[0.0], [1.0]], [0.9, 0.1]), "resample first"),
        (Ensemble.uniform([[0.0, 0.0], [1.0, 0.0]]), "has 2 entries"),
    ],
    ids=["size", "weights", "dimension"],
)
def test_empirical_w2_errors(other: Ensemble, message: str) -> None:
    """Test only comparable ensembles are matched.

    :param other: Ensemble to compare with.
    :param message: Expected part of the error.
    """
    with pytest.raises(pymhe.exceptions.ConfigurationError) as err:
        empirical_w2(Ensemble.uniform([[0.0], [1.0]]), other)

    assert message in str(err.value)


def test_rmse() -> None:
    """Test the error of every coordinate."""
    np.testing.assert_allclose(
        rmse([[1.0, 0.0], [3.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]),
        [math.sqrt(5.0), 0.0],
    )
    with pytest.raises(pymhe.exceptions.ConfigurationError):
        rmse([[1.0]], [[0.0], [0.0]])


def test_fie_grid_search() -> None:
    """Test the full-information minimizer of a constant record."""
    estimate = fie_grid_search(
        linear1d(1.0),
        StageCost(),
        np.full(4, 0.3),
        np.linspace(-1.0, 1.0, 21)[:, None],
    )
    assert estimate.best[0] == pytest.approx(0.3)
    assert estimate.values.shape == (21,)
    assert len(estimate.minimizers) == 1


def test_fie_grid_search_ties() -> None:
    """Test every candidate matching the outputs is a minimizer."""
    estimate = fie_grid_search(
        sine1d(), StageCost(), [0.0], [[0.0], [math.pi], [1.0]]
    )
    np.testing.assert_allclose(estimate.minimizers, [[0.0], [math.pi]])
