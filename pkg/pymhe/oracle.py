"""
pymhe.oracle
============

Exact grid recursions and probability metrics for checking estimators.

Densities live on uniform grids in one or two dimensions. The
pushforward through the dynamics scatters the mass of every cell from its
center into the neighbouring cells by linear (bilinear in 2D) splitting,
so no inverse of the dynamics is needed.
"""

from __future__ import annotations as _annotations

import math as _math
import typing as _t
from dataclasses import dataclass as _dataclass
from pathlib import Path as _Path

import numpy as _np
import numpy.typing as _npt
from scipy.optimize import linear_sum_assignment as _linear_sum_assignment
from scipy.spatial.distance import cdist as _cdist

from . import messages as _messages
from ._outputs import parse_value as _parse_value
from ._outputs import read_csv as _read_csv
from ._outputs import write_csv as _write_csv
from .cost import HorizonCost as _HorizonCost
from .cost import StageCost as _StageCost
from .exceptions import ConfigurationError as _ConfigurationError
from .exceptions import DegeneracyError as _DegeneracyError
from .exceptions import GridEscapeError as _GridEscapeError
from .model import Array as _Array
from .model import SystemModel as _SystemModel
from .model import output_sequence as _output_sequence
from .w2 import Ensemble as _Ensemble

CostFn = _t.Callable[[_Array], _Array]

#: Largest fraction of mass a pushforward may lose off the grid.
ESCAPE_TOL = 0.01

#: Allowed deviation of the total mass from 1.
MASS_TOL = 1e-9


@_dataclass(frozen=True)
class GridAxis:
    """Uniform partition of ``[lo, hi]`` into ``n_cells`` cells."""

    lo: float
    hi: float
    n_cells: int

    def __post_init__(self) -> None:
        if self.n_cells < 1:
            raise _ConfigurationError(
                _messages.NOT_POSITIVE.format(
                    name="n_cells", value=self.n_cells
                )
            )

        if self.hi <= self.lo:
            raise _ConfigurationError(
                _messages.OUT_OF_RANGE.format(
                    name="hi", interval=f"({self.lo}, inf)", value=self.hi
                )
            )

    @property
    def width(self) -> float:
        """Cell width."""
        return (self.hi - self.lo) / self.n_cells

    @property
    def centers(self) -> _Array:
        """Cell centers."""
        return self.lo + (_np.arange(self.n_cells) + 0.5) * self.width

    @property
    def edges(self) -> _Array:
        """Cell edges."""
        return _np.linspace(self.lo, self.hi, self.n_cells + 1)


@_dataclass(frozen=True, eq=False)
class GridDensity:
    """Piecewise constant density on a grid of at most two dimensions.

    :param axes: One axis per state coordinate.
    :param values: Density of every cell, shape ``(n_1[, n_2])``.
    """

    axes: tuple[GridAxis, ...]
    values: _Array

    def __post_init__(self) -> None:
        axes = tuple(self.axes)
        if not 1 <= len(axes) <= 2:
            raise _ConfigurationError(
                _messages.GRID_DIMENSION.format(dim=len(axes))
            )

        values = _np.asarray(self.values, dtype=float)
        expected = tuple(i.n_cells for i in axes)
        if values.shape != expected:
            raise _ConfigurationError(
                _messages.GRID_SHAPE.format(
                    got=values.shape, expected=expected
                )
            )

        if _np.any(values < 0):
            raise _ConfigurationError(_messages.NEGATIVE_DENSITY)

        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "values", values)

    @classmethod
    def uniform(cls, axes: _t.Sequence[GridAxis]) -> GridDensity:
        """Normalized constant density over the whole grid.

        :param axes: Grid axes.
        :return: Density.
        """
        shape = tuple(i.n_cells for i in axes)
        volume = _math.prod(i.hi - i.lo for i in axes)
        return cls(tuple(axes), _np.full(shape, 1.0 / volume))

    @classmethod
    def from_ensemble(
        cls, ensemble: _Ensemble, axes: _t.Sequence[GridAxis]
    ) -> GridDensity:
        """Weighted histogram of an ensemble, normalized on the grid.

        :param ensemble: Weighted samples.
        :param axes: Grid axes.
        :return: Density.
        """
        hist, _ = _np.histogramdd(
            ensemble.samples,
            bins=[i.edges for i in axes],
            weights=ensemble.weights,
        )
        return cls(tuple(axes), hist).normalize()

    @property
    def dim(self) -> int:
        """Number of coordinates."""
        return len(self.axes)

    @property
    def cell_volume(self) -> float:
        """Volume of one cell."""
        return _math.prod(i.width for i in self.axes)

    @property
    def mass(self) -> float:
        """Total mass."""
        return float(_np.sum(self.values) * self.cell_volume)

    @property
    def normalized(self) -> bool:
        """Whether the total mass is 1."""
        return abs(self.mass - 1.0) <= MASS_TOL

    def centers(self) -> _Array:
        """Cell centers in row-major order, shape ``(cells, d)``."""
        mesh = _np.meshgrid(*(i.centers for i in self.axes), indexing="ij")
        return _np.stack([i.reshape(-1) for i in mesh], axis=-1)

    def normalize(self) -> GridDensity:
        """Rescale to unit mass.

        :return: Normalized density.
        """
        return GridDensity(self.axes, self.values / self.mass)

    def mean(self) -> _Array:
        """Mean of the density."""
        weights = self.values.reshape(-1) * self.cell_volume
        return weights @ self.centers() / _np.sum(weights)

    def same_grid(self, other: GridDensity) -> bool:
        """Whether both densities share their axes.

        :param other: Density to compare with.
        :return: True if the grids coincide.
        """
        return self.axes == other.axes

    def to_csv(self, path: _Path) -> _Path:
        """Write cell centers and values.

        :param path: Destination file.
        :return: Path written.
        """
        header = [f"c_{i + 1}" for i in range(self.dim)] + ["value"]
        rows = [
            list(center) + [value]
            for center, value in zip(self.centers(), self.values.reshape(-1))
        ]
        return _write_csv(path, header, rows)

    @classmethod
    def from_csv(cls, path: _Path) -> GridDensity:
        """Read a density written by ``to_csv``.

        :param path: Source file.
        :return: Density.
        """
        _, rows = _read_csv(path)
        table = _np.array(
            [[_parse_value(i) for i in row] for row in rows], dtype=float
        )
        axes = []
        for column in table[:, :-1].T:
            centers = _np.unique(column)
            width = (
                (centers[-1] - centers[0]) / (len(centers) - 1)
                if len(centers) > 1
                else 1.0
            )
            axes.append(
                GridAxis(
                    float(centers[0] - width / 2),
                    float(centers[-1] + width / 2),
                    len(centers),
                )
            )

        shape = tuple(i.n_cells for i in axes)
        return cls(tuple(axes), table[:, -1].reshape(shape))


def _splits(
    axis: GridAxis, coordinate: _Array
) -> tuple[_Array, _Array, _Array, _Array]:
    # lower cell, upper cell, upper share and validity of every target
    position = (coordinate - axis.lo) / axis.width - 0.5
    valid = (position >= -0.5) & (position <= axis.n_cells - 0.5)
    position = _np.clip(position, 0.0, axis.n_cells - 1.0)
    lower = _np.minimum(_np.floor(position), max(axis.n_cells - 2, 0))
    share = position - lower
    upper = _np.minimum(lower + 1, axis.n_cells - 1)
    return lower.astype(int), upper.astype(int), share, valid


def pushforward(density: GridDensity, model: _SystemModel) -> GridDensity:
    """Transport a density through the undisturbed dynamics.

    :param density: Density to transport.
    :param model: System.
    :return: Transported density, with the escaped mass missing.
    """
    targets = model.f0(density.centers())
    mass = density.values.reshape(-1) * density.cell_volume
    shape = density.values.shape
    out = _np.zeros(shape)
    splits = [_splits(a, targets[:, i]) for i, a in enumerate(density.axes)]
    valid = _np.all([i[3] for i in splits], axis=0)
    corners = [((i[0], 1.0 - i[2]), (i[1], i[2])) for i in splits]
    if density.dim == 1:
        for index, share in corners[0]:
            _np.add.at(out, index[valid], (mass * share)[valid])
    else:
        for index_0, share_0 in corners[0]:
            for index_1, share_1 in corners[1]:
                _np.add.at(
                    out,
                    (index_0[valid], index_1[valid]),
                    (mass * share_0 * share_1)[valid],
                )

    return GridDensity(density.axes, out / density.cell_volume)


def grid_filter_step(  # pylint: disable=too-many-arguments
    density: GridDensity,
    model: _SystemModel,
    cost: _HorizonCost | CostFn,
    eta: float,
    s: float = 1.0,
) -> GridDensity:
    """One exact step of the tempered density recursion.

    The pushforward is raised to the power ``s``, multiplied by
    ``exp(-eta s G)`` at the cell centers and renormalized.

    :param density: Normalized density at ``k - 1``.
    :param model: System.
    :param cost: Horizon cost of step ``k`` or any vectorized cost.
    :param eta: Weight of the cost.
    :param s: Tempering power in ``(0, 1]``.
    :return: Normalized density at ``k``.
    """
    if not 0 < s <= 1:
        raise _ConfigurationError(
            _messages.OUT_OF_RANGE.format(name="s", interval="(0, 1]", value=s)
        )

    moved = pushforward(density, model)
    lost = 1.0 - moved.mass / density.mass
    if lost > ESCAPE_TOL:
        raise _GridEscapeError(lost)

    values = _np.asarray(
        (cost.value if isinstance(cost, _HorizonCost) else cost)(
            density.centers()
        ),
        dtype=float,
    ).reshape(moved.values.shape)
    with _np.errstate(divide="ignore"):
        log_values = s * _np.log(moved.values) - eta * s * values

    top = _np.max(log_values)
    if not _np.isfinite(top):
        k = cost.k if isinstance(cost, _HorizonCost) else -1
        raise _DegeneracyError(k, float(_np.min(values)))

    return GridDensity(density.axes, _np.exp(log_values - top)).normalize()


def _check_grids(p: GridDensity, q: GridDensity) -> None:
    if not p.same_grid(q):
        raise _ConfigurationError(_messages.GRID_MISMATCH)


def max_divergence(p: GridDensity, q: GridDensity) -> float:
    """Largest absolute log ratio of two densities.

    :param p: First density.
    :param q: Second density on the same grid.
    :return: Divergence, ``inf`` if the supports differ.
    """
    _check_grids(p, q)
    p_pos, q_pos = p.values > 0, q.values > 0
    if _np.any(p_pos != q_pos) or not _np.any(p_pos):
        return _math.inf

    return float(
        _np.max(_np.abs(_np.log(p.values[p_pos] / q.values[p_pos])))
    )


def kl_divergence(p: GridDensity, q: GridDensity) -> float:
    """Relative entropy of ``p`` with respect to ``q``.

    :param p: First density.
    :param q: Second density on the same grid.
    :return: Divergence, ``inf`` if ``q`` vanishes where ``p`` does not.
    """
    _check_grids(p, q)
    support = p.values > 0
    if _np.any(q.values[support] == 0):
        return _math.inf

    ratio = _np.log(p.values[support] / q.values[support])
    return float(_np.sum(p.values[support] * ratio) * p.cell_volume)


def total_variation(p: GridDensity, q: GridDensity) -> float:
    """Total variation distance of two densities.

    :param p: First density.
    :param q: Second density on the same grid.
    :return: Distance in ``[0, 1]``.
    """
    _check_grids(p, q)
    return float(0.5 * _np.sum(_np.abs(p.values - q.values)) * p.cell_volume)


def entropy(p: GridDensity) -> float:
    """Integral of ``rho log rho``; larger means more concentrated.

    :param p: Normalized density.
    :return: Entropy functional.
    """
    support = p.values > 0
    values = p.values[support]
    return float(_np.sum(values * _np.log(values)) * p.cell_volume)


def empirical_w2(a: _Ensemble, b: _Ensemble) -> float:
    """Wasserstein-2 distance of two equally weighted ensembles.

    One-dimensional ensembles are matched in sorted order; otherwise an
    exact assignment on squared distances is solved.

    :param a: First ensemble.
    :param b: Second ensemble of the same size.
    :return: Distance.
    """
    if len(a) != len(b):
        raise _ConfigurationError(
            _messages.UNEQUAL_ENSEMBLES.format(left=len(a), right=len(b))
        )

    if a.dim != b.dim:
        raise _ConfigurationError(
            _messages.DIMENSION_MISMATCH.format(
                what="ensemble", got=b.dim, expected=a.dim
            )
        )

    for ensemble in (a, b):
        if not _np.allclose(ensemble.weights, 1.0 / len(ensemble)):
            raise _ConfigurationError(_messages.NONUNIFORM_WEIGHTS)

    if a.dim == 1:
        squared = (_np.sort(a.samples[:, 0]) - _np.sort(b.samples[:, 0])) ** 2
    else:
        distances = _cdist(a.samples, b.samples, "sqeuclidean")
        rows, cols = _linear_sum_assignment(distances)
        squared = distances[rows, cols]

    return float(_np.sqrt(_np.mean(squared)))


def rmse(estimates: _npt.ArrayLike, truth: _npt.ArrayLike) -> _Array:
    """Root mean squared error of every coordinate.

    :param estimates: Estimated states, shape ``(T, d)``.
    :param truth: True states of the same shape.
    :return: One error per coordinate.
    """
    estimates = _np.asarray(estimates, dtype=float)
    truth = _np.asarray(truth, dtype=float)
    if len(estimates) != len(truth):
        raise _ConfigurationError(
            _messages.LENGTH_MISMATCH.format(
                left=len(estimates), right=len(truth)
            )
        )

    error = (estimates - truth).reshape(len(truth), -1)
    return _np.sqrt(_np.mean(error**2, axis=0))


class FullInformationEstimate(_t.NamedTuple):
    """Grid minimizers of the full-information cost."""

    minimizers: _Array
    values: _Array
    best: _Array


def fie_grid_search(  # pylint: disable=too-many-arguments
    model: _SystemModel,
    stage: _StageCost,
    outputs: _npt.ArrayLike,
    points: _npt.ArrayLike,
    tol: float = 1e-12,
) -> FullInformationEstimate:
    """Minimize ``J(y_{0:T}, h(x), ..., h(f_0^T(x)))`` over candidates.

    :param model: System.
    :param stage: Stage cost.
    :param outputs: Measurements ``y_0..y_T``.
    :param points: Candidate initial states, shape ``(m, d_X)``.
    :param tol: Cost slack within which candidates tie with the best.
    :return: Tied minimizers, cost of every candidate and the best one.
    """
    outputs = _np.asarray(outputs, dtype=float)
    if outputs.ndim == 1:
        outputs = outputs[:, None]

    candidates = _np.atleast_2d(model.check_state(points, "points"))
    predicted = _output_sequence(model, candidates, len(outputs) - 1)
    residuals = _np.swapaxes(predicted, 0, 1) - outputs
    values = stage.value(residuals)
    best = int(_np.argmin(values))
    ties = values <= values[best] + tol
    return FullInformationEstimate(candidates[ties], values, candidates[best])
