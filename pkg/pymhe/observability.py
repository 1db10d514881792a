"""
pymhe.observability
===================

Numerical checks of strong local observability.
"""

from __future__ import annotations as _annotations

import enum as _enum
from concurrent.futures import ThreadPoolExecutor as _ThreadPoolExecutor
from dataclasses import dataclass as _dataclass
from pathlib import Path as _Path

import numpy as _np
import numpy.typing as _npt

from . import messages as _messages
from ._outputs import write_csv as _write_csv
from .cost import HorizonCost as _HorizonCost
from .exceptions import ConfigurationError as _ConfigurationError
from .exceptions import PreconditionError as _PreconditionError
from .model import Array as _Array
from .model import NoiseSpec as _NoiseSpec
from .model import SystemModel as _SystemModel

#: Relative singular value threshold.
RANK_TOL = 1e-8

#: Absolute singular value threshold.
RANK_ATOL = 1e-10


def stacked_jacobian(
    model: _SystemModel,
    x: _npt.ArrayLike,
    T: int,
    w: _npt.ArrayLike | None = None,
) -> _Array:
    """Jacobian of the output sequence ``h(x), h(f_0(x)), ..., h(f_0^T(x))``.

    Row block ``j`` is ``grad h(x_j) @ grad f(x_{j-1}) @ ... @ grad
    f(x_0)``. Passing ``w`` differentiates the disturbed map instead.

    :param model: System.
    :param x: State or batch of states.
    :param T: Last index of the output sequence.
    :param w: Disturbances ``w_0..w_{T-1}``, zero if omitted.
    :return: Matrix of shape ``(..., (T + 1) d_Y, d_X)``.
    """
    state = model.check_state(x)
    disturbances = (
        _np.zeros((T, model.dim_disturbance))
        if w is None
        else _np.asarray(w, dtype=float).reshape(T, -1)
    )
    sensitivity = _np.broadcast_to(
        _np.eye(model.dim_state), state.shape[:-1] + (model.dim_state,) * 2
    )
    blocks = [model.jacobian_h(state) @ sensitivity]
    for j in range(T):
        sensitivity = model.jacobian_f(state, disturbances[j]) @ sensitivity
        state = model.step(state, disturbances[j])
        blocks.append(model.jacobian_h(state) @ sensitivity)

    return _np.concatenate(blocks, axis=-2)


def _rank(
    matrix: _Array, tol: float = RANK_TOL, atol: float = RANK_ATOL
) -> _Array:
    singular = _np.linalg.svd(matrix, compute_uv=False)
    threshold = _np.maximum(tol * singular[..., :1], atol)
    return _np.sum(singular > threshold, axis=-1)


def check_rank(  # pylint: disable=too-many-arguments
    model: _SystemModel,
    x: _npt.ArrayLike,
    T: int,
    tol: float = RANK_TOL,
    atol: float = RANK_ATOL,
) -> int:
    """Numerical rank of the stacked output Jacobian.

    Singular values count if they exceed ``max(tol * sigma_max, atol)``.

    :param model: System.
    :param x: State.
    :param T: Last index of the output sequence.
    :param tol: Relative threshold.
    :param atol: Absolute threshold.
    :return: Rank.
    """
    if tol <= 0:
        raise _ConfigurationError(
            _messages.NOT_POSITIVE.format(name="tol", value=tol)
        )

    return int(_rank(stacked_jacobian(model, x, T), tol, atol))


def check_rank_noisy(  # pylint: disable=too-many-arguments
    model: _SystemModel,
    x: _npt.ArrayLike,
    T: int,
    draws: int = 16,
    noise: _NoiseSpec | None = None,
    seed: int = 0,
    tol: float = RANK_TOL,
) -> int:
    """Smallest rank of the disturbed output Jacobian over sampled noise.

    :param model: System.
    :param x: State.
    :param T: Last index of the output sequence.
    :param draws: Number of sampled disturbance sequences.
    :param noise: Noise to sample from, zero if omitted.
    :param seed: Seed of the disturbance sampler.
    :param tol: Relative threshold.
    :return: Minimum rank over the draws.
    """
    noise = noise or _NoiseSpec()
    rng = _np.random.default_rng(seed)
    return min(
        int(
            _rank(
                stacked_jacobian(
                    model,
                    x,
                    T,
                    noise.draw_process(rng, (T, model.dim_disturbance)),
                ),
                tol,
            )
        )
        for _ in range(draws)
    )


@_dataclass(frozen=True)
class ObservabilityReport:
    """Ranks of the stacked output Jacobian on a probe grid.

    :param horizon_tested: Largest horizon scanned.
    :param grid: Probe states.
    :param ranks: Rank per probe state at ``horizon_tested``.
    :param min_horizon_estimate: Smallest horizon with full rank
        everywhere, ``None`` if there is none.
    :param failures: ``(state, T)`` pairs without full rank.
    :param scan: Ranks of shape ``(len(grid), horizon_tested + 1)``.
    """

    horizon_tested: int
    grid: _Array
    ranks: list[int]
    min_horizon_estimate: int | None
    failures: list[tuple[tuple[float, ...], int]]
    scan: _Array

    def to_csv(self, path: _Path) -> _Path:
        """Write one row per probe state and horizon.

        :param path: Destination file.
        :return: Path written.
        """
        header = [f"x_{i + 1}" for i in range(self.grid.shape[1])]
        rows = [
            list(point) + [T, int(self.scan[i, T])]
            for i, point in enumerate(self.grid)
            for T in range(self.horizon_tested + 1)
        ]
        return _write_csv(path, header + ["T", "rank"], rows)


def find_min_horizon(  # pylint: disable=too-many-arguments
    model: _SystemModel,
    grid: _npt.ArrayLike,
    T_max: int,
    tol: float = RANK_TOL,
    threads: int = 1,
) -> ObservabilityReport:
    """Scan horizons ``0..T_max`` for full rank at every probe state.

    :param model: System.
    :param grid: Probe states of shape ``(n, d_X)``.
    :param T_max: Largest horizon to scan.
    :param tol: Relative rank threshold.
    :param threads: Number of worker threads over chunks of the grid.
    :return: Observability report.
    """
    points = _np.atleast_2d(model.check_state(grid, "grid"))
    if not len(points):
        raise _ConfigurationError(_messages.EMPTY_GRID)

    if T_max < 0:
        raise _ConfigurationError(
            _messages.NEGATIVE_CONSTANT.format(name="T_max", value=T_max)
        )

    rows = model.dim_output

    def _scan(chunk: _Array) -> _Array:
        jacobian = stacked_jacobian(model, chunk, T_max)
        ranks = [
            _rank(jacobian[:, : (T + 1) * rows], tol)
            for T in range(T_max + 1)
        ]
        return _np.stack(ranks, axis=-1)

    chunks = _np.array_split(points, max(1, min(threads, len(points))))
    with _ThreadPoolExecutor(max_workers=max(1, threads)) as executor:
        scan = _np.concatenate(list(executor.map(_scan, chunks)), axis=0)

    full = scan >= model.dim_state
    minimum = next(
        (T for T in range(T_max + 1) if _np.all(full[:, T])), None
    )
    failures = [
        (tuple(float(i) for i in points[p]), T)
        for p in range(len(points))
        for T in range(T_max + 1)
        if not full[p, T]
    ]
    return ObservabilityReport(
        horizon_tested=T_max,
        grid=points,
        ranks=[int(i) for i in scan[:, T_max]],
        min_horizon_estimate=minimum,
        failures=failures,
        scan=scan,
    )


class Verdict(_enum.Enum):
    """Outcome of the second-order check at a critical point."""

    SATISFIED = "satisfied"
    VIOLATED = "violated"
    AT_GLOBAL_MIN = "at_global_min"


def _stage_curvature(cost: _HorizonCost, residuals: _Array) -> float:
    stage = cost.stage
    if stage.kind == "quadratic":
        if stage.weight is None:
            return 2.0

        return float(2.0 * _np.max(_np.linalg.eigvalsh(stage.weight)))

    flat = residuals.reshape(-1)
    step = 1e-5 * max(1.0, float(_np.linalg.norm(flat)))
    shape = residuals.shape
    columns = []
    for i in range(flat.size):
        offset = _np.zeros_like(flat)
        offset[i] = step
        upper = stage.residual_gradient((flat + offset).reshape(shape))
        lower = stage.residual_gradient((flat - offset).reshape(shape))
        columns.append((upper - lower).reshape(-1) / (2.0 * step))

    hessian = _np.array(columns)
    return float(_np.max(_np.linalg.eigvalsh(0.5 * (hessian + hessian.T))))


def check_second_order_condition(  # pylint: disable=too-many-arguments
    model: _SystemModel,
    cost: _HorizonCost,
    x: _npt.ArrayLike,
    tol: float = 1e-6,
    directions: int = 64,
    seed: int = 0,
) -> Verdict:
    """Test whether a critical point that is no global minimum is a maximum.

    For sampled directions ``u`` the check is
    ``<D^2 S[u, u], grad J> <= -lambda_max(hess J) |D S[u]|^2``, where
    ``S`` maps the estimate to its predicted outputs and ``J`` is the stage
    cost. Second derivatives of ``S`` are central differences.

    :param model: System the cost predicts with.
    :param cost: Horizon cost.
    :param x: Critical point.
    :param tol: Tolerance on the gradient norm and the global minimum.
    :param directions: Number of random directions besides the axes.
    :param seed: Seed of the direction sampler.
    :return: Verdict.
    """
    z = model.check_state(x)
    norm = float(_np.linalg.norm(cost.gradient(z)))
    if norm > tol:
        raise _PreconditionError(
            _messages.NOT_CRITICAL.format(norm=norm, tol=tol)
        )

    if float(cost.value(z)) <= tol:
        return Verdict.AT_GLOBAL_MIN

    residuals, rows = cost.linearize(z)
    grad_j = cost.stage.residual_gradient(residuals)
    curvature = _stage_curvature(cost, residuals)
    rng = _np.random.default_rng(seed)
    sampled = rng.normal(size=(directions, model.dim_state))
    candidates = _np.concatenate([_np.eye(model.dim_state), sampled])
    candidates /= _np.linalg.norm(candidates, axis=-1, keepdims=True)
    step = 1e-4 * max(1.0, float(_np.linalg.norm(z)))
    second = (
        cost.residuals(z + step * candidates)
        - 2.0 * residuals
        + cost.residuals(z - step * candidates)
    ) / step**2
    numerator = _np.einsum("njy,jy->n", second, grad_j)
    first = _np.einsum("jyd,nd->njy", rows, candidates)
    denominator = _np.sum(first**2, axis=(-2, -1))
    if _np.all(numerator <= (tol - curvature) * denominator + tol):
        return Verdict.SATISFIED

    return Verdict.VIOLATED
