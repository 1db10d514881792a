"""
pymhe.w2
========

Moving-horizon estimation by proximal steps in the Wasserstein metric.

Every sample of the ensemble is moved by ``z -> prox_{eta G}(f_0(z))``.
The prox map is computed by gradient descent on the strongly convex
objective ``1/2 |z - v|^2 + eta G(z)`` with step ``1 / (1 + eta l)``.
"""

from __future__ import annotations as _annotations

import math as _math
import time as _time
import typing as _t
from dataclasses import dataclass as _dataclass
from dataclasses import field as _field

import numpy as _np
import numpy.typing as _npt

from . import messages as _messages
from .cost import HorizonCost as _HorizonCost
from .cost import StageCost as _StageCost
from .exceptions import ConfigurationError as _ConfigurationError
from .exceptions import ConvergenceError as _ConvergenceError
from .exceptions import InfeasibleCertificateError as _InfeasibleCertificate
from .model import Array as _Array
from .model import SystemModel as _SystemModel
from .model import Trajectory as _Trajectory

Gradient = _t.Callable[[_Array], _Array]

#: Allowed deviation of the weight total from 1.
WEIGHT_TOL = 1e-12


@_dataclass(frozen=True, eq=False)
class Ensemble:
    """Weighted samples representing the estimate at ``time_index``.

    :param samples: Array of shape ``(n, d_X)``.
    :param weights: Non-negative weights summing to 1, uniform if omitted.
    :param time_index: Time the ensemble estimates.
    :param seed_lineage: Seeds the ensemble was drawn and moved with.
    """

    samples: _Array
    weights: _Array = _field(default=None)  # type: ignore
    time_index: int = 0
    seed_lineage: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        samples = _np.atleast_2d(_np.asarray(self.samples, dtype=float))
        if not len(samples):
            raise _ConfigurationError(_messages.EMPTY_ENSEMBLE)

        if self.weights is None:
            weights = _np.full(len(samples), 1.0 / len(samples))
        else:
            weights = _np.asarray(self.weights, dtype=float)

        if len(weights) != len(samples):
            raise _ConfigurationError(
                _messages.LENGTH_MISMATCH.format(
                    left=len(weights), right=len(samples)
                )
            )

        if _np.any(weights < 0):
            raise _ConfigurationError(_messages.NEGATIVE_WEIGHTS)

        total = float(_np.sum(weights))
        if abs(total - 1.0) > WEIGHT_TOL:
            raise _ConfigurationError(
                _messages.UNNORMALIZED_WEIGHTS.format(total=total)
            )

        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def uniform(
        cls,
        samples: _npt.ArrayLike,
        time_index: int = 0,
        seed_lineage: tuple[int, ...] = (),
    ) -> Ensemble:
        """Equally weighted ensemble.

        :param samples: Array of shape ``(n, d_X)``.
        :param time_index: Time the ensemble estimates.
        :param seed_lineage: Seeds of the ensemble.
        :return: Ensemble.
        """
        return cls(
            _np.asarray(samples, dtype=float),
            time_index=time_index,
            seed_lineage=seed_lineage,
        )

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def dim(self) -> int:
        """State dimension of the samples."""
        return self.samples.shape[1]

    def mean(self) -> _Array:
        """Weighted mean of the samples."""
        return self.weights @ self.samples

    def diameter(self) -> float:
        """Diagonal of the bounding box of the support."""
        support = self.samples[self.weights > 0]
        return float(
            _np.linalg.norm(support.max(axis=0) - support.min(axis=0))
        )

    def ess(self) -> float:
        """Effective sample size ``1 / sum w_i^2``."""
        return float(1.0 / _np.sum(self.weights**2))

    def lineage_with(self, seeds: tuple[int, ...]) -> tuple[int, ...]:
        """Seed lineage after moving with ``seeds``.

        A run reusing its seeds step after step records them once.

        :param seeds: Seeds of the move.
        :return: Lineage of the moved ensemble.
        """
        if seeds and self.seed_lineage[-len(seeds) :] == seeds:
            return self.seed_lineage

        return self.seed_lineage + seeds


@_dataclass(frozen=True)
class DPConfig:
    """Entropy regularization weights ``s_k`` and the noise seed.

    A scalar ``s`` is used at every step; a sequence holds ``s_1, s_2,
    ...`` and its last entry repeats past its end.

    :param s: Regularization weights in ``(0, 1]``.
    :param seed: Seed of the privacy noise.
    """

    s: float | tuple[float, ...] = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        values = self.s if isinstance(self.s, tuple) else (self.s,)
        if not values or any(not 0 < i <= 1 for i in values):
            raise _ConfigurationError(
                _messages.BAD_SCHEDULE.format(value=self.s)
            )

    def at(self, k: int) -> float:
        """Weight of step ``k``, counted from 1.

        :param k: Time index.
        :return: ``s_k``.
        """
        if not isinstance(self.s, tuple):
            return float(self.s)

        return float(self.s[min(max(k, 1), len(self.s)) - 1])


@_dataclass(frozen=True)
class W2Config:  # pylint: disable=too-many-instance-attributes
    """Settings of the Wasserstein estimator.

    ``certified`` requires ``eta`` inside the window of ``eta_window``;
    ``permissive`` only requires ``eta * l < 1``.

    :param eta: Step size.
    :param N: Window length.
    :param l_smooth: Smoothness constant ``l`` of the horizon cost.
    :param drift_L: Drift constant ``L`` of the horizon cost.
    :param alpha: Radius bounding the step size in certified mode.
    :param inner_tol: Tolerance on the gradient of the prox objective.
    :param inner_max_iters: Iteration limit of the prox solver.
    :param mode: ``certified`` or ``permissive``.
    :param dp: Entropy regularization, none if omitted.
    :param stage: Stage cost of the horizon cost.
    """

    eta: float = 0.03
    N: int = 10  # pylint: disable=invalid-name
    l_smooth: float = 30.0
    drift_L: float = 0.01  # pylint: disable=invalid-name
    alpha: float = 1.0
    inner_tol: float = 1e-10
    inner_max_iters: int = 1000
    mode: str = "certified"
    dp: DPConfig | None = None
    stage: _StageCost = _field(default_factory=_StageCost)

    def __post_init__(self) -> None:
        for name in ("eta", "N", "l_smooth", "alpha", "inner_tol"):
            if getattr(self, name) <= 0:
                raise _ConfigurationError(
                    _messages.NOT_POSITIVE.format(
                        name=name, value=getattr(self, name)
                    )
                )

        if self.inner_max_iters < 1:
            raise _ConfigurationError(
                _messages.NOT_POSITIVE.format(
                    name="inner_max_iters", value=self.inner_max_iters
                )
            )

        if self.mode not in ("certified", "permissive"):
            raise _ConfigurationError(
                _messages.BAD_CHOICE.format(
                    section="estimation",
                    key="mode",
                    choices="certified, permissive",
                    value=self.mode,
                )
            )

    def validate(self) -> None:
        """Check the step size against the smoothness constants."""
        product = self.eta * self.l_smooth
        if product >= 1:
            raise _ConfigurationError(
                _messages.STRONG_CONVEXITY.format(product=product)
            )

        if self.mode == "certified":
            lo, hi = eta_window(self.l_smooth, self.drift_L, self.alpha)
            if not lo < self.eta < hi:
                raise _InfeasibleCertificate(
                    _messages.ETA_OUTSIDE_WINDOW.format(
                        eta=self.eta, lo=lo, hi=hi
                    )
                )

    def cost(
        self, model: _SystemModel, outputs: _npt.ArrayLike, k: int
    ) -> _HorizonCost:
        """Horizon cost of step ``k`` with these constants.

        :param model: System.
        :param outputs: Measurements ``y_0, y_1, ...``.
        :param k: Time index.
        :return: Horizon cost.
        """
        return _HorizonCost.from_measurements(
            model,
            outputs,
            k,
            self.N,
            stage=self.stage,
            l_smooth=self.l_smooth,
            drift_L=self.drift_L,
        )


def eta_window(l: float, L: float, alpha: float) -> tuple[float, float]:
    """Certified open interval of step sizes.

    :param l: Smoothness constant.
    :param L: Drift constant.
    :param alpha: Radius bounding the step size.
    :return: ``((1 - sqrt(1 - 2 l L)) / l, min(alpha, 1 / l))``.
    """
    if l <= 0 or alpha <= 0:
        raise _ConfigurationError(
            _messages.NOT_POSITIVE.format(
                name="l" if l <= 0 else "alpha", value=min(l, alpha)
            )
        )

    if L < 0:
        raise _ConfigurationError(
            _messages.NEGATIVE_CONSTANT.format(name="L", value=L)
        )

    if l * L > 0.5:
        raise _InfeasibleCertificate(
            _messages.LL_TOO_LARGE.format(product=l * L)
        )

    lo = (1.0 - _math.sqrt(1.0 - 2.0 * l * L)) / l
    hi = min(alpha, 1.0 / l)
    if lo >= hi:
        raise _InfeasibleCertificate(
            _messages.EMPTY_WINDOW.format(lo=lo, hi=hi)
        )

    return lo, hi


def _prox(  # pylint: disable=too-many-arguments
    gradient: Gradient,
    start: _Array,
    eta: float,
    l: float,
    inner_tol: float,
    inner_max_iters: int,
) -> _Array:
    # gradient descent on 1/2 |z - v|^2 + eta G(z), started at v
    step = 1.0 / (1.0 + eta * l)
    z = start
    residual = _np.zeros(start.shape[:-1])
    for _ in range(inner_max_iters):
        direction = (z - start) + eta * gradient(z)
        residual = _np.linalg.norm(direction, axis=-1)
        if _np.all(residual <= inner_tol):
            return z

        z = z - step * direction

    direction = (z - start) + eta * gradient(z)
    residual = _np.linalg.norm(direction, axis=-1)
    if _np.all(residual <= inner_tol):
        return z

    index = int(_np.argmax(residual)) if residual.ndim else None
    raise _ConvergenceError(
        z, float(_np.max(residual)), inner_tol, inner_max_iters, index
    )


def prox_step(  # pylint: disable=too-many-arguments
    cost: _HorizonCost,
    v: _npt.ArrayLike,
    eta: float,
    inner_tol: float = 1e-10,
    inner_max_iters: int = 1000,
) -> _Array:
    """Minimize ``1/2 |z - v|^2 + eta G(z)``.

    :param cost: Horizon cost ``G``, whose ``l_smooth`` sets the step.
    :param v: Start point or batch of start points.
    :param eta: Weight of the cost.
    :param inner_tol: Tolerance on the gradient of the objective.
    :param inner_max_iters: Iteration limit.
    :return: Minimizer, one per start point.
    """
    product = eta * cost.l_smooth
    if product >= 1:
        raise _ConfigurationError(
            _messages.STRONG_CONVEXITY.format(product=product)
        )

    start = cost.model.check_state(v, "v")
    return _prox(
        cost.gradient, start, eta, cost.l_smooth, inner_tol, inner_max_iters
    )


def _privatize(
    ensemble: Ensemble, samples: _Array, config: W2Config, k: int
) -> tuple[_Array, tuple[int, ...]]:
    if config.dp is None:
        return samples, ensemble.seed_lineage

    s = config.dp.at(k)
    lineage = ensemble.lineage_with((config.dp.seed,))
    if s == 1:
        return samples, lineage

    # entropy weight (1 - s) / s diffuses every sample over one step
    rng = _np.random.default_rng((config.dp.seed, k))
    std = _math.sqrt(2.0 * config.eta * (1.0 - s) / s)
    return samples + std * rng.standard_normal(samples.shape), lineage


def w2_step(
    ensemble: Ensemble, cost: _HorizonCost, config: W2Config
) -> Ensemble:
    """Move every sample by the prox map of the horizon cost.

    :param ensemble: Estimate at ``k - 1``.
    :param cost: Horizon cost of step ``k``.
    :param config: Estimator settings.
    :return: Estimate at ``k``.
    """
    config.validate()
    samples = _prox(
        cost.gradient,
        cost.model.f0(ensemble.samples),
        config.eta,
        cost.l_smooth,
        config.inner_tol,
        config.inner_max_iters,
    )
    k = ensemble.time_index + 1
    samples, lineage = _privatize(ensemble, samples, config, k)
    return Ensemble(samples, ensemble.weights, k, lineage)


@_dataclass(frozen=True)
class W2Result:
    """Ensembles and telemetry of an estimator run.

    :param ensembles: Ensembles at ``k = 0..T``.
    :param costs: Cost of every sample at ``k = 1..T``.
    :param grad_norms: Norm of the gradient each step followed, per sample
        at ``k = 1..T``.
    :param step_times: Wall time of every step in seconds.
    """

    ensembles: list[Ensemble]
    costs: _Array
    grad_norms: _Array
    step_times: list[float]

    @property
    def means(self) -> _Array:
        """Mean estimates at ``k = 0..T``."""
        return _np.array([i.mean() for i in self.ensembles])


def _run(  # pylint: disable=too-many-arguments
    model: _SystemModel,
    outputs: _npt.ArrayLike,
    prior: Ensemble,
    config: W2Config,
    T: int,
    propagate: _t.Callable[[_Array, int], _Array],
    gradient: _t.Callable[[_HorizonCost, int], Gradient],
) -> W2Result:
    config.validate()
    ensembles = [prior]
    costs, grad_norms, step_times = [], [], []
    for k in range(1, T + 1):
        start = _time.perf_counter()
        cost = config.cost(model, outputs, k)
        previous = ensembles[-1]
        followed = gradient(cost, k)
        samples = _prox(
            followed,
            propagate(previous.samples, k),
            config.eta,
            config.l_smooth,
            config.inner_tol,
            config.inner_max_iters,
        )
        samples, lineage = _privatize(previous, samples, config, k)
        ensembles.append(Ensemble(samples, previous.weights, k, lineage))
        step_times.append(_time.perf_counter() - start)
        costs.append(cost.value(samples))
        grad_norms.append(_np.linalg.norm(followed(samples), axis=-1))

    return W2Result(
        ensembles=ensembles,
        costs=_np.array(costs),
        grad_norms=_np.array(grad_norms),
        step_times=step_times,
    )


def run_w2(  # pylint: disable=too-many-arguments
    model: _SystemModel,
    outputs: _npt.ArrayLike,
    prior: Ensemble,
    config: W2Config,
    T: int,
) -> W2Result:
    """Run the estimator for ``k = 1..T``.

    The window of step ``k`` is ``y_{k+1}..y_{k+N}``, so ``outputs``
    must hold at least ``T + N + 1`` measurements.

    :param model: System.
    :param outputs: Measurements ``y_0, y_1, ...``.
    :param prior: Ensemble at ``k = 0``.
    :param config: Estimator settings.
    :param T: Number of steps.
    :return: Ensembles and telemetry.
    """
    return _run(
        model,
        outputs,
        prior,
        config,
        T,
        lambda samples, _: model.f0(samples),
        lambda cost, _: cost.gradient,
    )


def run_reference_w2(  # pylint: disable=too-many-arguments
    model: _SystemModel,
    trajectory: _Trajectory,
    prior: Ensemble,
    config: W2Config,
    T: int,
) -> W2Result:
    """Run the estimator that knows the recorded disturbances.

    Samples are propagated by ``f(z, w_{k-1})`` and the cost of step
    ``k`` predicts with ``w_k..w_{k+N-1}`` and ``v_{k+1}..v_{k+N}``.

    :param model: System.
    :param trajectory: Simulated trajectory with its disturbances.
    :param prior: Ensemble at ``k = 0``.
    :param config: Estimator settings.
    :param T: Number of steps.
    :return: Ensembles and telemetry.
    """
    process, measurement = trajectory.process, trajectory.measurement
    needed = T + config.N
    if len(process) < needed:
        raise _ConfigurationError(
            _messages.WINDOW_TOO_SHORT.format(
                k=T, needed=needed + 1, available=len(process) + 1
            )
        )

    def _gradient(cost: _HorizonCost, k: int) -> Gradient:
        w = process[k : k + config.N]
        v = measurement[k + 1 : k + config.N + 1]
        return lambda z: cost.gradient_noisy(z, w, v)

    return _run(
        model,
        trajectory.outputs,
        prior,
        config,
        T,
        lambda samples, k: model.step(samples, process[k - 1]),
        _gradient,
    )


@_dataclass(frozen=True)
class RobustnessBound:
    """Distance bound between the estimator and its noise-aware reference.

    :param C_k: Geometric series ``sum_{i=1}^k r^i``.
    :param bound: Bound on the Wasserstein distance.
    :param contraction_ratio: ``r = c_f1 / (1 - eta l)``.
    :param diverging: Whether ``r >= 1``.
    """

    C_k: float  # pylint: disable=invalid-name
    bound: float
    contraction_ratio: float
    diverging: bool


def robustness_bound(  # pylint: disable=too-many-arguments
    c_f1: float,
    c_f2: float,
    l: float,
    l_w: float,
    eta: float,
    N: int,
    W: float,
    V: float,
    k: float,
) -> RobustnessBound:
    """Evaluate the robustness bound after ``k`` steps.

    ``k`` may be ``math.inf`` for the limit of the series.

    :param c_f1: State Lipschitz constant of the dynamics.
    :param c_f2: Disturbance Lipschitz constant of the dynamics.
    :param l: Smoothness constant of the cost.
    :param l_w: Disturbance smoothness of the cost gradient.
    :param eta: Step size.
    :param N: Window length.
    :param W: Process noise bound.
    :param V: Measurement noise bound.
    :param k: Number of steps.
    :return: Series value, bound and ratio.
    """
    if c_f1 <= 0:
        raise _ConfigurationError(
            _messages.NOT_POSITIVE.format(name="c_f1", value=c_f1)
        )

    if eta * l >= 1:
        raise _ConfigurationError(
            _messages.STRONG_CONVEXITY.format(product=eta * l)
        )

    ratio = c_f1 / (1.0 - eta * l)
    if _math.isinf(k):
        series = ratio / (1.0 - ratio) if ratio < 1 else _math.inf
    elif ratio == 1:
        series = float(k)
    else:
        series = ratio * (1.0 - ratio**k) / (1.0 - ratio)

    bound = 0.0
    if W or V:
        bound = (c_f2 / c_f1) * W * series + (
            eta * l_w * _math.sqrt(N) / c_f1
        ) * (W + V) * series

    return RobustnessBound(series, bound, ratio, ratio >= 1)

