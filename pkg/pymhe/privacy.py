"""
pymhe.privacy
=============

Privacy budgets of the entropy regularized estimators.

Each calculator evaluates a sufficient condition on the regularization
weights ``s_k`` for ``epsilon``-differential privacy with respect to
measurement sequences that are ``delta`` apart. The grid recursion gives
an empirical check of the same guarantee.
"""

from __future__ import annotations as _annotations

import math as _math
import typing as _t
from concurrent.futures import ThreadPoolExecutor as _ThreadPoolExecutor
from dataclasses import dataclass as _dataclass
from dataclasses import field as _field

import numpy as _np
import numpy.typing as _npt

from . import messages as _messages
from .cost import HorizonCost as _HorizonCost
from .cost import StageCost as _StageCost
from .exceptions import ConfigurationError as _ConfigurationError
from .model import SystemModel as _SystemModel
from .model import iterate_f0 as _iterate_f0
from .oracle import GridDensity as _GridDensity
from .oracle import grid_filter_step as _grid_filter_step
from .oracle import max_divergence as _max_divergence
from .w2 import DPConfig as _DPConfig

QModulus = _t.Callable[[float], float]

#: Schedule kinds accepted by ``max_s_schedule``.
KINDS = ("w2_pointwise", "w2_horizon", "kl_pointwise", "kl_horizon")

#: Width of the bracket at which bisection stops.
BISECTION_TOL = 1e-10


def identity(delta: float) -> float:
    """Default class-K modulus ``q(delta) = delta``."""
    return delta


@_dataclass(frozen=True)
class PrivacyConstants:  # pylint: disable=too-many-instance-attributes
    """System and cost constants entering the privacy bounds.

    :param l: Smoothness constant of the horizon cost.
    :param eta: Step size or cost weight of the estimator.
    :param c_f1: State Lipschitz constant of the dynamics.
    :param diam_K0: Diameter of the support of the prior.
    :param alpha: Cost gap ``alpha_k``, a constant or one value per step.
    :param q_modulus: Class-K modulus of the potential sensitivity.
    :param q_name: Name of ``q_modulus`` for reports.
    """

    l: float
    eta: float
    c_f1: float
    diam_K0: float  # pylint: disable=invalid-name
    alpha: float | tuple[float, ...] = 0.0
    q_modulus: QModulus = _field(default=identity, compare=False)
    q_name: str = "identity"

    def __post_init__(self) -> None:
        for name in ("l", "eta"):
            if getattr(self, name) <= 0:
                raise _ConfigurationError(
                    _messages.NOT_POSITIVE.format(
                        name=name, value=getattr(self, name)
                    )
                )

        alphas = self.alpha if isinstance(self.alpha, tuple) else (self.alpha,)
        for name, value in [("c_f1", self.c_f1), ("diam_K0", self.diam_K0)] + [
            ("alpha", i) for i in alphas
        ]:
            if value < 0:
                raise _ConfigurationError(
                    _messages.NEGATIVE_CONSTANT.format(name=name, value=value)
                )

    def alpha_at(self, k: int) -> float:
        """Cost gap of step ``k``, counted from 1.

        :param k: Time index.
        :return: ``alpha_k``.
        """
        if not isinstance(self.alpha, tuple):
            return float(self.alpha)

        return float(self.alpha[min(max(k, 1), len(self.alpha)) - 1])


@_dataclass(frozen=True)
class PrivacySchedule:
    """Budget, adjacency radius and regularization weights.

    :param epsilon: Privacy budget.
    :param delta: Adjacency radius of measurement sequences.
    :param s: Weights ``s_1..s_T`` or one constant weight.
    :param horizon_T: Number of steps ``T``.
    :param constants: System and cost constants.
    """

    epsilon: float
    delta: float
    s: float | tuple[float, ...]
    horizon_T: int  # pylint: disable=invalid-name
    constants: PrivacyConstants

    def __post_init__(self) -> None:
        if self.epsilon <= 0:
            raise _ConfigurationError(
                _messages.NOT_POSITIVE.format(
                    name="epsilon", value=self.epsilon
                )
            )

        if self.delta < 0:
            raise _ConfigurationError(
                _messages.NEGATIVE_CONSTANT.format(
                    name="delta", value=self.delta
                )
            )

        if self.horizon_T < 1:
            raise _ConfigurationError(
                _messages.NOT_POSITIVE.format(
                    name="horizon_T", value=self.horizon_T
                )
            )

        # validates the weights
        self.dp_config()

    @property
    def weights(self) -> _np.ndarray:
        """Weights ``s_1..s_T``."""
        config = self.dp_config()
        return _np.array([config.at(k) for k in range(1, self.horizon_T + 1)])

    def dp_config(self, seed: int = 0) -> _DPConfig:
        """Regularization settings for the estimators.

        :param seed: Seed of the privacy noise.
        :return: Regularization settings.
        """
        return _DPConfig(self.s, seed)


@_dataclass(frozen=True)
class FeasibilityReport:  # pylint: disable=too-many-instance-attributes
    """Verdict of one sufficient privacy condition ``lhs <= rhs``.

    :param kind: Name of the condition.
    :param feasible: Whether the condition holds.
    :param lhs: Left-hand side.
    :param rhs: Right-hand side.
    :param slack: ``rhs - lhs``.
    :param trivial: Whether the condition holds for every schedule.
    :param assumptions: Modelling choices the verdict rests on.
    :param backed: Whether the constants agree with the system.
    """

    kind: str
    feasible: bool
    lhs: float
    rhs: float
    slack: float
    trivial: bool = False
    assumptions: tuple[str, ...] = ()
    backed: bool = True


def _report(
    kind: str, lhs: float, rhs: float, assumptions: tuple[str, ...]
) -> FeasibilityReport:
    trivial = _math.isinf(rhs)
    slack = _math.inf if trivial else rhs - lhs
    return FeasibilityReport(
        kind, lhs <= rhs, lhs, rhs, slack, trivial, assumptions
    )


def w2_pointwise_s_bound(  # pylint: disable=too-many-arguments
    eps_T: float,
    delta: float,
    l: float,
    eta: float,
    c_f1: float,
    diam_K0: float,
    T: int,
    q_modulus: QModulus = identity,
) -> float:
    """Largest final weight ``s_T`` with ``epsilon_T`` privacy at step ``T``.

    :param eps_T: Budget of the final marginal.
    :param delta: Adjacency radius.
    :param l: Smoothness constant.
    :param eta: Step size.
    :param c_f1: State Lipschitz constant.
    :param diam_K0: Diameter of the prior support.
    :param T: Step index.
    :param q_modulus: Class-K modulus, ``q(0)`` must vanish.
    :return: Bound clamped to ``(0, 1]``.
    """
    if eps_T <= 0:
        raise _ConfigurationError(
            _messages.NOT_POSITIVE.format(name="eps_T", value=eps_T)
        )

    spread = c_f1**T * diam_K0
    denominator = eps_T + spread * (
        eta * l * delta + spread * q_modulus(delta)
    )
    return min(1.0, eps_T / denominator)


def w2_horizon_feasible(schedule: PrivacySchedule) -> FeasibilityReport:
    """Check ``sum_k s_k / (1 - s_k) c^k <= epsilon / (l delta diam)``.

    :param schedule: Budget and weights.
    :return: Verdict.
    """
    constants = schedule.constants
    assumptions = (_messages.Q_MODULUS.format(name=constants.q_name),)
    denominator = constants.l * schedule.delta * constants.diam_K0
    if denominator == 0:
        return _report("w2_horizon", 0.0, _math.inf, assumptions)

    lhs = 0.0
    for k, s in enumerate(schedule.weights, start=1):
        if s >= 1:
            lhs = _math.inf
            break

        lhs += s / (1.0 - s) * constants.c_f1**k

    return _report(
        "w2_horizon", lhs, schedule.epsilon / denominator, assumptions
    )


def _kl_rhs(schedule: PrivacySchedule, epsilon: float) -> float:
    constants = schedule.constants
    spread = max(
        constants.alpha_at(k)
        + constants.l
        * constants.c_f1**k
        * schedule.delta
        * constants.diam_K0
        for k in range(1, schedule.horizon_T + 1)
    )
    if spread == 0:
        return _math.inf

    return epsilon / (2.0 * constants.eta * spread)


def _products(weights: _np.ndarray, end: int) -> float:
    # sum over j <= end of prod_{i=j}^{end} s_i
    return float(_np.sum(_np.cumprod(weights[:end][::-1])))


def kl_pointwise_feasible(schedule: PrivacySchedule) -> FeasibilityReport:
    """Check the budget of the final marginal of the particle filter.

    :param schedule: Budget and weights.
    :return: Verdict.
    """
    weights = schedule.weights
    return _report(
        "kl_pointwise",
        _products(weights, len(weights)),
        _kl_rhs(schedule, schedule.epsilon),
        (),
    )


def kl_horizon_feasible(schedule: PrivacySchedule) -> FeasibilityReport:
    """Check the budget of the whole estimate sequence.

    :param schedule: Budget and weights.
    :return: Verdict.
    """
    weights = schedule.weights
    lhs = sum(_products(weights, k) for k in range(1, len(weights) + 1))
    return _report(
        "kl_horizon",
        lhs,
        _kl_rhs(schedule, schedule.epsilon),
        (_messages.INDEPENDENT_COUPLING,),
    )


_CHECKS: dict[str, _t.Callable[[PrivacySchedule], FeasibilityReport]] = {
    "w2_horizon": w2_horizon_feasible,
    "kl_pointwise": kl_pointwise_feasible,
    "kl_horizon": kl_horizon_feasible,
}


def check(kind: str, schedule: PrivacySchedule) -> FeasibilityReport:
    """Evaluate the condition named ``kind``.

    :param kind: One of ``KINDS``.
    :param schedule: Budget and weights.
    :return: Verdict.
    """
    if kind == "w2_pointwise":
        constants = schedule.constants
        bound = w2_pointwise_s_bound(
            schedule.epsilon,
            schedule.delta,
            constants.l,
            constants.eta,
            constants.c_f1,
            constants.diam_K0,
            schedule.horizon_T,
            constants.q_modulus,
        )
        return _report(
            kind,
            float(schedule.weights[-1]),
            bound,
            (_messages.Q_MODULUS.format(name=constants.q_name),),
        )

    try:
        return _CHECKS[kind](schedule)
    except KeyError as err:
        raise _ConfigurationError(
            _messages.BAD_CHOICE.format(
                section="privacy",
                key="kind",
                choices=", ".join(KINDS),
                value=kind,
            )
        ) from err


def max_s_schedule(  # pylint: disable=too-many-arguments
    kind: str,
    constants: PrivacyConstants,
    T: int,
    epsilon: float,
    delta: float,
) -> float:
    """Largest constant weight satisfying the condition named ``kind``.

    :param kind: One of ``KINDS``.
    :param constants: System and cost constants.
    :param T: Number of steps.
    :param epsilon: Privacy budget.
    :param delta: Adjacency radius.
    :return: ``s*`` in ``(0, 1]``, 1 when unconstrained.
    """

    def _feasible(s: float) -> bool:
        return check(
            kind, PrivacySchedule(epsilon, delta, s, T, constants)
        ).feasible

    if _feasible(1.0):
        return 1.0

    lo, hi = 0.0, 1.0
    while hi - lo > BISECTION_TOL:
        mid = 0.5 * (lo + hi)
        if _feasible(mid):
            lo = mid
        else:
            hi = mid

    return lo


def estimate_alpha(  # pylint: disable=too-many-arguments
    cost: _HorizonCost,
    adjacent_cost: _HorizonCost,
    model: _SystemModel,
    points: _npt.ArrayLike,
    k: int,
) -> float:
    """Grid estimate of ``min |G - G~|`` over ``f_0^k`` of the prior support.

    :param cost: Horizon cost under the original measurements.
    :param adjacent_cost: Horizon cost under adjacent measurements.
    :param model: System.
    :param points: Samples of the prior support.
    :param k: Number of applications of the dynamics.
    :return: Smallest absolute cost gap.
    """
    moved = _iterate_f0(model, _np.atleast_2d(points), k)
    return float(
        _np.min(_np.abs(cost.value(moved) - adjacent_cost.value(moved)))
    )


@_dataclass(frozen=True)
class DPVerification:
    """Empirical max-divergence of two grid recursions.

    :param trace: ``D_max`` after every step.
    :param epsilon: Budget the schedule was built for.
    :param within_budget: Whether the final divergence is within budget.
    """

    trace: list[float]
    epsilon: float
    within_budget: bool


def dp_verify_on_grid(  # pylint: disable=too-many-arguments
    model: _SystemModel,
    measurements: _npt.ArrayLike,
    adjacent: _npt.ArrayLike,
    schedule: PrivacySchedule,
    prior: _GridDensity,
    N: int,
    stage: _StageCost | None = None,
) -> DPVerification:
    """Run the tempered grid recursion under two measurement sequences.

    :param model: System of at most two dimensions.
    :param measurements: Measurements ``y_0, y_1, ...``.
    :param adjacent: Measurements within ``delta`` of ``measurements``.
    :param schedule: Budget and weights; ``constants.eta`` weighs the
        cost.
    :param prior: Normalized density at ``k = 0``.
    :param N: Window length.
    :param stage: Stage cost, quadratic if omitted.
    :return: Divergence trace and verdict.
    """
    stage = stage or _StageCost()
    weights = schedule.weights
    eta = schedule.constants.eta

    def _recursion(outputs: _npt.ArrayLike) -> list[_GridDensity]:
        densities = [prior]
        for k in range(1, schedule.horizon_T + 1):
            cost = _HorizonCost.from_measurements(
                model, outputs, k, N, stage=stage
            )
            densities.append(
                _grid_filter_step(
                    densities[-1], model, cost, eta, float(weights[k - 1])
                )
            )

        return densities[1:]

    with _ThreadPoolExecutor(max_workers=2) as executor:
        original, other = executor.map(_recursion, (measurements, adjacent))

    trace = [_max_divergence(p, q) for p, q in zip(original, other)]
    return DPVerification(
        trace, schedule.epsilon, trace[-1] <= schedule.epsilon
    )
