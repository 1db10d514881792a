"""
pymhe.kl
========

Moving-horizon estimation as a particle filter.

Particles are propagated through the undisturbed dynamics and reweighted
by ``exp(-eta G)``. The entropy regularized variant tempers the predicted
density to the power ``s_k`` by widening a Gaussian kernel around each
particle and weights by ``exp(-eta s_k G)``.
"""

from __future__ import annotations as _annotations

import math as _math
import time as _time
import typing as _t
from dataclasses import dataclass as _dataclass
from dataclasses import field as _field

import numpy as _np
import numpy.typing as _npt
from scipy.special import logsumexp as _logsumexp

from . import messages as _messages
from .cost import HorizonCost as _HorizonCost
from .cost import StageCost as _StageCost
from .exceptions import ConfigurationError as _ConfigurationError
from .exceptions import DegeneracyError as _DegeneracyError
from .model import Array as _Array
from .model import SystemModel as _SystemModel
from .w2 import WEIGHT_TOL as _WEIGHT_TOL
from .w2 import DPConfig as _DPConfig
from .w2 import Ensemble as _Ensemble

Seed = _t.Union[int, _t.Tuple[int, ...]]

#: Largest log-weight below which every particle counts as dead.
LOG_UNDERFLOW = -700.0

# stream ids of the generators seeded with (seed, k, stream)
_JITTER, _RESAMPLE, _ROUGHEN = 0, 1, 2


@_dataclass(frozen=True)
class ParticleFilterConfig:  # pylint: disable=too-many-instance-attributes
    """Settings of the particle filter.

    :param eta: Weight of the horizon cost.
    :param N: Window length.
    :param n_particles: Number of particles.
    :param resample_threshold: Resample when the effective sample size
        drops below this fraction of ``n_particles``.
    :param jitter_bandwidth: Kernel bandwidth of the tempering jitter,
        Silverman's rule per coordinate if omitted.
    :param dp: Entropy regularization, none if omitted.
    :param roughening: Standard deviation of the jitter added after
        resampling, none if 0.
    :param stage: Stage cost of the horizon cost.
    """

    eta: float = 2.0
    N: int = 10  # pylint: disable=invalid-name
    n_particles: int = 30
    resample_threshold: float = 0.5
    jitter_bandwidth: float | None = None
    dp: _DPConfig | None = None
    roughening: float = 0.0
    stage: _StageCost = _field(default_factory=_StageCost)

    def __post_init__(self) -> None:
        for name in ("eta", "N", "n_particles"):
            if getattr(self, name) <= 0:
                raise _ConfigurationError(
                    _messages.NOT_POSITIVE.format(
                        name=name, value=getattr(self, name)
                    )
                )

        if not 0 < self.resample_threshold <= 1:
            raise _ConfigurationError(
                _messages.OUT_OF_RANGE.format(
                    name="resample_threshold",
                    interval="(0, 1]",
                    value=self.resample_threshold,
                )
            )

        for name in ("jitter_bandwidth", "roughening"):
            value = getattr(self, name)
            if value is not None and value < 0:
                raise _ConfigurationError(
                    _messages.NEGATIVE_CONSTANT.format(name=name, value=value)
                )


def systematic_resample(
    weights: _npt.ArrayLike, n: int, seed: Seed = 0
) -> _Array:
    """Draw ``n`` ancestors with one uniform offset.

    Index ``i`` is drawn ``floor(n w_i)`` or ``ceil(n w_i)`` times.

    :param weights: Normalized weights.
    :param n: Number of draws.
    :param seed: Seed of the offset.
    :return: Ancestor indices in ascending order.
    """
    weights = _np.asarray(weights, dtype=float)
    total = float(_np.sum(weights))
    if abs(total - 1.0) > _WEIGHT_TOL * max(1, len(weights)):
        raise _ConfigurationError(
            _messages.UNNORMALIZED_WEIGHTS.format(total=total)
        )

    if n < 1:
        raise _ConfigurationError(
            _messages.NOT_POSITIVE.format(name="n", value=n)
        )

    cumulative = _np.cumsum(weights)
    cumulative[-1] = 1.0
    offset = _np.random.default_rng(seed).uniform()
    positions = (_np.arange(n) + offset) / n
    indices = _np.searchsorted(cumulative, positions, side="right")
    return _np.minimum(indices, len(weights) - 1)


def silverman_bandwidth(particles: _Array, weights: _Array) -> _Array:
    """Kernel bandwidth per coordinate by Silverman's rule.

    :param particles: Array of shape ``(n, d)``.
    :param weights: Normalized weights.
    :return: Bandwidth of every coordinate.
    """
    n, dim = particles.shape
    mean = weights @ particles
    std = _np.sqrt(weights @ (particles - mean) ** 2)
    factor = (4.0 / (dim + 2.0)) ** (1.0 / (dim + 4.0))
    return factor * n ** (-1.0 / (dim + 4.0)) * std


class _Update(_t.NamedTuple):
    ensemble: _Ensemble
    ess: float
    resampled: bool


def _update(
    ensemble: _Ensemble,
    cost: _HorizonCost,
    config: ParticleFilterConfig,
    seed: Seed,
) -> _Update:
    k = ensemble.time_index + 1
    stream = (seed,) if isinstance(seed, int) else tuple(seed)
    particles = cost.model.f0(ensemble.samples)
    s = config.dp.at(k) if config.dp is not None else 1.0
    if s < 1:
        bandwidth = (
            config.jitter_bandwidth
            if config.jitter_bandwidth is not None
            else silverman_bandwidth(particles, ensemble.weights)
        )
        rng = _np.random.default_rng(stream + (k, _JITTER))
        std = bandwidth * _math.sqrt(1.0 / s - 1.0)
        particles = particles + std * rng.standard_normal(particles.shape)

    values = cost.value(particles)
    with _np.errstate(divide="ignore"):
        log_weights = _np.log(ensemble.weights) - config.eta * s * values

    if _np.max(log_weights) < LOG_UNDERFLOW:
        raise _DegeneracyError(k, float(_np.min(values)))

    weights = _np.exp(log_weights - _logsumexp(log_weights))
    weights /= _np.sum(weights)
    ess = float(1.0 / _np.sum(weights**2))
    resampled = ess < config.resample_threshold * len(weights)
    if resampled:
        indices = systematic_resample(
            weights, len(weights), stream + (k, _RESAMPLE)
        )
        particles = particles[indices]
        weights = _np.full(len(weights), 1.0 / len(weights))
        if config.roughening:
            rng = _np.random.default_rng(stream + (k, _ROUGHEN))
            particles = particles + config.roughening * rng.standard_normal(
                particles.shape
            )

    return _Update(
        _Ensemble(particles, weights, k, ensemble.lineage_with(stream)),
        ess,
        resampled,
    )


def kl_step(
    ensemble: _Ensemble,
    cost: _HorizonCost,
    config: ParticleFilterConfig,
    seed: Seed = 0,
) -> _Ensemble:
    """Propagate, reweight and possibly resample the particles.

    :param ensemble: Estimate at ``k - 1``.
    :param cost: Horizon cost of step ``k``.
    :param config: Filter settings.
    :param seed: Seed of the jitter and resampling streams.
    :return: Estimate at ``k``.
    """
    return _update(ensemble, cost, config, seed).ensemble


@_dataclass(frozen=True)
class KLResult:
    """Ensembles and telemetry of a filter run.

    :param ensembles: Ensembles at ``k = 0..T``.
    :param ess: Effective sample size before resampling at ``k = 1..T``.
    :param resampled: Whether step ``k`` resampled.
    :param step_times: Wall time of every step in seconds.
    """

    ensembles: list[_Ensemble]
    ess: list[float]
    resampled: list[bool]
    step_times: list[float]

    @property
    def means(self) -> _Array:
        """Weighted mean estimates at ``k = 0..T``."""
        return _np.array([i.mean() for i in self.ensembles])


def run_kl(  # pylint: disable=too-many-arguments
    model: _SystemModel,
    outputs: _npt.ArrayLike,
    prior: _Ensemble,
    config: ParticleFilterConfig,
    T: int,
    seed: Seed = 0,
) -> KLResult:
    """Run the filter for ``k = 1..T``.

    :param model: System.
    :param outputs: Measurements ``y_0, y_1, ...``, at least
        ``T + N + 1`` of them.
    :param prior: Particles at ``k = 0``.
    :param config: Filter settings.
    :param T: Number of steps.
    :param seed: Seed of the jitter and resampling streams.
    :return: Ensembles and telemetry.
    """
    ensembles = [prior]
    ess, resampled, step_times = [], [], []
    for k in range(1, T + 1):
        start = _time.perf_counter()
        cost = _HorizonCost.from_measurements(
            model, outputs, k, config.N, stage=config.stage
        )
        update = _update(ensembles[-1], cost, config, seed)
        step_times.append(_time.perf_counter() - start)
        ensembles.append(update.ensemble)
        ess.append(update.ess)
        resampled.append(update.resampled)

    return KLResult(ensembles, ess, resampled, step_times)
