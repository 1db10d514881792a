"""
pymhe.model
===========

Autonomous discrete-time systems with bounded disturbances.

A system is ``x_{k+1} = f(x_k, w_k)`` with outputs ``y_k = h(x_k) + v_k``.
All callables are vectorized over leading axes: ``f`` maps ``(..., d_X)``
states and ``(..., d_W)`` disturbances to ``(..., d_X)`` states, ``h``
maps states to ``(..., d_Y)`` outputs and Jacobians return
``(..., m, d_X)`` matrices.
"""

from __future__ import annotations as _annotations

import math as _math
import typing as _t
import warnings as _warnings
from dataclasses import dataclass as _dataclass
from pathlib import Path as _Path

import numpy as _np
import numpy.typing as _npt

from . import messages as _messages
from ._outputs import parse_value as _parse_value
from ._outputs import read_csv as _read_csv
from ._outputs import write_csv as _write_csv
from .exceptions import ConfigurationError as _ConfigurationError
from .exceptions import LipschitzWarning as _LipschitzWarning
from .exceptions import NameConflictError as _NameConflictError
from .exceptions import NoiseBoundError as _NoiseBoundError

Array = _npt.NDArray[_np.float64]
Dynamics = _t.Callable[[Array, Array], Array]
Output = _t.Callable[[Array], Array]
Jacobian = _t.Callable[[Array], Array]
Sampler = _t.Callable[[_np.random.Generator, _t.Tuple[int, ...]], Array]
SystemFactory = _t.Callable[..., "SystemModel"]

#: Relative step of central finite differences.
FD_STEP = 1e-6


def finite_difference_jacobian(
    fn: _t.Callable[[Array], Array], x: Array
) -> Array:
    """Central difference Jacobian of a vectorized map.

    The step is ``1e-6 * max(1, |x|)`` for each state in the batch.

    :param fn: Map from ``(..., d)`` to ``(..., m)``.
    :param x: Points of shape ``(..., d)``.
    :return: Jacobians of shape ``(..., m, d)``.
    """
    x = _np.asarray(x, dtype=float)
    step = FD_STEP * _np.maximum(
        1.0, _np.linalg.norm(x, axis=-1, keepdims=True)
    )
    columns = []
    for i in range(x.shape[-1]):
        offset = _np.zeros_like(x)
        offset[..., i] = step[..., 0]
        upper = _np.asarray(fn(x + offset), dtype=float)
        lower = _np.asarray(fn(x - offset), dtype=float)
        columns.append((upper - lower) / (2.0 * step))

    return _np.stack(columns, axis=-1)


def _check_nonnegative(**constants: float) -> None:
    for name, value in constants.items():
        if value < 0:
            raise _ConfigurationError(
                _messages.NEGATIVE_CONSTANT.format(name=name, value=value)
            )


@_dataclass(frozen=True)
class SystemModel:  # pylint: disable=too-many-instance-attributes
    """Discrete-time system with Lipschitz metadata.

    The Lipschitz constants are declarations made by the user; they feed
    the robustness and privacy bounds and can be checked with
    ``check_lipschitz``.

    :param dim_state: State dimension.
    :param dim_output: Output dimension.
    :param f: Dynamics ``f(x, w)``.
    :param h: Output map ``h(x)``.
    :param dim_disturbance: Disturbance dimension, defaults to
        ``dim_state``.
    :param jac_f: Jacobian of ``f(., 0)``, finite differences if absent.
    :param jac_h: Jacobian of ``h``, finite differences if absent.
    :param c_f1: State Lipschitz constant of ``f``.
    :param c_f2: Disturbance Lipschitz constant of ``f``.
    :param c_h: Lipschitz constant of ``h``.
    :param name: Registry name or a free label.
    """

    dim_state: int
    dim_output: int
    f: Dynamics
    h: Output
    dim_disturbance: int = 0
    jac_f: Jacobian | None = None
    jac_h: Jacobian | None = None
    c_f1: float = 0.0
    c_f2: float = 0.0
    c_h: float = 0.0
    name: str = "custom"

    def __post_init__(self) -> None:
        for key in ("dim_state", "dim_output"):
            value = getattr(self, key)
            if value < 1:
                raise _ConfigurationError(
                    _messages.NOT_POSITIVE.format(name=key, value=value)
                )

        if self.dim_disturbance < 1:
            object.__setattr__(self, "dim_disturbance", self.dim_state)

        _check_nonnegative(c_f1=self.c_f1, c_f2=self.c_f2, c_h=self.c_h)

    def check_state(self, x: _npt.ArrayLike, what: str = "state") -> Array:
        """Convert to a float array and validate the trailing dimension.

        :param x: State or batch of states.
        :param what: Name used in the error message.
        :return: Float array.
        """
        x = _np.asarray(x, dtype=float)
        if x.ndim == 0 or x.shape[-1] != self.dim_state:
            raise _ConfigurationError(
                _messages.DIMENSION_MISMATCH.format(
                    what=what,
                    got=x.shape[-1] if x.ndim else 1,
                    expected=self.dim_state,
                )
            )

        return x

    def zero_disturbance(self, x: Array) -> Array:
        """Zero disturbance matching the batch shape of ``x``.

        :param x: State or batch of states.
        :return: Zeros of shape ``(..., d_W)``.
        """
        return _np.zeros(x.shape[:-1] + (self.dim_disturbance,))

    def step(self, x: Array, w: Array) -> Array:
        """Apply the dynamics ``f(x, w)``.

        :param x: State or batch of states.
        :param w: Disturbance.
        :return: Successor states.
        """
        return _np.asarray(self.f(x, w), dtype=float)

    def f0(self, x: Array) -> Array:
        """Apply the undisturbed dynamics ``f(x, 0)``.

        :param x: State or batch of states.
        :return: Successor states.
        """
        return self.step(x, self.zero_disturbance(x))

    def output(self, x: Array) -> Array:
        """Apply the output map.

        :param x: State or batch of states.
        :return: Outputs of shape ``(..., d_Y)``.
        """
        return _np.asarray(self.h(x), dtype=float)

    def jacobian_f0(self, x: Array) -> Array:
        """Jacobian of ``f(., 0)``.

        :param x: State or batch of states.
        :return: Matrices of shape ``(..., d_X, d_X)``.
        """
        if self.jac_f is not None:
            return _np.asarray(self.jac_f(x), dtype=float)

        return finite_difference_jacobian(self.f0, x)

    def jacobian_f(self, x: Array, w: Array) -> Array:
        """Jacobian of ``f(., w)`` with respect to the state.

        :param x: State or batch of states.
        :param w: Disturbance shared by the batch.
        :return: Matrices of shape ``(..., d_X, d_X)``.
        """
        if not _np.any(w):
            return self.jacobian_f0(x)

        return finite_difference_jacobian(lambda z: self.step(z, w), x)

    def jacobian_h(self, x: Array) -> Array:
        """Jacobian of ``h``.

        :param x: State or batch of states.
        :return: Matrices of shape ``(..., d_Y, d_X)``.
        """
        if self.jac_h is not None:
            return _np.asarray(self.jac_h(x), dtype=float)

        return finite_difference_jacobian(self.output, x)


def _uniform(bound: float) -> Sampler:
    def _sampler(rng: _np.random.Generator, shape: tuple[int, ...]) -> Array:
        if bound == 0:
            return _np.zeros(shape)

        return rng.uniform(-bound, bound, size=shape)

    return _sampler


@_dataclass(frozen=True)
class NoiseSpec:
    """Bounded i.i.d. process and measurement noise.

    Samplers default to uniform draws on ``[-W, W]`` and ``[-V, V]`` per
    coordinate. Every draw is checked against its bound in the max-norm.

    :param process_bound: Bound ``W`` on process disturbances.
    :param measurement_bound: Bound ``V`` on measurement noise.
    :param process_sampler: Custom ``(rng, shape) -> array`` sampler.
    :param measurement_sampler: Custom ``(rng, shape) -> array`` sampler.
    """

    process_bound: float = 0.0
    measurement_bound: float = 0.0
    process_sampler: Sampler | None = None
    measurement_sampler: Sampler | None = None

    def __post_init__(self) -> None:
        _check_nonnegative(
            process_bound=self.process_bound,
            measurement_bound=self.measurement_bound,
        )

    @staticmethod
    def _draw(
        sampler: Sampler,
        bound: float,
        which: str,
        rng: _np.random.Generator,
        shape: tuple[int, ...],
    ) -> Array:
        samples = _np.asarray(sampler(rng, shape), dtype=float)
        if samples.size:
            norm = float(_np.max(_np.abs(samples)))
            if norm > bound * (1 + 1e-12):
                raise _NoiseBoundError(
                    _messages.NOISE_BOUND_ERROR.format(
                        which=which, norm=norm, bound=bound
                    )
                )

        return samples

    def draw_process(
        self, rng: _np.random.Generator, shape: tuple[int, ...]
    ) -> Array:
        """Draw process disturbances.

        :param rng: Seeded generator.
        :param shape: Output shape ``(count, d_W)``.
        :return: Disturbances.
        """
        sampler = self.process_sampler or _uniform(self.process_bound)
        return self._draw(sampler, self.process_bound, "process", rng, shape)

    def draw_measurement(
        self, rng: _np.random.Generator, shape: tuple[int, ...]
    ) -> Array:
        """Draw measurement noise.

        :param rng: Seeded generator.
        :param shape: Output shape ``(count, d_Y)``.
        :return: Measurement noise.
        """
        sampler = self.measurement_sampler or _uniform(
            self.measurement_bound
        )
        return self._draw(
            sampler, self.measurement_bound, "measurement", rng, shape
        )


@_dataclass(frozen=True)
class Trajectory:
    """Simulated states, outputs and the disturbances that produced them.

    :param states: States ``x_0..x_T``.
    :param outputs: Measured outputs ``y_0..y_T``.
    :param process: Process disturbances ``w_0..w_{T-1}``.
    :param measurement: Measurement noise ``v_0..v_T``.
    :param seed: Seed the trajectory was drawn with.
    """

    states: Array
    outputs: Array
    process: Array
    measurement: Array
    seed: int | None = None

    @property
    def horizon(self) -> int:
        """Number of transitions ``T``."""
        return len(self.states) - 1

    def to_csv(self, path: _Path) -> _Path:
        """Write one row per time index.

        :param path: Destination file.
        :return: Path written.
        """
        header = ["k"]
        for prefix, array in (
            ("x", self.states),
            ("y", self.outputs),
            ("w", self.process),
            ("v", self.measurement),
        ):
            header.extend(f"{prefix}_{i + 1}" for i in range(array.shape[1]))

        blank = [None] * self.process.shape[1]
        rows = []
        for k in range(self.horizon + 1):
            process = (
                list(self.process[k]) if k < self.horizon else list(blank)
            )
            rows.append(
                [k]
                + list(self.states[k])
                + list(self.outputs[k])
                + process
                + list(self.measurement[k])
            )

        return _write_csv(path, header, rows)

    @classmethod
    def from_csv(cls, path: _Path, seed: int | None = None) -> Trajectory:
        """Read a trajectory written by ``to_csv``.

        :param path: Source file.
        :param seed: Seed to attach.
        :return: Trajectory.
        """
        header, rows = _read_csv(path)
        table = _np.array(
            [[_parse_value(i) for i in row] for row in rows], dtype=float
        )
        columns = {
            p: [i for i, n in enumerate(header) if n.startswith(f"{p}_")]
            for p in "xywv"
        }
        return cls(
            states=table[:, columns["x"]],
            outputs=table[:, columns["y"]],
            process=table[:-1, columns["w"]],
            measurement=table[:, columns["v"]],
            seed=seed,
        )


def simulate(  # pylint: disable=too-many-arguments
    model: SystemModel,
    noise: NoiseSpec,
    x0: _npt.ArrayLike,
    T: int,
    seed: int | _t.Sequence[int] | None = None,
) -> Trajectory:
    """Simulate states and noisy outputs.

    Process disturbances are drawn before measurement noise from the same
    generator, so a seed fixes the trajectory bit for bit.

    :param model: System to simulate.
    :param noise: Noise specification.
    :param x0: Initial state.
    :param T: Number of transitions.
    :param seed: Seed of the generator.
    :return: Trajectory of length ``T + 1``.
    """
    if T < 1:
        raise _ConfigurationError(
            _messages.NOT_POSITIVE.format(name="T", value=T)
        )

    x = model.check_state(x0, "x0")
    if x.ndim != 1:
        raise _ConfigurationError(
            _messages.DIMENSION_MISMATCH.format(
                what="x0", got=x.size, expected=model.dim_state
            )
        )

    rng = _np.random.default_rng(seed)
    process = noise.draw_process(rng, (T, model.dim_disturbance))
    measurement = noise.draw_measurement(rng, (T + 1, model.dim_output))
    states = [x]
    for k in range(T):
        states.append(model.step(states[-1], process[k]))

    stacked = _np.array(states)
    return Trajectory(
        states=stacked,
        outputs=model.output(stacked) + measurement,
        process=process,
        measurement=measurement,
        seed=seed if isinstance(seed, int) else None,
    )


def iterate_f0(model: SystemModel, x: _npt.ArrayLike, k: int) -> Array:
    """Apply the undisturbed dynamics ``k`` times.

    :param model: System.
    :param x: State or batch of states.
    :param k: Number of applications.
    :return: ``f_0^k(x)``.
    """
    state = model.check_state(x)
    for _ in range(k):
        state = model.f0(state)

    return state


def output_sequence(model: SystemModel, x: _npt.ArrayLike, T: int) -> Array:
    """Noise-free outputs ``h(f_0^j(x))`` for ``j = 0..T``.

    :param model: System.
    :param x: Initial state.
    :param T: Last index.
    :return: Array of shape ``(T + 1, d_Y)``.
    """
    state = model.check_state(x)
    outputs = [model.output(state)]
    for _ in range(T):
        state = model.f0(state)
        outputs.append(model.output(state))

    return _np.array(outputs)


class LipschitzEstimate(_t.NamedTuple):
    """Sampled lower bounds on the Lipschitz constants."""

    c_f1: float
    c_f2: float
    c_h: float


def _max_ratio(numerator: Array, denominator: Array) -> float:
    num = _np.linalg.norm(numerator, axis=-1)
    den = _np.linalg.norm(denominator, axis=-1)
    mask = den > 0
    if not _np.any(mask):
        return 0.0

    return float(_np.max(num[mask] / den[mask]))


def probe_lipschitz(  # pylint: disable=too-many-arguments
    model: SystemModel,
    lo: _npt.ArrayLike,
    hi: _npt.ArrayLike,
    samples: int = 256,
    seed: int = 0,
    disturbance_scale: float = 1.0,
) -> LipschitzEstimate:
    """Estimate Lipschitz constants from random pairs in a box.

    The estimates are maxima of sampled difference quotients and hence
    lower bounds on the true constants.

    :param model: System.
    :param lo: Lower corner of the probe box.
    :param hi: Upper corner of the probe box.
    :param samples: Number of pairs.
    :param seed: Seed of the pair generator.
    :param disturbance_scale: Half-width of the disturbance box.
    :return: Estimates of ``(c_f1, c_f2, c_h)``.
    """
    rng = _np.random.default_rng(seed)
    shape = (samples, model.dim_state)
    x = rng.uniform(lo, hi, size=shape)
    y = rng.uniform(lo, hi, size=shape)
    w_shape = (samples, model.dim_disturbance)
    w1 = rng.uniform(-disturbance_scale, disturbance_scale, size=w_shape)
    w2 = rng.uniform(-disturbance_scale, disturbance_scale, size=w_shape)
    return LipschitzEstimate(
        c_f1=_max_ratio(model.f0(x) - model.f0(y), x - y),
        c_f2=_max_ratio(model.step(x, w1) - model.step(x, w2), w1 - w2),
        c_h=_max_ratio(model.output(x) - model.output(y), x - y),
    )


def check_lipschitz(  # pylint: disable=too-many-arguments
    model: SystemModel,
    lo: _npt.ArrayLike,
    hi: _npt.ArrayLike,
    samples: int = 256,
    seed: int = 0,
    disturbance_scale: float = 1.0,
) -> LipschitzEstimate:
    """Warn if sampling contradicts a declared Lipschitz constant.

    Constants declared as zero count as undeclared and are not checked.

    :param model: System.
    :param lo: Lower corner of the probe box.
    :param hi: Upper corner of the probe box.
    :param samples: Number of pairs.
    :param seed: Seed of the pair generator.
    :param disturbance_scale: Half-width of the disturbance box.
    :return: Sampled estimates.
    """
    estimate = probe_lipschitz(
        model, lo, hi, samples, seed, disturbance_scale
    )
    for name, value in estimate._asdict().items():
        declared = getattr(model, name)
        if 0 < declared < value * (1 - 1e-9):
            _warnings.warn(
                _messages.LIPSCHITZ_WARNING.format(
                    name=name, estimate=value, declared=declared
                ),
                _LipschitzWarning,
                stacklevel=2,
            )

    return estimate


_systems: dict[str, SystemFactory] = {}


def register_system(name: str) -> _t.Callable[[SystemFactory], SystemFactory]:
    """Register a factory of named systems.

    :param name: Name to register the factory as.
    :return: Return registered factory.
    """

    def _register(factory: SystemFactory) -> SystemFactory:
        if name in _systems:
            raise _NameConflictError(factory.__name__, name, kind="system")

        _systems[name] = factory
        return factory

    return _register


def registered_systems() -> list[str]:
    """Get list of registered systems.

    :return: Sorted system names.
    """
    return sorted(_systems)


def get_system(name: str, **params: float) -> SystemModel:
    """Build a registered system.

    :param name: Registered name.
    :param params: Keyword parameters of the factory.
    :return: System model.
    """
    try:
        factory = _systems[name]
    except KeyError as err:
        raise _ConfigurationError(
            _messages.UNKNOWN_SYSTEM.format(
                name=name, valid=", ".join(registered_systems())
            )
        ) from err

    try:
        return factory(**params)
    except TypeError as err:
        raise _ConfigurationError(str(err)) from err


def linear_system(
    A: _npt.ArrayLike, C: _npt.ArrayLike, name: str = "linear"
) -> SystemModel:
    """Linear system ``x+ = A x + w``, ``y = C x``.

    :param A: State matrix.
    :param C: Output matrix.
    :param name: Label of the model.
    :return: System model with exact Jacobians and constants.
    """
    a = _np.atleast_2d(_np.asarray(A, dtype=float))
    c = _np.atleast_2d(_np.asarray(C, dtype=float))
    if a.shape[0] != a.shape[1] or c.shape[1] != a.shape[0]:
        raise _ConfigurationError(
            _messages.DIMENSION_MISMATCH.format(
                what="C", got=c.shape[1], expected=a.shape[0]
            )
        )

    return SystemModel(
        dim_state=a.shape[0],
        dim_output=c.shape[0],
        f=lambda x, w: x @ a.T + w,
        h=lambda x: x @ c.T,
        jac_f=lambda x: _np.broadcast_to(a, x.shape[:-1] + a.shape).copy(),
        jac_h=lambda x: _np.broadcast_to(c, x.shape[:-1] + c.shape).copy(),
        c_f1=float(_np.linalg.norm(a, 2)),
        c_f2=1.0,
        c_h=float(_np.linalg.norm(c, 2)),
        name=name,
    )


@register_system("linear1d")
def linear1d(a: float = 0.9) -> SystemModel:
    """Scalar linear system ``x+ = a x + w``, ``y = x``.

    :param a: Multiplier.
    :return: System model.
    """
    return linear_system([[a]], [[1.0]], name="linear1d")


@register_system("benchmark2d")
def benchmark2d(tau: float = 0.1) -> SystemModel:
    """Damped nonlinear oscillator measured through its first state.

    ``x1+ = x1 + tau x2`` and
    ``x2+ = x2 - tau x1 / (1 + x1^2 + x2^2) + w``, with ``y = x1``.

    :param tau: Sampling interval.
    :return: System model.
    """

    def _f(x: Array, w: Array) -> Array:
        x1, x2 = x[..., 0], x[..., 1]
        denom = 1.0 + x1**2 + x2**2
        return _np.stack(
            [x1 + tau * x2, x2 - tau * x1 / denom + w[..., 0]], axis=-1
        )

    def _jac_f(x: Array) -> Array:
        x1, x2 = x[..., 0], x[..., 1]
        denom = 1.0 + x1**2 + x2**2
        jac = _np.empty(x.shape[:-1] + (2, 2))
        jac[..., 0, 0] = 1.0
        jac[..., 0, 1] = tau
        jac[..., 1, 0] = -tau * (denom - 2.0 * x1**2) / denom**2
        jac[..., 1, 1] = 1.0 + 2.0 * tau * x1 * x2 / denom**2
        return jac

    def _jac_h(x: Array) -> Array:
        jac = _np.zeros(x.shape[:-1] + (1, 2))
        jac[..., 0, 0] = 1.0
        return jac

    return SystemModel(
        dim_state=2,
        dim_output=1,
        dim_disturbance=1,
        f=_f,
        h=lambda x: x[..., :1],
        jac_f=_jac_f,
        jac_h=_jac_h,
        # |I + tau B| <= 1 + tau * |B|_F with |B|_F <= sqrt(2 + 1/16),
        # rounded up to two decimals
        c_f1=_math.ceil(100.0 * (1.0 + tau * _math.sqrt(2.0625))) / 100.0,
        c_f2=1.0,
        c_h=1.0,
        name="benchmark2d",
    )


@register_system("sine1d")
def sine1d(a: float = 2.0, eps: float = 0.01) -> SystemModel:
    """Piecewise-linear growth observed through a sine.

    ``f_0(x) = 3x`` below ``a pi - eps``, ``2x + a pi`` above
    ``a pi + eps`` and a cubic Hermite blend in between; ``h = sin``.

    :param a: Location of the switch in multiples of pi.
    :param eps: Half-width of the blend.
    :return: System model.
    """
    lo, hi = a * _math.pi - eps, a * _math.pi + eps
    width = hi - lo
    p0, p1 = 3.0 * lo, 2.0 * hi + a * _math.pi
    m0, m1 = 3.0 * width, 2.0 * width

    def _blend(x: Array) -> tuple[Array, Array]:
        t = _np.clip((x - lo) / width, 0.0, 1.0)
        value = (
            (2 * t**3 - 3 * t**2 + 1) * p0
            + (t**3 - 2 * t**2 + t) * m0
            + (-2 * t**3 + 3 * t**2) * p1
            + (t**3 - t**2) * m1
        )
        slope = (
            (6 * t**2 - 6 * t) * p0
            + (3 * t**2 - 4 * t + 1) * m0
            + (-6 * t**2 + 6 * t) * p1
            + (3 * t**2 - 2 * t) * m1
        ) / width
        return value, slope

    def _f0(x: Array) -> Array:
        value, _ = _blend(x)
        return _np.where(
            x <= lo, 3.0 * x, _np.where(x > hi, 2.0 * x + a * _math.pi, value)
        )

    def _jac_f(x: Array) -> Array:
        _, slope = _blend(x)
        return _np.where(x <= lo, 3.0, _np.where(x > hi, 2.0, slope))[
            ..., None
        ]

    return SystemModel(
        dim_state=1,
        dim_output=1,
        dim_disturbance=1,
        f=lambda x, w: _f0(x) + w,
        h=_np.sin,
        jac_f=_jac_f,
        jac_h=lambda x: _np.cos(x)[..., None],
        c_f1=3.0,
        c_f2=1.0,
        c_h=1.0,
        name="sine1d",
    )
