"""
pymhe.cost
==========

Stage costs and the moving-horizon cost over a window of measurements.

The state estimate ``z`` belongs to time ``k`` and the window holds
``y_{k+1}..y_{k+N}``, so predictions start one step ahead:
``G(z) = sum_j J(h(f_0^j(z)) - y_{k+j})`` for ``j = 1..N``.
"""

from __future__ import annotations as _annotations

import typing as _t
from dataclasses import dataclass as _dataclass
from dataclasses import field as _field

import numpy as _np
import numpy.typing as _npt

from . import messages as _messages
from .exceptions import ConfigurationError as _ConfigurationError
from .exceptions import InfeasibleCertificateError as _InfeasibleCertificate
from .model import Array as _Array
from .model import SystemModel as _SystemModel
from .model import finite_difference_jacobian as _fd_jacobian

ResidualFn = _t.Callable[[_Array], _Array]


@_dataclass(frozen=True)
class StageCost:
    """Penalty on output residuals.

    ``quadratic`` sums ``r^T W r`` over the window, with ``W`` the
    identity unless ``weight`` is given. ``user`` applies ``fn`` to the
    residual array of shape ``(..., N, d_Y)`` and must return ``(...)``;
    its residual gradient is ``grad`` or central differences.

    :param kind: ``quadratic`` or ``user``.
    :param weight: Positive definite output-space matrix.
    :param fn: User cost of the residual window.
    :param grad: Gradient of ``fn`` with respect to the residuals.
    """

    kind: str = "quadratic"
    weight: _Array | None = None
    fn: ResidualFn | None = _field(default=None, compare=False)
    grad: ResidualFn | None = _field(default=None, compare=False)

    def __post_init__(self) -> None:
        if self.kind not in ("quadratic", "user"):
            raise _ConfigurationError(
                _messages.BAD_STAGE_KIND.format(kind=self.kind)
            )

        if self.kind == "user" and self.fn is None:
            raise _ConfigurationError(_messages.MISSING_STAGE_FN)

        if self.weight is not None:
            weight = _np.atleast_2d(_np.asarray(self.weight, dtype=float))
            if not _np.allclose(weight, weight.T) or _np.any(
                _np.linalg.eigvalsh(weight) <= 0
            ):
                raise _ConfigurationError(_messages.NOT_POSITIVE_DEFINITE)

            object.__setattr__(self, "weight", weight)

    def value(self, residuals: _Array) -> _Array:
        """Cost of a residual window.

        :param residuals: Array of shape ``(..., N, d_Y)``.
        :return: Costs of shape ``(...)``.
        """
        if self.kind == "user":
            return _np.asarray(self.fn(residuals), dtype=float)  # type: ignore

        if self.weight is None:
            return _np.sum(residuals**2, axis=(-2, -1))

        return _np.einsum(
            "...jy,yz,...jz->...", residuals, self.weight, residuals
        )

    def residual_gradient(self, residuals: _Array) -> _Array:
        """Gradient with respect to the residuals.

        :param residuals: Array of shape ``(..., N, d_Y)``.
        :return: Array of the same shape.
        """
        if self.kind == "user":
            if self.grad is not None:
                return _np.asarray(self.grad(residuals), dtype=float)

            shape = residuals.shape
            flat = residuals.reshape(shape[:-2] + (-1,))
            jac = _fd_jacobian(
                lambda r: self.value(r.reshape(r.shape[:-1] + shape[-2:]))[
                    ..., None
                ],
                flat,
            )
            return jac[..., 0, :].reshape(shape)

        if self.weight is None:
            return 2.0 * residuals

        return residuals @ (self.weight + self.weight.T)


@_dataclass(frozen=True)
class HorizonCost:  # pylint: disable=too-many-instance-attributes
    """Moving-horizon cost of a state estimate at time ``k``.

    :param model: System the predictions are made with.
    :param window: Measurements ``y_{k+1}..y_{k+N}``, shape ``(N, d_Y)``.
    :param k: Time index of the estimate.
    :param stage: Stage cost.
    :param l_smooth: Smoothness constant ``l`` of the cost.
    :param drift_L: Drift constant ``L`` between successive costs.
    :param l_w: Smoothness of the gradient in the disturbances.
    """

    model: _SystemModel
    window: _Array
    k: int = 0
    stage: StageCost = _field(default_factory=StageCost)
    l_smooth: float = 1.0
    drift_L: float = 0.0
    l_w: float = 0.0

    def __post_init__(self) -> None:
        window = _np.asarray(self.window, dtype=float)
        if window.ndim == 1:
            window = window[:, None]

        if window.shape[-1] != self.model.dim_output:
            raise _ConfigurationError(
                _messages.DIMENSION_MISMATCH.format(
                    what="window",
                    got=window.shape[-1],
                    expected=self.model.dim_output,
                )
            )

        if not len(window):
            raise _ConfigurationError(
                _messages.NOT_POSITIVE.format(name="N", value=0)
            )

        if self.l_smooth <= 0:
            raise _ConfigurationError(
                _messages.NOT_POSITIVE.format(name="l", value=self.l_smooth)
            )

        if self.drift_L < 0 or self.l_w < 0:
            raise _ConfigurationError(
                _messages.NEGATIVE_CONSTANT.format(
                    name="L" if self.drift_L < 0 else "l_w",
                    value=min(self.drift_L, self.l_w),
                )
            )

        object.__setattr__(self, "window", window)
        if self.stage.kind == "user":
            zero = float(self.stage.value(_np.zeros(window.shape)))
            if zero != 0:
                raise _ConfigurationError(
                    _messages.STAGE_NOT_ZERO.format(value=zero)
                )

    @classmethod
    def from_measurements(  # pylint: disable=too-many-arguments
        cls,
        model: _SystemModel,
        outputs: _npt.ArrayLike,
        k: int,
        N: int,
        **kwargs: _t.Any,
    ) -> HorizonCost:
        """Cut the window ``y_{k+1}..y_{k+N}`` out of a measurement record.

        :param model: System.
        :param outputs: Measurements ``y_0, y_1, ...``.
        :param k: Time index of the estimate.
        :param N: Window length.
        :param kwargs: Remaining ``HorizonCost`` fields.
        :return: Horizon cost.
        """
        outputs = _np.asarray(outputs, dtype=float)
        if N < 1:
            raise _ConfigurationError(
                _messages.NOT_POSITIVE.format(name="N", value=N)
            )

        if len(outputs) < k + N + 1:
            raise _ConfigurationError(
                _messages.WINDOW_TOO_SHORT.format(
                    k=k, needed=k + N + 1, available=len(outputs)
                )
            )

        return cls(model, outputs[k + 1 : k + N + 1], k=k, **kwargs)

    @property
    def N(self) -> int:  # pylint: disable=invalid-name
        """Window length."""
        return len(self.window)

    def certify(self) -> None:
        """Check that ``l * L <= 1/2``."""
        product = self.l_smooth * self.drift_L
        if product > 0.5:
            raise _InfeasibleCertificate(
                _messages.LL_TOO_LARGE.format(product=product)
            )

    def _disturbances(
        self, w: _npt.ArrayLike | None, v: _npt.ArrayLike | None
    ) -> tuple[_Array, _Array]:
        model = self.model
        if w is None:
            w = _np.zeros((self.N, model.dim_disturbance))

        if v is None:
            v = _np.zeros((self.N, model.dim_output))

        w = _np.asarray(w, dtype=float).reshape(self.N, -1)
        v = _np.asarray(v, dtype=float)
        if v.ndim == 1:
            v = v[:, None]

        for array in (w, v):
            if len(array) != self.N:
                raise _ConfigurationError(
                    _messages.LENGTH_MISMATCH.format(
                        left=len(array), right=self.N
                    )
                )

        return w, v

    def _rollout(
        self,
        z: _npt.ArrayLike,
        w: _npt.ArrayLike | None,
        v: _npt.ArrayLike | None,
        jacobian: bool,
    ) -> tuple[_Array, _Array | None]:
        # residuals (..., N, d_Y) and their state Jacobians (..., N, d_Y, d_X)
        model = self.model
        x = model.check_state(z, "z")
        w, v = self._disturbances(w, v)
        sensitivity = _np.broadcast_to(
            _np.eye(model.dim_state), x.shape[:-1] + (model.dim_state,) * 2
        )
        residuals, rows = [], []
        for j in range(self.N):
            if jacobian:
                sensitivity = model.jacobian_f(x, w[j]) @ sensitivity

            x = model.step(x, w[j])
            residuals.append(model.output(x) + v[j] - self.window[j])
            if jacobian:
                rows.append(model.jacobian_h(x) @ sensitivity)

        return (
            _np.stack(residuals, axis=-2),
            _np.stack(rows, axis=-3) if jacobian else None,
        )

    def residuals(self, z: _npt.ArrayLike) -> _Array:
        """Predicted minus measured outputs over the window.

        :param z: State estimate or batch of estimates.
        :return: Residuals of shape ``(..., N, d_Y)``.
        """
        return self._rollout(z, None, None, False)[0]

    def linearize(self, z: _npt.ArrayLike) -> tuple[_Array, _Array]:
        """Residuals with their Jacobians with respect to ``z``.

        :param z: State estimate or batch of estimates.
        :return: Residuals ``(..., N, d_Y)`` and Jacobians
            ``(..., N, d_Y, d_X)``.
        """
        residuals, rows = self._rollout(z, None, None, True)
        return residuals, rows  # type: ignore

    def value(self, z: _npt.ArrayLike) -> _Array:
        """Evaluate ``G(z)``.

        :param z: State estimate or batch of estimates.
        :return: Nonnegative cost, one per estimate.
        """
        return self.value_noisy(z)

    def gradient(self, z: _npt.ArrayLike) -> _Array:
        """Evaluate the gradient of ``G`` by the chain rule.

        :param z: State estimate or batch of estimates.
        :return: Gradients of the same shape as ``z``.
        """
        return self.gradient_noisy(z)

    def value_noisy(
        self,
        z: _npt.ArrayLike,
        w: _npt.ArrayLike | None = None,
        v: _npt.ArrayLike | None = None,
    ) -> _Array:
        """Cost along the disturbed trajectory.

        :param z: State estimate or batch of estimates.
        :param w: Disturbances ``w_k..w_{k+N-1}``, zero if omitted.
        :param v: Measurement noise ``v_{k+1}..v_{k+N}``, zero if omitted.
        :return: Cost, one per estimate.
        """
        residuals, _ = self._rollout(z, w, v, False)
        return self.stage.value(residuals)

    def gradient_noisy(
        self,
        z: _npt.ArrayLike,
        w: _npt.ArrayLike | None = None,
        v: _npt.ArrayLike | None = None,
    ) -> _Array:
        """Gradient of the disturbed cost with respect to ``z``.

        :param z: State estimate or batch of estimates.
        :param w: Disturbances ``w_k..w_{k+N-1}``, zero if omitted.
        :param v: Measurement noise ``v_{k+1}..v_{k+N}``, zero if omitted.
        :return: Gradients of the same shape as ``z``.
        """
        residuals, rows = self._rollout(z, w, v, True)
        return _np.einsum(
            "...jyd,...jy->...d", rows, self.stage.residual_gradient(residuals)
        )


class SmoothnessEstimate(_t.NamedTuple):
    """Sampled lower bounds on ``l``, ``L`` and ``l_w``."""

    l_hat: float
    L_hat: float
    l_w_hat: float


def _ratio(numerator: _Array, denominator: _Array) -> float:
    mask = denominator > 0
    if not _np.any(mask):
        return 0.0

    return float(_np.max(numerator[mask] / denominator[mask]))


def estimate_smoothness(  # pylint: disable=too-many-arguments,too-many-locals
    cost: HorizonCost,
    probe_box: tuple[_npt.ArrayLike, _npt.ArrayLike],
    samples: int = 256,
    seed: int = 0,
    following: HorizonCost | None = None,
    disturbance_scale: float = 0.1,
) -> SmoothnessEstimate:
    """Estimate the smoothness constants of a horizon cost by sampling.

    The values are maxima of sampled quotients, hence lower bounds of the
    true constants. Quotients with a zero denominator count as zero.

    :param cost: Cost at time ``k``.
    :param probe_box: Lower and upper corner of the probe box.
    :param samples: Number of sampled pairs, at least 2.
    :param seed: Seed of the sampler.
    :param following: Cost at time ``k + 1``; ``L_hat`` is 0 without it.
    :param disturbance_scale: Half-width of sampled disturbances.
    :return: ``(l_hat, L_hat, l_w_hat)``.
    """
    if samples < 2:
        raise _ConfigurationError(
            _messages.OUT_OF_RANGE.format(
                name="samples", interval="[2, inf)", value=samples
            )
        )

    model = cost.model
    lo, hi = probe_box
    rng = _np.random.default_rng(seed)
    x = rng.uniform(lo, hi, size=(samples, model.dim_state))
    y = rng.uniform(lo, hi, size=(samples, model.dim_state))
    grad_x = cost.gradient(x)
    l_hat = _ratio(
        _np.linalg.norm(grad_x - cost.gradient(y), axis=-1),
        _np.linalg.norm(x - y, axis=-1),
    )

    L_hat = 0.0  # pylint: disable=invalid-name
    if following is not None:
        drift = _np.abs(following.value(model.f0(x)) - cost.value(x))
        L_hat = _ratio(  # pylint: disable=invalid-name
            drift, _np.sum(grad_x**2, axis=-1)
        )

    l_w_hat = 0.0
    for i in range(samples):
        w = rng.uniform(
            -disturbance_scale,
            disturbance_scale,
            size=(cost.N, model.dim_disturbance),
        )
        v = rng.uniform(
            -disturbance_scale,
            disturbance_scale,
            size=(cost.N, model.dim_output),
        )
        shift = _np.sqrt(_np.sum(w**2) + _np.sum(v**2))
        delta = _np.linalg.norm(cost.gradient_noisy(x[i], w, v) - grad_x[i])
        l_w_hat = max(l_w_hat, _ratio(_np.array([delta]), _np.array([shift])))

    return SmoothnessEstimate(l_hat, L_hat, l_w_hat)
