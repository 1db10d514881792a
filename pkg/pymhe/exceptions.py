"""
pymhe.exceptions
================

Exceptions for use within the module.

All exceptions made public for if they need to be reraised or excepted.

Every exception carries the exit code the commandline returns when it
escapes a command.
"""

from __future__ import annotations as _annotations

import typing as _t

from . import messages as _messages


class PymheError(Exception):
    """Base class for all errors raised by this package."""

    #: Exit status returned by the commandline.
    exit_code = 1


class ConfigurationError(PymheError):
    """Raise if inputs or configuration are invalid."""

    exit_code = 2


class NameConflictError(ConfigurationError):
    """Raise if adding a command or system whose name is not unique.

    :param obj: Object which could not be registered.
    :param name: Name which clashes with another.
    :param kind: What kind of registry raised.
    """

    def __init__(self, obj: str, name: str, kind: str = "plugin") -> None:
        super().__init__(
            _messages.NAME_CONFLICT_ERROR.format(kind=kind, obj=obj, name=name)
        )


class InfeasibleCertificateError(ConfigurationError):
    """Raise if no certified step size exists for the given constants."""


class NumericalError(PymheError):
    """Base class for failures of a numerical routine."""

    exit_code = 3


class ConvergenceError(NumericalError):
    """Raise if the inner prox solver runs out of iterations.

    :param iterate: Last iterate of the solver.
    :param residual: Gradient norm at the last iterate.
    :param tol: Requested tolerance.
    :param iters: Iterations performed.
    :param index: Sample index, if solving for an ensemble.
    """

    def __init__(  # pylint: disable=too-many-arguments
        self,
        iterate: _t.Any,
        residual: float,
        tol: float,
        iters: int,
        index: int | None = None,
    ) -> None:
        self.iterate = iterate
        self.residual = residual
        self.index = index
        super().__init__(
            _messages.CONVERGENCE_ERROR.format(
                tol=tol, iters=iters, residual=residual, index=index
            )
        )


class DegeneracyError(NumericalError):
    """Raise if every weight underflows to zero.

    :param k: Time index of the failing update.
    :param min_cost: Smallest cost value seen in the update.
    """

    def __init__(self, k: int, min_cost: float) -> None:
        self.min_cost = min_cost
        super().__init__(
            _messages.DEGENERACY_ERROR.format(k=k, min_cost=min_cost)
        )


class GridEscapeError(NumericalError):
    """Raise if a grid pushforward loses too much mass.

    :param fraction: Fraction of mass that left the grid.
    """

    def __init__(self, fraction: float) -> None:
        self.fraction = fraction
        super().__init__(_messages.GRID_ESCAPE_ERROR.format(fraction=fraction))


class NoiseBoundError(NumericalError):
    """Raise if a noise sampler draws outside its declared bound."""


class PreconditionError(NumericalError):
    """Raise if a check is requested where it does not apply."""


class InfeasibleBudgetError(PymheError):
    """Raise if a privacy budget cannot be met."""

    exit_code = 4


class LipschitzWarning(UserWarning):
    """Warn if a declared Lipschitz constant is contradicted by sampling."""


class SmoothnessWarning(UserWarning):
    """Warn if sampling contradicts the smoothness a certificate rests on."""
