"""
tests
=====

Test package for ``pymhe``.
"""

# pylint: disable=too-few-public-methods
from __future__ import annotations

import typing as t
from pathlib import Path

import numpy as np

import pymhe

UNPATCH_REGISTER_DEFAULT_PLUGINS = "unpatch_register_builtin_plugins"
STRFTIME = "%d%m%YT%H%M%S"
PLUGIN_ONE = "plugin-1"
CLASS_ONE = "Plugin1"
CLASS_TWO = "Plugin2"
SEED = 20240607

#: Shrunk benchmark that keeps every command fast.
SMALL_CONFIG = """\
[estimation]
T = 6
N = 3
samples = 4

[kl]
n_particles = 16

[observability]
grid_points = 3
T_max = 2

[privacy]
epsilons = [5.0, 0.5, 2.0]
"""

FixtureMain = t.Callable[..., int]
FixtureWriteConfig = t.Callable[..., Path]
MockActionPluginList = t.Sequence[t.Type[pymhe.plugins.Action]]
FixtureMockActionPluginFactory = t.Callable[..., MockActionPluginList]
FixtureSmallConfig = t.Callable[..., pymhe.ExperimentConfig]


class Tracker:
    """Track calls in mocked functions."""

    def __init__(self) -> None:
        self._called = False
        self.args: list[tuple[t.Any, ...]] = []
        self.kwargs: list[dict[str, t.Any]] = []

    def was_called(self) -> bool:
        """Confirm whether object was called or not.

        :return: Was object called? True or False.
        """
        return self._called

    def __call__(self, *args: t.Any, **kwargs: t.Any) -> None:
        """Call the object and update its fields.

        :param args: Args passed to instance.
        :param kwargs: Kwargs passed to instance.
        """
        self._called = True
        self.args.append(args)
        self.kwargs.append(kwargs)


class PluginTuple(t.NamedTuple):
    """Tuple of values to construct an ``Action`` plugin."""

    name: str
    action: t.Optional[t.Callable[..., int]] = None


def quadratic_cost(
    y: float = 1.0, a: float = 1.0, l_smooth: float = 2.0
) -> pymhe.cost.HorizonCost:
    """Scalar cost ``(a z - y)^2`` of a one step window.

    :param y: Measurement.
    :param a: Multiplier of the linear test system.
    :param l_smooth: Declared smoothness constant.
    :return: Horizon cost.
    """
    return pymhe.cost.HorizonCost(
        pymhe.model.linear1d(a), np.array([[y]]), l_smooth=l_smooth
    )
