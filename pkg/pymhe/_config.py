"""
pymhe._config
=============

Commandline arguments and the experiment file.

An experiment file is TOML with the sections of ``ExperimentConfig``.
Every key has a default reproducing the benchmark setup, so commands run
without a file.
"""

from __future__ import annotations as _annotations

import dataclasses as _dataclasses
import sys as _sys
import typing as _t
from pathlib import Path as _Path

from arcon import ArgumentParser as _ArgumentParser

from . import messages as _messages
from ._objects import NAME as _NAME
from ._objects import colors as _colors
from ._version import __version__
from .exceptions import ConfigurationError as _ConfigurationError

if _sys.version_info >= (3, 11):  # pragma: no cover
    import tomllib as _tomllib
else:  # pragma: no cover
    import tomli as _tomllib


class Parser(_ArgumentParser):
    """Inherited ``ArgumentParser`` object for package args.

    Assign positional argument to ``command``. Flags given on the
    commandline take precedence over the experiment file.
    """

    def __init__(self, args: _t.Sequence[str] | None = None) -> None:
        super().__init__(__version__, prog=_colors.cyan.get(_NAME))
        self._add_arguments()
        self.args = self.parse_args(args)

    def _add_arguments(self) -> None:
        self.add_argument(
            "command",
            metavar="COMMAND",
            help="choice of command: [commands] to list all",
        )
        self.add_argument(
            "-c", "--config", type=_Path, help="path to experiment file"
        )
        self.add_argument("-s", "--seed", type=int, help="master seed")
        self.add_argument(
            "-o", "--out", type=_Path, help="directory to write results to"
        )
        self.add_argument(
            "-t", "--threads", type=int, help="number of worker threads"
        )
        self.add_argument(
            "-m", "--method", choices=("w2", "kl"), help="estimator to run"
        )
        self.add_argument(
            "-n", "--samples", type=int, help="ensemble or particle count"
        )
        self.add_argument(
            "--strict",
            action="store_true",
            help="fail with exit status 4 on infeasible privacy budgets",
        )
        self.add_argument(
            "--plot", action="store_true", help="write plot.svg as well"
        )
        self.add_list_argument(
            "--epsilons",
            metavar="LIST",
            help="comma separated list of privacy budgets to sweep",
        )


@_dataclasses.dataclass
class SystemSection:
    """Registered system, its parameters and the true initial state."""

    name: str = "benchmark2d"
    params: dict[str, float] = _dataclasses.field(default_factory=dict)
    x0: list[float] = _dataclasses.field(default_factory=lambda: [0.0, 0.0])


@_dataclasses.dataclass
class NoiseSection:
    """Bounds of uniform process and measurement noise."""

    process_bound: float = 0.1
    measurement_bound: float = 0.15


@_dataclasses.dataclass
class EstimationSection:  # pylint: disable=too-many-instance-attributes
    """Horizon, window, prior and the Wasserstein estimator settings."""

    method: str = "w2"
    T: int = 100  # pylint: disable=invalid-name
    N: int = 10  # pylint: disable=invalid-name
    samples: int = 30
    prior_lo: float = -1.0
    prior_hi: float = 1.0
    eta: float = 0.03
    l_smooth: float = 30.0
    drift_L: float = 0.01  # pylint: disable=invalid-name
    l_w: float = 1.0
    alpha: float = 1.0
    mode: str = "certified"
    inner_tol: float = 1e-10
    inner_max_iters: int = 1000


@_dataclasses.dataclass
class KLSection:
    """Particle filter settings, a bandwidth of 0 selects Silverman's rule."""

    eta: float = 2.0
    n_particles: int = 30
    resample_threshold: float = 0.5
    jitter_bandwidth: float = 0.0
    roughening: float = 0.05


@_dataclasses.dataclass
class PrivacySection:  # pylint: disable=too-many-instance-attributes
    """Privacy budget, adjacency radius and the constants of the bounds.

    A weight ``s`` of 0 evaluates every condition at its own largest
    feasible constant weight. A ``c_f1`` of 0 uses the Lipschitz constant
    of the system and a ``diam_K0`` of 0 the diagonal of the prior box.
    """

    epsilon: float = 1.0
    delta: float = 1e-3
    kind: str = "w2_horizon"
    s: float = 0.0
    c_f1: float = 0.0
    diam_K0: float = 0.0  # pylint: disable=invalid-name
    alpha: float = 0.0
    epsilons: list[float] = _dataclasses.field(
        default_factory=lambda: [0.5, 1.0, 2.0, 5.0]
    )


@_dataclasses.dataclass
class ObservabilitySection:
    """Probe grid and scanned horizons."""

    grid_lo: float = -2.0
    grid_hi: float = 2.0
    grid_points: int = 5
    T_max: int = 3  # pylint: disable=invalid-name
    tol: float = 1e-8
    noise_draws: int = 16


@_dataclasses.dataclass
class RunSection:
    """Seed, output directory, parallelism and flags."""

    seed: int = 0
    out: str = "pymhe-out"
    threads: int = 1
    strict: bool = False
    plot: bool = False


_CHOICES = {
    ("estimation", "method"): ("w2", "kl"),
    ("estimation", "mode"): ("certified", "permissive"),
    ("privacy", "kind"): (
        "w2_pointwise",
        "w2_horizon",
        "kl_pointwise",
        "kl_horizon",
    ),
}


@_dataclasses.dataclass
class ExperimentConfig:  # pylint: disable=too-many-instance-attributes
    """Resolved configuration of a command."""

    system: SystemSection = _dataclasses.field(default_factory=SystemSection)
    noise: NoiseSection = _dataclasses.field(default_factory=NoiseSection)
    estimation: EstimationSection = _dataclasses.field(
        default_factory=EstimationSection
    )
    kl: KLSection = _dataclasses.field(default_factory=KLSection)
    privacy: PrivacySection = _dataclasses.field(
        default_factory=PrivacySection
    )
    observability: ObservabilitySection = _dataclasses.field(
        default_factory=ObservabilitySection
    )
    run: RunSection = _dataclasses.field(default_factory=RunSection)

    @property
    def out(self) -> _Path:
        """Output directory."""
        return _Path(self.run.out)

    def to_dict(self) -> dict[str, _t.Any]:
        """Plain mapping for ``run.json``.

        :return: Nested dict of every section.
        """
        return _dataclasses.asdict(self)


def _check_value(
    section: str, key: str, value: _t.Any, default: _t.Any
) -> _t.Any:
    expected = type(default)
    if expected is float and isinstance(value, int) and not isinstance(
        value, bool
    ):
        value = float(value)

    if isinstance(default, bool) != isinstance(value, bool) or not isinstance(
        value, expected
    ):
        raise _ConfigurationError(
            _messages.BAD_TYPE.format(
                section=section,
                key=key,
                expected=expected.__name__,
                value=value,
            )
        )

    if isinstance(value, list):
        if any(
            isinstance(i, bool) or not isinstance(i, (int, float))
            for i in value
        ):
            raise _ConfigurationError(
                _messages.BAD_TYPE.format(
                    section=section,
                    key=key,
                    expected="list of numbers",
                    value=value,
                )
            )

        value = [float(i) for i in value]

    choices = _CHOICES.get((section, key))
    if choices is not None and value not in choices:
        raise _ConfigurationError(
            _messages.BAD_CHOICE.format(
                section=section,
                key=key,
                choices=", ".join(choices),
                value=value,
            )
        )

    return value


def from_mapping(data: dict[str, _t.Any]) -> ExperimentConfig:
    """Validate a parsed experiment file.

    :param data: Mapping of section names to key-value tables.
    :return: Experiment configuration.
    """
    config = ExperimentConfig()
    for section, table in data.items():
        if section not in {f.name for f in _dataclasses.fields(config)}:
            raise _ConfigurationError(
                _messages.UNKNOWN_SECTION.format(section=section)
            )

        if not isinstance(table, dict):
            raise _ConfigurationError(
                _messages.BAD_TYPE.format(
                    section=section, key="*", expected="table", value=table
                )
            )

        obj = getattr(config, section)
        known = {f.name for f in _dataclasses.fields(obj)}
        for key, value in table.items():
            if key not in known:
                raise _ConfigurationError(
                    _messages.UNKNOWN_KEY.format(key=key, section=section)
                )

            setattr(
                obj,
                key,
                _check_value(section, key, value, getattr(obj, key)),
            )

    return config


def load(path: _Path | None = None) -> ExperimentConfig:
    """Read and validate an experiment file.

    :param path: TOML file, defaults only if omitted.
    :return: Experiment configuration.
    """
    if path is None:
        return ExperimentConfig()

    if not path.is_file():
        raise _ConfigurationError(_messages.CONFIG_NOT_FOUND.format(path=path))

    try:
        data = _tomllib.loads(path.read_text(encoding="utf-8"))
    except _tomllib.TOMLDecodeError as err:
        raise _ConfigurationError(str(err)) from err

    return from_mapping(data)
