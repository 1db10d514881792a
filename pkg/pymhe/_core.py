"""
pymhe._core
===========
"""

from __future__ import annotations as _annotations

import sys as _sys
import typing as _t
from pathlib import Path as _Path

from . import plugins as _plugins
from ._builtins import register_builtin_plugins as _register_builtin_plugins
from ._config import ExperimentConfig as _ExperimentConfig
from ._config import load as _load
from ._objects import colors as _colors
from .exceptions import ConfigurationError as _ConfigurationError


def _override(config: _ExperimentConfig, **kwargs: _t.Any) -> None:
    # flags left unset on the commandline keep the file's values
    sections = {
        "seed": config.run,
        "threads": config.run,
        "method": config.estimation,
        "samples": config.estimation,
        "epsilons": config.privacy,
    }
    for key, section in sections.items():
        value = kwargs.get(key)
        if value is not None:
            if key == "epsilons":
                value = [float(i) for i in value]

            setattr(section, key, value)

    if kwargs.get("out") is not None:
        config.run.out = str(kwargs["out"])

    if kwargs.get("strict"):
        config.run.strict = True

    if kwargs.get("plot"):
        config.run.plot = True

    if kwargs.get("samples") is not None:
        config.kl.n_particles = kwargs["samples"]


def pymhe(command: str, config: _Path | None = None, **kwargs: _t.Any) -> int:
    """Module entry point.

    Load the experiment file, apply commandline overrides and run the
    selected command from the registry of commands.

    :param command: Choice of command: [commands] to list all.
    :param config: Experiment file, defaults only if omitted.
    :param kwargs: Overrides ``seed``, ``out``, ``threads``, ``method``,
        ``samples``, ``strict``, ``plot`` and ``epsilons``.
    :return: Exit status.
    """
    _register_builtin_plugins()
    _plugins.load()
    plugin = _plugins.get(command)
    try:
        resolved = _load(config)
        _override(resolved, **kwargs)
    except _ConfigurationError as err:
        _colors.red.print(f"{type(err).__name__}: {err}", file=_sys.stderr)
        return err.exit_code

    return plugin(config=resolved)
