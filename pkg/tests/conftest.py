"""
tests.conftest
==============
"""

# pylint: disable=protected-access,no-member,import-outside-toplevel
# pylint: disable=cell-var-from-loop
from __future__ import annotations

from pathlib import Path

import pytest

import pymhe

# noinspection PyUnresolvedReferences,PyProtectedMember
from pymhe import _builtins

from . import (
    SMALL_CONFIG,
    UNPATCH_REGISTER_DEFAULT_PLUGINS,
    FixtureMain,
    FixtureMockActionPluginFactory,
    FixtureSmallConfig,
    FixtureWriteConfig,
    MockActionPluginList,
    PluginTuple,
)

original_pymhe_plugin_load = pymhe.plugins.load
original_pymhe_main_register_builtin_plugins = (
    _builtins.register_builtin_plugins
)


@pytest.fixture(name="mock_environment", autouse=True)
def fixture_mock_environment(
    tmp_path: Path, monkeypatch: pytest.MonkeyPatch
) -> None:
    """Mock imports to reflect the temporary testing environment.

    :param tmp_path: Create and return temporary directory.
    :param monkeypatch: Mock patch environment and attributes.
    """
    monkeypatch.chdir(tmp_path)
    monkeypatch.setattr("pymhe.plugins._plugins", pymhe.plugins.Plugins())
    monkeypatch.setattr("pymhe.plugins.load", lambda: None)
    monkeypatch.setattr("pymhe._core._register_builtin_plugins", lambda: None)


@pytest.fixture(name="main")
def fixture_main(monkeypatch: pytest.MonkeyPatch) -> FixtureMain:
    """Pass patched commandline arguments to package's main function.

    :param monkeypatch: Mock patch environment and attributes.
    :return: Function for using this fixture.
    """

    def _main(*args: str) -> int:
        """Run main with custom args."""
        from pymhe import main

        monkeypatch.setattr("sys.argv", [pymhe.__name__, *args])
        return main()

    return _main


@pytest.fixture(name="write_config")
def fixture_write_config(tmp_path: Path) -> FixtureWriteConfig:
    """Write an experiment file into the temporary directory.

    :param tmp_path: Create and return temporary directory.
    :return: Function for using this fixture.
    """

    def _write_config(text: str = SMALL_CONFIG) -> Path:
        path = tmp_path / "experiment.toml"
        path.write_text(text, encoding="utf-8")
        return path

    return _write_config


@pytest.fixture(name="small_config")
def fixture_small_config(tmp_path: Path) -> FixtureSmallConfig:
    """Shrunk benchmark configuration writing into a fresh directory.

    :param tmp_path: Create and return temporary directory.
    :return: Function for using this fixture.
    """

    def _small_config(
        out: str = "out", **run: object
    ) -> pymhe.ExperimentConfig:
        path = tmp_path / "small.toml"
        path.write_text(SMALL_CONFIG, encoding="utf-8")
        config = pymhe._config.load(path)
        config.run.out = str(tmp_path / out)
        for key, value in run.items():
            setattr(config.run, key, value)

        return config

    return _small_config


@pytest.fixture(name="unpatch_plugins_load")
def fixture_unpatch_plugins_load(monkeypatch: pytest.MonkeyPatch) -> None:
    """Unpatch ``pymhe.plugins.load``.

    :param monkeypatch: Mock patch environment and attributes.
    """
    monkeypatch.setattr("pymhe.plugins.load", original_pymhe_plugin_load)


@pytest.fixture(name=UNPATCH_REGISTER_DEFAULT_PLUGINS)
def fixture_unpatch_register_builtin_plugins(
    monkeypatch: pytest.MonkeyPatch,
) -> None:
    """Unpatch ``pymhe._core._register_builtin_plugins``.

    :param monkeypatch: Mock patch environment and attributes.
    """
    monkeypatch.setattr(
        "pymhe._core._register_builtin_plugins",
        original_pymhe_main_register_builtin_plugins,
    )


@pytest.fixture(name="mock_action_plugin_factory")
def fixture_mock_action_plugin_factory() -> FixtureMockActionPluginFactory:
    """Returns a list of ``Action`` objects.

    Returns variable number, depending on the quantity of names
        provided.

    :return: List of mock ``Action`` plugin types.
    """

    def _mock_action_plugin_factory(
        *params: PluginTuple,
    ) -> MockActionPluginList:
        mock_action_plugins = []
        for param in params:

            class MockActionPlugin(pymhe.plugins.Action):
                """Nothing to do."""

                def action(self, *args: str, **kwargs: object) -> int:
                    """Nothing to do."""
                    if param.action is not None:  # noqa
                        return param.action(self, *args, **kwargs)  # noqa

                    return 0

            MockActionPlugin.__name__ = param.name
            mock_action_plugins.append(MockActionPlugin)

        return mock_action_plugins

    return _mock_action_plugin_factory
