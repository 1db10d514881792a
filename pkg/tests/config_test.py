"""
tests.config_test
=================
"""

# pylint: disable=protected-access
from __future__ import annotations

import typing as t
from pathlib import Path

import pytest

import pymhe
from pymhe import _config, _outputs
from pymhe.w2 import W2Config


def test_defaults() -> None:
    """Test commands run on the benchmark setup without a file."""
    config = _config.load()
    assert config.system.name == "benchmark2d"
    assert config.estimation.T == 100
    assert config.estimation.N == 10
    assert config.estimation.samples == 30
    assert config.estimation.eta == 0.03
    assert config.estimation.l_smooth == 30.0
    assert config.estimation.inner_max_iters == 1000
    assert config.estimation.drift_L == 0.01
    assert config.estimation.mode == "certified"
    assert config.kl.eta == 2.0
    assert config.kl.n_particles == 30
    assert config.privacy.epsilons == [0.5, 1.0, 2.0, 5.0]
    assert config.privacy.c_f1 == 0.0
    assert config.out == Path("pymhe-out")


def test_estimator_defaults_match() -> None:
    """Test the estimator defaults agree with the experiment defaults."""
    estimation = _config.EstimationSection()
    library = W2Config()
    for name in (
        "eta",
        "N",
        "l_smooth",
        "drift_L",
        "alpha",
        "inner_tol",
        "inner_max_iters",
        "mode",
    ):
        assert getattr(library, name) == getattr(estimation, name), name


def test_integers_widen_to_floats() -> None:
    """Test integer values are accepted for float keys."""
    config = _config.from_mapping(
        {"estimation": {"eta": 1}, "privacy": {"epsilons": [1, 2.5]}}
    )
    assert isinstance(config.estimation.eta, float)
    assert config.privacy.epsilons == [1.0, 2.5]


def test_system_params() -> None:
    """Test system parameters pass through as a table."""
    config = _config.from_mapping(
        {"system": {"name": "linear1d", "params": {"a": 0.5}, "x0": [0.0]}}
    )
    assert pymhe.experiments.build_model(config).dim_state == 1
    assert config.system.params == {"a": 0.5}


@pytest.mark.parametrize(
    "data,expected",
    [
        (
            {"estimation": {"samples": True}},
            pymhe.messages.BAD_TYPE.format(
                section="estimation", key="samples", expected="int", value=True
            ),
        ),
        (
            {"estimation": {"T": 1.5}},
            pymhe.messages.BAD_TYPE.format(
                section="estimation", key="T", expected="int", value=1.5
            ),
        ),
        (
            {"run": {"strict": 1}},
            pymhe.messages.BAD_TYPE.format(
                section="run", key="strict", expected="bool", value=1
            ),
        ),
        (
            {"privacy": {"epsilons": [1.0, "2"]}},
            pymhe.messages.BAD_TYPE.format(
                section="privacy",
                key="epsilons",
                expected="list of numbers",
                value=[1.0, "2"],
            ),
        ),
        (
            {"estimation": {"method": "ekf"}},
            pymhe.messages.BAD_CHOICE.format(
                section="estimation",
                key="method",
                choices="w2, kl",
                value="ekf",
            ),
        ),
        (
            {"telemetry": {}},
            pymhe.messages.UNKNOWN_SECTION.format(section="telemetry"),
        ),
        (
            {"kl": {"particles": 5}},
            pymhe.messages.UNKNOWN_KEY.format(key="particles", section="kl"),
        ),
        (
            {"run": 5},
            pymhe.messages.BAD_TYPE.format(
                section="run", key="*", expected="table", value=5
            ),
        ),
    ],
    ids=[
        "bool-for-int",
        "float-for-int",
        "int-for-bool",
        "list-item",
        "choice",
        "section",
        "key",
        "table",
    ],
)
def test_invalid_mapping(data: dict[str, t.Any], expected: str) -> None:
    """Test invalid files are reported with the offending key.

    :param data: Parsed experiment file.
    :param expected: Expected error.
    """
    with pytest.raises(pymhe.exceptions.ConfigurationError) as err:
        _config.from_mapping(data)

    assert str(err.value) == expected
    assert err.value.exit_code == 2


def test_load_file(tmp_path: Path) -> None:
    """Test a file overrides only the keys it names.

    :param tmp_path: Create and return temporary directory.
    """
    path = tmp_path / "experiment.toml"
    path.write_text("[estimation]\nT = 12\n", encoding="utf-8")
    config = _config.load(path)
    assert config.estimation.T == 12
    assert config.estimation.N == 10


def test_load_errors(tmp_path: Path) -> None:
    """Test missing and malformed files are configuration errors.

    :param tmp_path: Create and return temporary directory.
    """
    path = tmp_path / "experiment.toml"
    with pytest.raises(pymhe.exceptions.ConfigurationError) as err:
        _config.load(path)

    assert str(err.value) == pymhe.messages.CONFIG_NOT_FOUND.format(
        path=path
    )
    path.write_text("[estimation\n", encoding="utf-8")
    with pytest.raises(pymhe.exceptions.ConfigurationError):
        _config.load(path)


def test_parser() -> None:
    """Test flags are parsed and left unset when omitted."""
    args = pymhe.Parser(["tradeoff", "-s", "3", "--epsilons", "1,2"]).args
    assert args.command == "tradeoff"
    assert args.seed == 3
    assert [float(i) for i in args.epsilons] == [1.0, 2.0]
    assert args.threads is None
    assert not args.strict


@pytest.mark.parametrize(
    "value,expected",
    [
        (None, ""),
        (True, "1"),
        (3, "3"),
        ("kl", "kl"),
        (0.1, "0.10000000000000001"),
        (float("nan"), ""),
    ],
    ids=["none", "bool", "int", "str", "float", "nan"],
)
def test_format_value(value: t.Any, expected: str) -> None:
    """Test CSV cells keep every float digit.

    :param value: Value to format.
    :param expected: Cell text.
    """
    assert _outputs.format_value(value) == expected


def test_create_output_directory(tmp_path: Path) -> None:
    """Test the output directory is created and ignored.

    :param tmp_path: Create and return temporary directory.
    """
    out = tmp_path / "nested" / "out"
    _outputs.create(out)
    assert (out / ".gitignore").read_text(encoding="utf-8").endswith("*\n")
    path = _outputs.write_csv(out / "table.csv", ["a", "b"], [[1, None]])
    assert _outputs.read_csv(path) == (["a", "b"], [["1", ""]])
