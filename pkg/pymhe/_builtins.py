"""
pymhe._builtins
===============

Commands registered on startup.
"""

from __future__ import annotations as _annotations

import inspect as _inspect
import typing as _t

from rich.table import Table as _Table

from . import experiments as _experiments
from . import messages as _messages
from . import plugins as _plugins
from ._config import ExperimentConfig as _ExperimentConfig
from ._objects import NAME as _NAME
from ._objects import colors as _colors
from ._objects import console as _console


def _header(name: str, config: _ExperimentConfig) -> None:
    _colors.cyan.bold.print(f"\n{_NAME} {name}")
    _colors.green.underline.print(
        _messages.COMMAND_RUNNING.format(name=config.system.name)
    )


def _wrote(*paths: _t.Any) -> None:
    for path in paths:
        print(_messages.WROTE_FILE.format(path=path))


def _report(report: _experiments.BenchmarkReport, steps: int) -> None:
    table = _Table("method", "coordinate", "rmse")
    for method, values in report.rmse.items():
        for i, value in enumerate(values):
            table.add_row(method, str(i + 1), f"{value:.4f}")

    _console.print(table)
    for method, mean in report.runtimes.items():
        print(_messages.RUNTIME.format(method=method, mean=mean, steps=steps))


class _Simulate(_plugins.Action):
    """Simulate a trajectory of the configured system."""

    def action(self, *args: str, **kwargs: _t.Any) -> int:
        config = kwargs["config"]
        _header(self.name, config)
        _experiments.run_simulate(config)
        _wrote(config.out / "trajectory.csv")
        return 0


class _Estimate(_plugins.Action):
    """Run the configured estimator on a simulated trajectory."""

    def action(self, *args: str, **kwargs: _t.Any) -> int:
        config = kwargs["config"]
        _header(self.name, config)
        report = _experiments.run_benchmark(config, command=self.name)
        _report(report, config.estimation.T)
        _wrote(*report.paths)
        return 0


class _Bench(_plugins.Action):
    """Compare both estimators on the same simulated trajectory."""

    def action(self, *args: str, **kwargs: _t.Any) -> int:
        config = kwargs["config"]
        _header(self.name, config)
        report = _experiments.run_benchmark(config, ("w2", "kl"))
        _report(report, config.estimation.T)
        _wrote(*report.paths)
        return 0


class _Observability(_plugins.Action):
    """Scan a probe grid for the minimum horizon length."""

    def action(self, *args: str, **kwargs: _t.Any) -> int:
        config = kwargs["config"]
        _header(self.name, config)
        report = _experiments.run_observability(config)
        if report.min_horizon_estimate is None:
            _colors.yellow.print(
                _messages.NO_MIN_HORIZON.format(t_max=report.horizon_tested)
            )
        else:
            print(
                _messages.MIN_HORIZON.format(
                    value=report.min_horizon_estimate
                )
            )

        _wrote(config.out / "observability.csv")
        return 0


class _DpBudget(_plugins.Action):
    """Evaluate the privacy conditions for the configured budget."""

    def action(self, *args: str, **kwargs: _t.Any) -> int:
        config = kwargs["config"]
        _header(self.name, config)
        rows = _experiments.run_dp_budget(config)
        table = _Table("kind", "s", "s*", "verdict")
        for row in rows:
            report = row.report
            if report.trivial:
                verdict = _messages.TRIVIAL_BUDGET
            elif report.feasible:
                verdict = _messages.BUDGET_FEASIBLE.format(slack=report.slack)
            else:
                verdict = _messages.BUDGET_INFEASIBLE.format(
                    slack=report.slack
                )

            if not report.backed:
                verdict = _messages.NOT_BACKED.format(verdict=verdict)

            table.add_row(
                report.kind, f"{row.s:.6g}", f"{row.s_star:.6g}", verdict
            )

        _console.print(table)
        _wrote(config.out / "dp_budget.csv")
        return 0


class _Tradeoff(_plugins.Action):
    """Sweep privacy budgets and record the estimation error."""

    def action(self, *args: str, **kwargs: _t.Any) -> int:
        config = kwargs["config"]
        _header(self.name, config)
        rows = _experiments.run_tradeoff_sweep(config)
        table = _Table("epsilon", "s*", "rmse")
        for row in rows:
            if row.flagged:
                _colors.yellow.print(
                    _messages.ROW_FLAGGED.format(epsilon=row.epsilon)
                )
                rmse = "-"
            else:
                rmse = ", ".join(f"{i:.4f}" for i in row.rmse)

            table.add_row(f"{row.epsilon:.6g}", f"{row.s_star:.6g}", rmse)

        _console.print(table)
        _wrote(config.out / "tradeoff.csv")
        return 0


class _Robustness(_plugins.Action):
    """Compare the estimator with its noise-aware reference."""

    def action(self, *args: str, **kwargs: _t.Any) -> int:
        config = kwargs["config"]
        _header(self.name, config)
        rows = _experiments.run_robustness(config)
        worst = max(rows, key=lambda r: r.distance - r.bound)
        print(
            f"k={worst.k}: distance {worst.distance:.6g}, "
            f"bound {worst.bound:.6g}"
        )
        _wrote(config.out / "robustness.csv")
        return 0


class _Commands(_plugins.Action):
    """Display all available commands and their documentation."""

    def action(self, *args: str, **kwargs: _t.Any) -> int:
        print()
        mapping = _plugins.mapping()
        for key in sorted(mapping):
            doc = _inspect.getdoc(mapping[key])
            if doc is not None:
                print(
                    "{}-- {}".format(
                        key.ljust(len(max(mapping, key=len)) + 1),
                        doc.splitlines()[0][:-1].replace("``", "`"),
                    )
                )

        return 0


def register_builtin_plugins() -> None:
    """Register builtin plugins."""
    _plugins.register("simulate")(_Simulate)
    _plugins.register("estimate")(_Estimate)
    _plugins.register("bench")(_Bench)
    _plugins.register("observability")(_Observability)
    _plugins.register("dp-budget")(_DpBudget)
    _plugins.register("tradeoff")(_Tradeoff)
    _plugins.register("robustness")(_Robustness)
    _plugins.register("commands")(_Commands)
