"""
pymhe.experiments
=================

Experiment harness behind the commandline.

Every function takes a resolved ``ExperimentConfig``, writes its tables
into the configured output directory together with ``run.json`` and
returns an in-memory report. Trials run on a thread pool with seeds
derived from the master seed and are reduced in trial order, so output
does not depend on the number of threads.
"""

from __future__ import annotations as _annotations

import math as _math
import typing as _t
import warnings as _warnings
from concurrent.futures import ThreadPoolExecutor as _ThreadPoolExecutor
from dataclasses import dataclass as _dataclass
from dataclasses import field as _field
from dataclasses import replace as _replace
from pathlib import Path as _Path

import numpy as _np

from . import _outputs
from . import messages as _messages
from ._config import ExperimentConfig
from ._objects import NAME as _NAME
from .cost import SmoothnessEstimate as _SmoothnessEstimate
from .cost import estimate_smoothness as _estimate_smoothness
from .exceptions import InfeasibleBudgetError as _InfeasibleBudgetError
from .exceptions import SmoothnessWarning as _SmoothnessWarning
from .kl import ParticleFilterConfig as _ParticleFilterConfig
from .kl import run_kl as _run_kl
from .model import Array as _Array
from .model import NoiseSpec as _NoiseSpec
from .model import SystemModel as _SystemModel
from .model import Trajectory as _Trajectory
from .model import get_system as _get_system
from .model import simulate as _simulate
from .observability import ObservabilityReport as _ObservabilityReport
from .observability import find_min_horizon as _find_min_horizon
from .oracle import empirical_w2 as _empirical_w2
from .oracle import rmse as _rmse
from .privacy import KINDS as _KINDS
from .privacy import FeasibilityReport as _FeasibilityReport
from .privacy import PrivacyConstants as _PrivacyConstants
from .privacy import PrivacySchedule as _PrivacySchedule
from .privacy import check as _check
from .privacy import max_s_schedule as _max_s_schedule
from .w2 import DPConfig as _DPConfig
from .w2 import Ensemble as _Ensemble
from .w2 import W2Config as _W2Config
from .w2 import robustness_bound as _robustness_bound
from .w2 import run_reference_w2 as _run_reference_w2
from .w2 import run_w2 as _run_w2

# stream ids of seeds derived from the master seed
_TRUTH, _PRIOR, _DP, _FILTER, _SMOOTHNESS = 0, 1, 2, 3, 4

#: Constant weights below this count as no feasible regularization.
MIN_WEIGHT = 1e-9


def derive_seed(seed: int, *path: int) -> int:
    """Derive an independent integer seed from the master seed.

    :param seed: Master seed.
    :param path: Stream and trial ids.
    :return: 32-bit seed.
    """
    return int(_np.random.SeedSequence((seed,) + path).generate_state(1)[0])


def build_model(config: ExperimentConfig) -> _SystemModel:
    """Instantiate the configured system.

    :param config: Experiment configuration.
    :return: System model.
    """
    return _get_system(config.system.name, **config.system.params)


def build_noise(config: ExperimentConfig) -> _NoiseSpec:
    """Uniform noise with the configured bounds.

    :param config: Experiment configuration.
    :return: Noise specification.
    """
    return _NoiseSpec(
        config.noise.process_bound, config.noise.measurement_bound
    )


def simulate_truth(
    config: ExperimentConfig, model: _SystemModel | None = None
) -> _Trajectory:
    """Simulate ``T + N`` steps so every window of the run is complete.

    :param config: Experiment configuration.
    :param model: System, built from the configuration if omitted.
    :return: Trajectory.
    """
    model = model or build_model(config)
    estimation = config.estimation
    return _simulate(
        model,
        build_noise(config),
        config.system.x0,
        estimation.T + estimation.N,
        seed=derive_seed(config.run.seed, _TRUTH),
    )


def prior_samples(
    config: ExperimentConfig, model: _SystemModel, count: int
) -> _Array:
    """Draw initial samples uniformly from the prior box.

    :param config: Experiment configuration.
    :param model: System.
    :param count: Number of samples.
    :return: Array of shape ``(count, d_X)``.
    """
    rng = _np.random.default_rng(derive_seed(config.run.seed, _PRIOR))
    return rng.uniform(
        config.estimation.prior_lo,
        config.estimation.prior_hi,
        size=(count, model.dim_state),
    )


def prior_diameter(config: ExperimentConfig, model: _SystemModel) -> float:
    """Diagonal of the prior box unless ``diam_K0`` is configured.

    :param config: Experiment configuration.
    :param model: System.
    :return: Diameter of the prior support.
    """
    if config.privacy.diam_K0 > 0:
        return config.privacy.diam_K0

    width = config.estimation.prior_hi - config.estimation.prior_lo
    return width * _math.sqrt(model.dim_state)


def w2_config(
    config: ExperimentConfig, dp: _DPConfig | None = None
) -> _W2Config:
    """Wasserstein estimator settings of the configuration.

    :param config: Experiment configuration.
    :param dp: Entropy regularization.
    :return: Estimator settings.
    """
    estimation = config.estimation
    return _W2Config(
        eta=estimation.eta,
        N=estimation.N,
        l_smooth=estimation.l_smooth,
        drift_L=estimation.drift_L,
        alpha=estimation.alpha,
        inner_tol=estimation.inner_tol,
        inner_max_iters=estimation.inner_max_iters,
        mode=estimation.mode,
        dp=dp,
    )


def check_smoothness(
    config: ExperimentConfig,
    model: _SystemModel,
    trajectory: _Trajectory,
    samples: int = 256,
) -> _SmoothnessEstimate:
    """Sample the first window over the prior box against ``l_smooth``.

    Warn if the sampled constant exceeds the configured one, as the
    certified step size window then rests on a wrong constant.

    :param config: Experiment configuration.
    :param model: System.
    :param trajectory: Simulated truth.
    :param samples: Number of sampled pairs.
    :return: Sampled constants.
    """
    estimation = config.estimation
    box = (
        _np.full(model.dim_state, estimation.prior_lo),
        _np.full(model.dim_state, estimation.prior_hi),
    )
    estimate = _estimate_smoothness(
        w2_config(config).cost(model, trajectory.outputs, 1),
        box,
        samples=samples,
        seed=derive_seed(config.run.seed, _SMOOTHNESS),
    )
    if estimate.l_hat > estimation.l_smooth:
        _warnings.warn(
            _messages.SMOOTHNESS_WARNING.format(
                estimate=estimate.l_hat, declared=estimation.l_smooth
            ),
            _SmoothnessWarning,
            stacklevel=2,
        )

    return estimate


def kl_config(
    config: ExperimentConfig, dp: _DPConfig | None = None
) -> _ParticleFilterConfig:
    """Particle filter settings of the configuration.

    :param config: Experiment configuration.
    :param dp: Entropy regularization.
    :return: Filter settings.
    """
    return _ParticleFilterConfig(
        eta=config.kl.eta,
        N=config.estimation.N,
        n_particles=config.kl.n_particles,
        resample_threshold=config.kl.resample_threshold,
        jitter_bandwidth=config.kl.jitter_bandwidth or None,
        dp=dp,
        roughening=config.kl.roughening,
    )


@_dataclass
class MethodRun:
    """Mean estimates and telemetry of one estimator.

    :param method: ``w2`` or ``kl``.
    :param means: Mean estimates at ``k = 0..T``.
    :param costs: Mean sample cost at ``k = 1..T``, W2 only.
    :param grad_norms: Mean gradient norm at ``k = 1..T``, W2 only.
    :param ess: Effective sample size at ``k = 1..T``, KL only.
    :param resampled: Resampling flags at ``k = 1..T``, KL only.
    :param step_times: Wall time of every step in seconds.
    """

    method: str
    means: _Array
    costs: _Array | None = None
    grad_norms: _Array | None = None
    ess: list[float] | None = None
    resampled: list[bool] | None = None
    step_times: list[float] = _field(default_factory=list)

    @property
    def mean_step_time(self) -> float:
        """Average wall time of a step."""
        return float(_np.mean(self.step_times)) if self.step_times else 0.0

    def rows(self) -> list[list[_t.Any]]:
        """Rows of ``estimates.csv``."""
        telemetry = (self.costs, self.grad_norms, self.ess, self.resampled)
        rows = []
        for k in range(1, len(self.means)):
            rows.append(
                [self.method, k]
                + list(self.means[k])
                + [None if i is None else i[k - 1] for i in telemetry]
            )

        return rows


def _map(
    config: ExperimentConfig, fn: _t.Callable, items: _t.Iterable
) -> list:
    with _ThreadPoolExecutor(max_workers=max(1, config.run.threads)) as pool:
        return list(pool.map(fn, items))


def run_method(  # pylint: disable=too-many-arguments
    config: ExperimentConfig,
    method: str,
    model: _SystemModel,
    trajectory: _Trajectory,
    dp_s: float | None = None,
    samples: int | None = None,
) -> MethodRun:
    """Run one estimator on a simulated trajectory.

    The Wasserstein estimator runs one trial per sample, each from its own
    prior draw and with its own privacy noise seed. The particle filter
    runs once with all particles.

    :param config: Experiment configuration.
    :param method: ``w2`` or ``kl``.
    :param model: System.
    :param trajectory: Simulated truth with ``T + N`` steps.
    :param dp_s: Constant regularization weight, none if omitted.
    :param samples: Sample count, from the configuration if omitted.
    :return: Mean estimates and telemetry.
    """
    seed = config.run.seed
    T = config.estimation.T  # pylint: disable=invalid-name
    if method == "kl":
        count = samples or config.kl.n_particles
        dp = None if dp_s is None else _DPConfig(dp_s, seed)
        result = _run_kl(
            model,
            trajectory.outputs,
            _Ensemble.uniform(prior_samples(config, model, count)),
            kl_config(config, dp),
            T,
            seed=derive_seed(seed, _FILTER),
        )
        return MethodRun(
            method,
            result.means,
            ess=result.ess,
            resampled=result.resampled,
            step_times=result.step_times,
        )

    count = samples or config.estimation.samples
    starts = prior_samples(config, model, count)
    if config.estimation.mode == "certified":
        check_smoothness(config, model, trajectory)

    def _trial(index: int) -> _t.Any:
        dp = (
            None
            if dp_s is None
            else _DPConfig(dp_s, derive_seed(seed, _DP, index))
        )
        return _run_w2(
            model,
            trajectory.outputs,
            _Ensemble.uniform(starts[index : index + 1]),
            w2_config(config, dp),
            T,
        )

    trials = _map(config, _trial, range(count))
    return MethodRun(
        method,
        _np.mean([i.means for i in trials], axis=0),
        costs=_np.mean([i.costs[:, 0] for i in trials], axis=0),
        grad_norms=_np.mean([i.grad_norms[:, 0] for i in trials], axis=0),
        step_times=list(
            _np.mean([i.step_times for i in trials], axis=0) * count
        ),
    )


def write_record(config: ExperimentConfig, command: str) -> _Path:
    """Create the output directory and write ``run.json``.

    :param config: Experiment configuration.
    :param command: Name of the command.
    :return: Path written.
    """
    _outputs.create(config.out)
    record = config.to_dict()
    record["command"] = command
    return _outputs.RunRecord(config.out, record).write()


def plot(
    path: _Path, trajectory: _Trajectory, runs: _t.Sequence[MethodRun], T: int
) -> _Path:
    """Plot truth against mean estimates, one panel per coordinate.

    :param path: Destination SVG.
    :param trajectory: Simulated truth.
    :param runs: Estimator runs.
    :param T: Number of steps.
    :return: Path written.
    """
    import matplotlib  # pylint: disable=import-outside-toplevel

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt  # pylint: disable=import-outside-toplevel

    matplotlib.rcParams["svg.hashsalt"] = _NAME
    dim = trajectory.states.shape[1]
    fig, axes = plt.subplots(dim, 1, figsize=(8, 6), dpi=100, squeeze=False)
    steps = _np.arange(T + 1)
    for i, ax in enumerate(axes[:, 0]):
        ax.plot(steps, trajectory.states[: T + 1, i], "k-", label="truth")
        for run in runs:
            ax.plot(steps[1:], run.means[1:, i], "--", label=run.method)

        ax.set_ylabel(f"x_{i + 1}")
        ax.legend(loc="upper right")

    axes[-1, 0].set_xlabel("k")
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


@_dataclass
class BenchmarkReport:
    """RMSE and runtime of every estimator of a benchmark.

    :param rmse: RMSE per coordinate by method.
    :param runtimes: Mean step time by method.
    :param runs: Estimator runs.
    :param paths: Files written.
    """

    rmse: dict[str, _Array]
    runtimes: dict[str, float]
    runs: list[MethodRun]
    paths: list[_Path]


def run_benchmark(
    config: ExperimentConfig,
    methods: _t.Sequence[str] | None = None,
    command: str = "bench",
) -> BenchmarkReport:
    """Simulate the truth, run the estimators and score their means.

    RMSE is taken over ``k = 1..T``.

    :param config: Experiment configuration.
    :param methods: Estimators to run, the configured one if omitted.
    :param command: Name recorded in ``run.json``.
    :return: Report.
    """
    model = build_model(config)
    trajectory = simulate_truth(config, model)
    T = config.estimation.T  # pylint: disable=invalid-name
    methods = list(methods or [config.estimation.method])
    runs = [run_method(config, m, model, trajectory) for m in methods]
    truth = trajectory.states[1 : T + 1]
    scores = {r.method: _rmse(r.means[1:], truth) for r in runs}
    dim = model.dim_state
    paths = [
        write_record(config, command),
        trajectory.to_csv(config.out / "truth.csv"),
        _outputs.write_csv(
            config.out / "estimates.csv",
            ["method", "k"]
            + [f"z_{i + 1}" for i in range(dim)]
            + ["cost", "grad_norm", "ess", "resampled"],
            [row for run in runs for row in run.rows()],
        ),
        _outputs.write_csv(
            config.out / "metrics.csv",
            ["method", "coordinate", "rmse"],
            [
                [method, i + 1, value]
                for method, values in scores.items()
                for i, value in enumerate(values)
            ],
        ),
    ]
    if config.run.plot:
        paths.append(plot(config.out / "plot.svg", trajectory, runs, T))

    return BenchmarkReport(
        scores, {r.method: r.mean_step_time for r in runs}, runs, paths
    )


def privacy_constants(
    config: ExperimentConfig, model: _SystemModel, method: str = "w2"
) -> _PrivacyConstants:
    """Constants of the privacy bounds for an estimator.

    A ``c_f1`` of 0 uses the Lipschitz constant of the system.

    :param config: Experiment configuration.
    :param model: System.
    :param method: ``w2`` or ``kl``, selecting the step size.
    :return: Constants.
    """
    return _PrivacyConstants(
        l=config.estimation.l_smooth,
        eta=config.kl.eta if method == "kl" else config.estimation.eta,
        c_f1=config.privacy.c_f1 or model.c_f1,
        diam_K0=prior_diameter(config, model),
        alpha=config.privacy.alpha,
    )


def unbacked_constants(
    config: ExperimentConfig, model: _SystemModel
) -> tuple[str, ...]:
    """Overrides the bounds are evaluated with that the system contradicts.

    :param config: Experiment configuration.
    :param model: System.
    :return: One note per contradicted constant.
    """
    value = config.privacy.c_f1
    if 0 < value < model.c_f1:
        return (
            _messages.C_F1_BELOW_MODEL.format(
                value=value, model=model.c_f1, name=model.name
            ),
        )

    return ()


def condition_kind(config: ExperimentConfig) -> str:
    """Privacy condition of the configured estimator.

    A condition of the other estimator is replaced by the one of the same
    scope, pointwise or horizon.

    :param config: Experiment configuration.
    :return: One of ``KINDS``.
    """
    method = config.estimation.method
    family, scope = config.privacy.kind.split("_")
    return config.privacy.kind if family == method else f"{method}_{scope}"


class BudgetRow(_t.NamedTuple):
    """Verdict of one condition at weight ``s`` and its largest weight."""

    s: float
    s_star: float
    report: _FeasibilityReport


def run_dp_budget(config: ExperimentConfig) -> list[BudgetRow]:
    """Evaluate every privacy condition for the configured budget.

    :param config: Experiment configuration.
    :return: One row per condition.
    """
    model = build_model(config)
    privacy = config.privacy
    T = config.estimation.T  # pylint: disable=invalid-name
    unbacked = unbacked_constants(config, model)
    rows = []
    for kind in _KINDS:
        constants = privacy_constants(
            config, model, "kl" if kind.startswith("kl") else "w2"
        )
        s_star = _max_s_schedule(
            kind, constants, T, privacy.epsilon, privacy.delta
        )
        s = privacy.s or s_star
        schedule = _PrivacySchedule(
            privacy.epsilon, privacy.delta, s, T, constants
        )
        report = _check(kind, schedule)
        if unbacked:
            report = _replace(
                report,
                backed=False,
                assumptions=report.assumptions + unbacked,
            )

        rows.append(BudgetRow(s, s_star, report))

    write_record(config, "dp-budget")
    _outputs.write_csv(
        config.out / "dp_budget.csv",
        [
            "kind",
            "s",
            "lhs",
            "rhs",
            "slack",
            "feasible",
            "trivial",
            "backed",
            "s_star",
            "assumptions",
        ],
        [
            [
                r.report.kind,
                r.s,
                r.report.lhs,
                r.report.rhs,
                r.report.slack,
                r.report.feasible,
                r.report.trivial,
                r.report.backed,
                r.s_star,
                "; ".join(r.report.assumptions),
            ]
            for r in rows
        ],
    )
    if config.run.strict:
        for row in rows:
            if not row.report.feasible:
                raise _InfeasibleBudgetError(
                    _messages.INFEASIBLE_BUDGET.format(
                        kind=row.report.kind,
                        lhs=row.report.lhs,
                        rhs=row.report.rhs,
                    )
                )

    return rows


class TradeoffRow(_t.NamedTuple):
    """RMSE of the regularized estimator at one privacy budget."""

    epsilon: float
    s_star: float
    rmse: _Array | None
    flagged: bool
    backed: bool = True


def run_tradeoff_sweep(
    config: ExperimentConfig, epsilons: _t.Sequence[float] | None = None
) -> list[TradeoffRow]:
    """Run the regularized estimator at the largest weight of every budget.

    Budgets whose largest constant weight vanishes are flagged and skipped.
    The weight comes from the condition of the configured estimator.

    :param config: Experiment configuration.
    :param epsilons: Budgets, the configured list if omitted.
    :return: Rows sorted by budget.
    """
    model = build_model(config)
    trajectory = simulate_truth(config, model)
    method = config.estimation.method
    constants = privacy_constants(config, model, method)
    kind = condition_kind(config)
    backed = not unbacked_constants(config, model)
    T = config.estimation.T  # pylint: disable=invalid-name
    truth = trajectory.states[1 : T + 1]
    rows = []
    for epsilon in sorted(epsilons or config.privacy.epsilons):
        s_star = _max_s_schedule(
            kind,
            constants,
            T,
            epsilon,
            config.privacy.delta,
        )
        if s_star < MIN_WEIGHT:
            rows.append(TradeoffRow(epsilon, s_star, None, True, backed))
            continue

        run = run_method(
            config,
            method,
            model,
            trajectory,
            dp_s=None if s_star == 1 else s_star,
        )
        rows.append(
            TradeoffRow(
                epsilon, s_star, _rmse(run.means[1:], truth), False, backed
            )
        )

    dim = model.dim_state
    write_record(config, "tradeoff")
    _outputs.write_csv(
        config.out / "tradeoff.csv",
        ["epsilon", "s_star"]
        + [f"rmse_{i + 1}" for i in range(dim)]
        + ["flagged", "backed"],
        [
            [r.epsilon, r.s_star]
            + (list(r.rmse) if r.rmse is not None else [None] * dim)
            + [r.flagged, r.backed]
            for r in rows
        ],
    )
    if config.run.strict and any(r.flagged for r in rows):
        flagged = next(r for r in rows if r.flagged)
        raise _InfeasibleBudgetError(
            _messages.ROW_FLAGGED.format(epsilon=flagged.epsilon)
        )

    return rows


class RobustnessRow(_t.NamedTuple):
    """Distance to the noise-aware reference next to its bound."""

    k: int
    distance: float
    bound: float
    diverging: bool


def run_robustness(config: ExperimentConfig) -> list[RobustnessRow]:
    """Compare the estimator with its reference on the same trajectory.

    :param config: Experiment configuration.
    :return: One row per step.
    """
    model = build_model(config)
    trajectory = simulate_truth(config, model)
    estimation = config.estimation
    settings = w2_config(config)
    prior = _Ensemble.uniform(
        prior_samples(config, model, estimation.samples)
    )
    noisy = _run_w2(model, trajectory.outputs, prior, settings, estimation.T)
    reference = _run_reference_w2(
        model, trajectory, prior, settings, estimation.T
    )
    rows = []
    for k in range(1, estimation.T + 1):
        bound = _robustness_bound(
            model.c_f1,
            model.c_f2,
            estimation.l_smooth,
            estimation.l_w,
            estimation.eta,
            estimation.N,
            config.noise.process_bound,
            config.noise.measurement_bound,
            k,
        )
        rows.append(
            RobustnessRow(
                k,
                _empirical_w2(noisy.ensembles[k], reference.ensembles[k]),
                bound.bound,
                bound.diverging,
            )
        )

    write_record(config, "robustness")
    _outputs.write_csv(
        config.out / "robustness.csv",
        ["k", "w2_distance", "bound", "diverging"],
        [list(r) for r in rows],
    )
    return rows


def probe_grid(config: ExperimentConfig, model: _SystemModel) -> _Array:
    """Regular probe grid of the configured box.

    :param config: Experiment configuration.
    :param model: System.
    :return: Array of shape ``(points^d, d)``.
    """
    section = config.observability
    axis = _np.linspace(section.grid_lo, section.grid_hi, section.grid_points)
    mesh = _np.meshgrid(*[axis] * model.dim_state, indexing="ij")
    return _np.stack([i.reshape(-1) for i in mesh], axis=-1)


def run_observability(config: ExperimentConfig) -> _ObservabilityReport:
    """Scan the probe grid for the minimum horizon length.

    :param config: Experiment configuration.
    :return: Report.
    """
    model = build_model(config)
    section = config.observability
    report = _find_min_horizon(
        model,
        probe_grid(config, model),
        section.T_max,
        section.tol,
        config.run.threads,
    )
    write_record(config, "observability")
    report.to_csv(config.out / "observability.csv")
    return report


def run_simulate(config: ExperimentConfig) -> _Trajectory:
    """Simulate and store a trajectory.

    :param config: Experiment configuration.
    :return: Trajectory.
    """
    trajectory = simulate_truth(config)
    write_record(config, "simulate")
    trajectory.to_csv(config.out / "trajectory.csv")
    return trajectory
