"""
Packaged scenarios and the benchmark experiments run on them: convergence
sweeps against the eigendecomposition oracle, the Euler stability threshold,
the max/min principle and the CNe vs Dormand-Prince wall-time comparison.
"""

import logging
import statistics
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np
import pandas as pd
from tqdm import tqdm

from core.catalog import SCENARIO_CATALOG
from core.config import (
    MAX_MIN_RTOL,
    TRIAL_GROWTH_LIMIT,
    TRIAL_MAX_STEPS,
    TIMING_REPEATS,
    default_seed,
)
from core.errors import DivergenceError, InvalidConfigError, InvalidScenarioError, SizeMismatchError
from core.mesh import Mesh, ScenarioSpec, SplitMix64, TemperatureField, build_grid, check_field, initial_field
from core.metrics import ConvergenceReport, ErrorReport, convergence_report, error_report
from core.reports import slugify, write_frame, write_json
from core.system import SpectralReport, spectral_report
from solvers import RunResult, SolverConfig, exact_solution, integrate
from solvers._common import DivergenceGuard
from solvers.euler import EulerKernel

logger = logging.getLogger(__name__)


def scenario_from_catalog(name: str, seed: int | None = None) -> ScenarioSpec:
    entry = SCENARIO_CATALOG.get(name)
    if entry is None:
        raise InvalidScenarioError(f"unknown scenario {name!r}; known: {sorted(SCENARIO_CATALOG)}")
    return ScenarioSpec.from_dict({**entry, "name": name, "seed": default_seed() if seed is None else seed})


def scenario_example1(seed: int | None = None) -> ScenarioSpec:
    return scenario_from_catalog("example1", seed)


def scenario_example2(seed: int | None = None) -> ScenarioSpec:
    return scenario_from_catalog("example2", seed)


def build_scenario(scenario: ScenarioSpec) -> tuple[Mesh, TemperatureField]:
    mesh = build_grid(scenario)
    return mesh, initial_field(mesh, scenario)


@dataclass
class ExperimentRun:
    config: SolverConfig
    result: RunResult
    errors: ErrorReport

    def to_dict(self) -> dict[str, Any]:
        return {"config": self.config.to_dict(), "result": self.result.to_dict(), "errors": self.errors.to_dict()}


@dataclass
class ExperimentResult:
    scenario: ScenarioSpec
    spectral: SpectralReport
    runs: list[ExperimentRun] = field(default_factory=list)
    convergence: ConvergenceReport | None = None
    snapshot: pd.DataFrame | None = None

    def run(self, method: str) -> ExperimentRun:
        for run in self.runs:
            if run.config.method == method:
                return run
        raise KeyError(method)

    def to_dict(self) -> dict[str, Any]:
        return {
            "scenario": self.scenario.to_dict(),
            "spectral": self.spectral.to_dict(),
            "runs": [run.to_dict() for run in self.runs],
            "convergence": self.convergence.to_dict() if self.convergence is not None else None,
        }


def run_convergence_sweep(
    scenario: ScenarioSpec,
    h_list: Sequence[float],
    threads: int = 1,
    progress: bool = False,
) -> ConvergenceReport:
    h_values = [float(h) for h in h_list]
    if len(h_values) < 3 or any(b >= a for a, b in zip(h_values, h_values[1:])):
        raise InvalidConfigError("h_list needs at least 3 strictly decreasing step sizes")

    mesh, T0 = build_scenario(scenario)
    reference = exact_solution(mesh, T0, scenario.t_fin)
    errors: dict[str, list[float]] = {"max_d": [], "sum_d": [], "abs_ebe": []}
    signed_ebe: list[float] = []
    for h in tqdm(h_values, desc=f"{scenario.name} sweep", disable=not progress):
        config = SolverConfig("cne", t0=scenario.t0, t_fin=scenario.t_fin, h=h, threads=threads)
        run = integrate(mesh, T0, config)
        report = error_report(mesh, T0, run.final, reference)
        errors["max_d"].append(report.max_d)
        errors["sum_d"].append(report.sum_d)
        errors["abs_ebe"].append(abs(report.ebe))
        signed_ebe.append(report.ebe)
        logger.debug("h=%g max_d=%.3e", h, report.max_d)

    return convergence_report(h_values, errors, ebe=signed_ebe)


def snapshot_table(
    initial: TemperatureField,
    reference: TemperatureField,
    approx: TemperatureField,
    label: str = "cne",
) -> pd.DataFrame:
    """Temperature against block index at t_fin, one column per field."""
    if not len(initial) == len(reference) == len(approx):
        raise SizeMismatchError("snapshot fields differ in length")
    return pd.DataFrame(
        {
            "block": np.arange(1, len(initial) + 1),
            "initial": initial.values,
            "reference": reference.values,
            label: approx.values,
        }
    )


def _timed_run(mesh: Mesh, T0: TemperatureField, config: SolverConfig, repeats: int) -> RunResult:
    timings = []
    result = None
    for _ in range(repeats):
        started = time.perf_counter()
        result = integrate(mesh, T0, config)
        timings.append(time.perf_counter() - started)
    return replace(result, wall_time=statistics.median(timings))


def run_speed_comparison(
    scenario: ScenarioSpec,
    repeats: int = TIMING_REPEATS,
    threads: int = 1,
    progress: bool = False,
) -> ExperimentResult:
    """CNe at h = span/100 against Dormand-Prince at rtol = atol = 1e-7, both checked against the oracle."""
    if repeats < 1:
        raise InvalidConfigError("repeats must be >= 1")
    mesh, T0 = build_scenario(scenario)
    spectral = spectral_report(mesh)
    reference = exact_solution(mesh, T0, scenario.t_fin)

    configs = [
        SolverConfig("cne", t0=scenario.t0, t_fin=scenario.t_fin, h=scenario.t_span / 100, threads=threads),
        SolverConfig("dormand_prince", t0=scenario.t0, t_fin=scenario.t_fin, rtol=1e-7, atol=1e-7),
    ]
    experiment = ExperimentResult(scenario=scenario, spectral=spectral)
    for config in tqdm(configs, desc=f"{scenario.name} compare", disable=not progress):
        result = _timed_run(mesh, T0, config, repeats)
        experiment.runs.append(ExperimentRun(config, result, error_report(mesh, T0, result.final, reference)))
        logger.info("%s: median %.4fs over %d runs", config.method, result.wall_time, repeats)

    experiment.snapshot = snapshot_table(T0, reference, experiment.run("cne").result.final)
    return experiment


@dataclass(frozen=True)
class CneTiming:
    h: float
    steps: int
    repeats: int
    wall_time: float
    time_per_step: float
    max_d: float
    max_d_rel: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "h": self.h,
            "steps": self.steps,
            "repeats": self.repeats,
            "wall_time": self.wall_time,
            "time_per_step": self.time_per_step,
            "max_d": self.max_d,
            "max_d_rel": self.max_d_rel,
        }


def run_cne_timing(
    scenario: ScenarioSpec,
    h: float,
    repeats: int = TIMING_REPEATS,
    threads: int = 1,
) -> CneTiming:
    """Median CNe wall time at one step size, with MaxD against the exact solution relative to the initial range."""
    if repeats < 1:
        raise InvalidConfigError("repeats must be >= 1")
    mesh, T0 = build_scenario(scenario)
    config = SolverConfig("cne", t0=scenario.t0, t_fin=scenario.t_fin, h=h, threads=threads)
    result = _timed_run(mesh, T0, config, repeats)
    reference = exact_solution(mesh, T0, scenario.t_fin)
    max_d = error_report(mesh, T0, result.final, reference).max_d
    span = T0.value_range
    timing = CneTiming(
        h=config.h,
        steps=result.steps_taken,
        repeats=repeats,
        wall_time=result.wall_time,
        time_per_step=result.wall_time / result.steps_taken,
        max_d=max_d,
        max_d_rel=max_d / span if span > 0 else 0.0,
    )
    logger.info("cne h=%g: median %.4fs for %d steps, MaxD %.3g", h, timing.wall_time, timing.steps, max_d)
    return timing


@dataclass(frozen=True)
class StabilityTrial:
    h: float
    diverged: bool
    steps: int
    growth: float

    def to_dict(self) -> dict[str, Any]:
        return {"h": self.h, "diverged": self.diverged, "steps": self.steps, "growth": self.growth}


def _energy_norm(capacities: np.ndarray, values: np.ndarray) -> float:
    return float(np.sqrt(np.dot(capacities, values * values)))


def run_stability_trial(
    mesh: Mesh,
    T0: TemperatureField,
    h: float,
    max_steps: int = TRIAL_MAX_STEPS,
    seed: int = 0,
) -> StabilityTrial:
    """
    Explicit Euler for at most max_steps steps of size h.

    Alongside the field itself, a seeded perturbation r / sqrt(C) is pushed
    through the same step map. Under the energy norm sqrt(sum C_i x_i^2) the
    Euler map is symmetric, so the perturbation never grows for stable h and
    grows like |1 + h lambda_max|^k otherwise, even when the initial field
    hardly excites the stiffest mode. Divergence: the field trips the blow-up
    guard or the perturbation grows by more than TRIAL_GROWTH_LIMIT.
    """
    check_field(mesh, T0)
    if not h > 0:
        raise InvalidConfigError("trial step size must be positive")
    kernel = EulerKernel(mesh)
    capacities = mesh.capacities

    rng = SplitMix64(seed)
    perturbation = np.array([rng.random() - 0.5 for _ in range(mesh.n_blocks)]) / np.sqrt(capacities)
    start_norm = _energy_norm(capacities, perturbation)
    field_old = np.array(T0.values)
    field_new = np.empty_like(field_old)
    pert_new = np.empty_like(perturbation)
    guard = DivergenceGuard(T0.values)

    growth = 1.0
    for step in range(1, max_steps + 1):
        kernel.advance(field_old, h, field_new)
        kernel.advance(perturbation, h, pert_new)
        field_old, field_new = field_new, field_old
        perturbation, pert_new = pert_new, perturbation
        growth = _energy_norm(capacities, perturbation) / start_norm
        try:
            guard.check(field_old, step)
        except DivergenceError:
            return StabilityTrial(h, True, step, growth)
        if growth > TRIAL_GROWTH_LIMIT:
            return StabilityTrial(h, True, step, growth)
    return StabilityTrial(h, False, max_steps, growth)


@dataclass(frozen=True)
class PrincipleCheck:
    holds: bool
    steps: int
    worst_excess: float
    tolerance: float


def check_max_min_principle(
    mesh: Mesh,
    T0: TemperatureField,
    h: float,
    t_fin: float,
    threads: int = 1,
) -> PrincipleCheck:
    """Run CNe and measure how far any intermediate field strays outside [min T0, max T0]."""
    lo = float(T0.values.min())
    hi = float(T0.values.max())
    tolerance = MAX_MIN_RTOL * (hi - lo)
    worst = 0.0

    def observe(snapshot: TemperatureField) -> None:
        nonlocal worst
        worst = max(worst, lo - float(snapshot.values.min()), float(snapshot.values.max()) - hi)

    config = SolverConfig("cne", t0=T0.time, t_fin=t_fin, h=h, threads=threads)
    result = integrate(mesh, T0, config, observer=observe)
    return PrincipleCheck(worst <= tolerance, result.steps_taken, worst, tolerance)


@dataclass(frozen=True)
class StiffnessSurvey:
    seeds: list[int]
    stiffness_ratios: list[float]

    @property
    def median_log10(self) -> float:
        return float(np.median(np.log10(self.stiffness_ratios)))

    def to_dict(self) -> dict[str, Any]:
        return {
            "seeds": list(self.seeds),
            "stiffness_ratios": list(self.stiffness_ratios),
            "median_log10": self.median_log10,
        }


def stiffness_survey(
    factory: Callable[[int], ScenarioSpec],
    seeds: Sequence[int],
    progress: bool = False,
) -> StiffnessSurvey:
    ratios = []
    for seed in tqdm(list(seeds), desc="stiffness", disable=not progress):
        mesh = build_grid(factory(seed))
        ratios.append(spectral_report(mesh).stiffness_ratio)
    return StiffnessSurvey(list(seeds), ratios)


def euler_threshold_trials(
    mesh: Mesh,
    T0: TemperatureField,
    spectral: SpectralReport | None = None,
    factors: Sequence[float] = (0.95, 1.05),
    max_steps: int = TRIAL_MAX_STEPS,
) -> list[StabilityTrial]:
    spectral = spectral or spectral_report(mesh)
    return [run_stability_trial(mesh, T0, f * spectral.euler_h_max, max_steps) for f in factors]


def write_experiment(result: ExperimentResult, out_dir: Path) -> list[Path]:
    """report.json plus convergence.csv and snapshot.csv when present."""
    out_dir = Path(out_dir)
    written = [out_dir / "report.json"]
    write_json(written[0], result.to_dict())
    if result.convergence is not None:
        written.append(out_dir / "convergence.csv")
        write_frame(written[-1], result.convergence.to_frame())
    if result.snapshot is not None:
        written.append(out_dir / "snapshot.csv")
        write_frame(written[-1], result.snapshot)
    return written


def experiment_dir(root: Path, scenario: ScenarioSpec) -> Path:
    return Path(root) / slugify(f"{scenario.name}_seed_{scenario.seed}")

