import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable

# Make project root importable when running a script directly.
PROJECT_ROOT = Path(__file__).resolve().parents[2]
if str(PROJECT_ROOT) not in sys.path:
    sys.path.insert(0, str(PROJECT_ROOT))

from core.config import configure_logging, default_seed
from core.errors import classify_error
from core.experiments import (
    build_scenario,
    check_max_min_principle,
    euler_threshold_trials,
    experiment_dir,
    run_cne_timing,
    run_convergence_sweep,
    run_speed_comparison,
    scenario_from_catalog,
    stiffness_survey,
    write_experiment,
)
from core.mesh import ScenarioSpec
from core.reports import write_frame, write_json
from core.system import spectral_report

REPORTS_DIR = Path("data") / "reports"

Task = Callable[[ScenarioSpec, Path], dict[str, Any]]


def _spectrum(scenario: ScenarioSpec, out_dir: Path) -> dict[str, Any]:
    mesh, _ = build_scenario(scenario)
    report = spectral_report(mesh)
    write_json(out_dir / "spectrum.json", report.to_dict())
    return report.to_dict()


def _euler_threshold(scenario: ScenarioSpec, out_dir: Path) -> dict[str, Any]:
    mesh, T0 = build_scenario(scenario)
    trials = [p.to_dict() for p in euler_threshold_trials(mesh, T0)]
    write_json(out_dir / "euler_threshold.json", trials)
    return {"trials": trials}


def max_min_task(h_values: list[float]) -> Task:
    def task(scenario: ScenarioSpec, out_dir: Path) -> dict[str, Any]:
        mesh, T0 = build_scenario(scenario)
        checks = []
        for h in h_values:
            check = check_max_min_principle(mesh, T0, h, scenario.t_fin)
            checks.append({"h": h, "holds": check.holds, "steps": check.steps, "worst_excess": check.worst_excess})
        write_json(out_dir / "max_min_principle.json", checks)
        return {"all_hold": all(c["holds"] for c in checks)}

    return task


def stiffness_task(n_seeds: int) -> Task:
    def task(scenario: ScenarioSpec, out_dir: Path) -> dict[str, Any]:
        survey = stiffness_survey(scenario.with_seed, range(n_seeds), progress=True)
        write_json(out_dir / "stiffness_survey.json", survey.to_dict())
        return {"median_log10": survey.median_log10}

    return task


def convergence_task(n_halvings: int) -> Task:
    def task(scenario: ScenarioSpec, out_dir: Path) -> dict[str, Any]:
        h_list = [scenario.t_span / 2**k for k in range(1, n_halvings + 1)]
        report = run_convergence_sweep(scenario, h_list, progress=True)
        write_frame(out_dir / "convergence.csv", report.to_frame())
        write_json(out_dir / "convergence.json", report.to_dict())
        return {"fitted_slope": report.fitted_slope}

    return task


def cne_timing_task(h: float) -> Task:
    def task(scenario: ScenarioSpec, out_dir: Path) -> dict[str, Any]:
        timing = run_cne_timing(scenario, h)
        write_json(out_dir / "cne_timing.json", timing.to_dict())
        return {"wall_time": timing.wall_time, "time_per_step": timing.time_per_step, "max_d_rel": timing.max_d_rel}

    return task


def _compare(scenario: ScenarioSpec, out_dir: Path) -> dict[str, Any]:
    result = run_speed_comparison(scenario, progress=True)
    write_experiment(result, out_dir / "compare")
    return {run.config.method: run.result.wall_time for run in result.runs}


TASKS: dict[str, Task] = {
    "spectrum": _spectrum,
    "euler_threshold": _euler_threshold,
    "compare": _compare,
}


def reproduce_scenario(name: str, tasks: dict[str, Task], seed: int | None = None) -> dict[str, Any]:
    configure_logging()
    scenario = scenario_from_catalog(name, default_seed() if seed is None else seed)
    out_dir = experiment_dir(REPORTS_DIR, scenario)
    print(f"Reproducing {name} (seed {scenario.seed}) into {out_dir}")

    summary: dict[str, Any] = {
        "scenario": scenario.to_dict(),
        "started_at": datetime.now(timezone.utc).isoformat(),
        "totals": {"ok": 0, "error": 0},
        "errors": [],
        "tasks": [],
    }

    for task_name, task in tasks.items():
        try:
            details = task(scenario, out_dir)
            result = {"status": "ok", "task": task_name, "details": details}
            summary["totals"]["ok"] += 1
            print(f"  done {task_name}")
        except Exception as exc:
            result = {"task": task_name, **classify_error(exc)}
            summary["totals"]["error"] += 1
            summary["errors"].append(result)
            print(f"  failed {task_name}: {result['error_type']} ({result['recommended_action']})")
        summary["tasks"].append(result)

    summary["finished_at"] = datetime.now(timezone.utc).isoformat()
    write_json(out_dir / "_summary.json", summary)
    print(f"Summary: {summary['totals']['ok']} ok, {summary['totals']['error']} errors")
    return summary
