import json
import logging
from contextlib import contextmanager
from pathlib import Path
from typing import Annotated, Iterator, Optional

import numpy as np
import typer

from core.config import configure_logging, default_threads
from core.errors import InvalidConfigError, InvalidScenarioError, classify_error
from core.experiments import (
    build_scenario,
    run_convergence_sweep,
    run_speed_comparison,
    scenario_from_catalog,
    write_experiment,
)
from core.mesh import Mesh, RectangularPulse, ScenarioSpec
from core.metrics import energy_balance_error, total_energy
from core.reports import read_field, read_json, write_field, write_frame, write_json, write_trajectory
from core.system import spectral_report
from solvers import SolverConfig, integrate

logger = logging.getLogger(__name__)

app = typer.Typer(
    help="Block heat-conduction benchmark: CNe exponential update against Euler, Dormand-Prince and the exact solution.",
    no_args_is_help=True,
    add_completion=False,
)

STATE = {"threads": 1}

ScenarioFile = Annotated[Optional[Path], typer.Option("--scenario", help="Scenario JSON file.")]
Example1 = Annotated[bool, typer.Option("--example1", help="Packaged 10x10 random-start scenario.")]
Example2 = Annotated[bool, typer.Option("--example2", help="Packaged 400x10 hot-slab scenario.")]
Seed = Annotated[Optional[int], typer.Option("--seed", help="Overrides the scenario seed (default: HEATBENCH_SEED or 7).")]
OutDir = Annotated[Path, typer.Option("--out", help="Output directory.")]


@contextmanager
def _handled(summary_path: Path | None = None) -> Iterator[None]:
    try:
        yield
    except typer.Exit:
        raise
    except Exception as exc:
        info = classify_error(exc)
        if summary_path is not None:
            try:
                write_json(summary_path, info)
            except OSError:
                pass
        typer.echo(f"error [{info['error_type']}]: {info['message']}", err=True)
        raise typer.Exit(code=info["exit_code"])


def _resolve_scenario(scenario_file: Path | None, example1: bool, example2: bool, seed: int | None) -> ScenarioSpec:
    chosen = [flag for flag in (scenario_file is not None, example1, example2) if flag]
    if len(chosen) != 1:
        raise InvalidScenarioError("pick exactly one of --scenario, --example1, --example2")
    if example1:
        return scenario_from_catalog("example1", seed)
    if example2:
        return scenario_from_catalog("example2", seed)
    scenario = ScenarioSpec.from_dict(read_json(scenario_file))
    return scenario if seed is None else scenario.with_seed(seed)


def _default_h_list(scenario: ScenarioSpec) -> list[float]:
    return [scenario.t_span / 2**k for k in range(1, 11)]


def _parse_h_list(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise InvalidConfigError(f"--h-list must be comma-separated numbers, got {text!r}") from exc


@app.callback()
def main(
    threads: Annotated[Optional[int], typer.Option("--threads", help="Solver threads (default: HEATBENCH_THREADS or all cores).")] = None,
    log_level: Annotated[Optional[str], typer.Option("--log-level", help="DEBUG, INFO, WARNING or ERROR.")] = None,
) -> None:
    configure_logging(log_level)
    if threads is not None and threads < 1:
        logger.warning("--threads %d is below 1; using 1", threads)
    STATE["threads"] = max(1, threads) if threads is not None else default_threads()


@app.command()
def scenario(
    scenario_file: ScenarioFile = None,
    example1: Example1 = False,
    example2: Example2 = False,
    seed: Seed = None,
    out: Annotated[Optional[Path], typer.Option("--out", help="Scenario JSON to write; stdout when omitted.")] = None,
) -> None:
    """Write a resolved scenario description."""
    with _handled():
        spec = _resolve_scenario(scenario_file, example1, example2, seed)
        if out is None:
            typer.echo(json.dumps(spec.to_dict(), indent=2, sort_keys=True))
            return
        write_json(out, spec.to_dict())
        typer.echo(f"scenario: {out}")


@app.command()
def generate(
    out: OutDir,
    scenario_file: ScenarioFile = None,
    example1: Example1 = False,
    example2: Example2 = False,
    seed: Seed = None,
) -> None:
    """Build the mesh and initial field of a scenario: mesh.json, initial.csv, scenario.json."""
    with _handled():
        spec = _resolve_scenario(scenario_file, example1, example2, seed)
        mesh, T0 = build_scenario(spec)
        write_json(out / "mesh.json", mesh.to_dict())
        write_field(out / "initial.csv", T0)
        write_json(out / "scenario.json", spec.to_dict())

        typer.echo(f"blocks: {mesh.n_blocks}")
        typer.echo(f"edges: {mesh.n_edges}")
        ic = spec.initial_condition
        if isinstance(ic, RectangularPulse):
            typer.echo(f"hot blocks: {int(np.count_nonzero(T0.values == ic.high_value))}")
        typer.echo(f"written: {out}")


def _load_mesh(path: Path) -> Mesh:
    return Mesh.from_dict(read_json(path))


def _resolve_t_fin(t_fin: float | None, mesh_path: Path) -> float:
    if t_fin is not None:
        return t_fin
    scenario_path = mesh_path.parent / "scenario.json"
    if scenario_path.exists():
        return float(read_json(scenario_path)["t_fin"])
    raise InvalidConfigError("--t-fin is required when no scenario.json sits next to the mesh")


@app.command()
def solve(
    mesh_path: Annotated[Path, typer.Option("--mesh", help="mesh.json from generate.")],
    init_path: Annotated[Path, typer.Option("--init", help="Initial-field CSV.")],
    out: OutDir,
    method: Annotated[str, typer.Option("--method", help="cne, euler, dormand_prince or exact.")] = "cne",
    h: Annotated[Optional[float], typer.Option("--h", help="Step size for cne and euler.")] = None,
    rtol: Annotated[float, typer.Option("--rtol")] = 1e-7,
    atol: Annotated[float, typer.Option("--atol")] = 1e-7,
    t_fin: Annotated[Optional[float], typer.Option("--t-fin", help="Final time (default: scenario.json beside the mesh).")] = None,
    trajectory: Annotated[bool, typer.Option("--trajectory", help="Also write every step to trajectory.csv.")] = False,
) -> None:
    """Integrate an initial field to t_fin: final.csv and summary.json."""
    with _handled(out / "summary.json"):
        mesh = _load_mesh(mesh_path)
        T0 = read_field(init_path)
        config = SolverConfig(
            method,
            t0=T0.time,
            t_fin=_resolve_t_fin(t_fin, mesh_path),
            h=h,
            rtol=rtol,
            atol=atol,
            record_trajectory=trajectory,
            threads=STATE["threads"],
        )
        result = integrate(mesh, T0, config)

        write_field(out / "final.csv", result.final)
        if trajectory:
            write_trajectory(out / "trajectory.csv", result.trajectory_frame())
        summary = {
            "status": "ok",
            "config": config.to_dict(),
            "run": result.to_dict(),
            "energy_initial": total_energy(mesh, T0),
            "energy_final": total_energy(mesh, result.final),
            "ebe": energy_balance_error(mesh, T0, result.final),
        }
        write_json(out / "summary.json", summary)
        typer.echo(f"{method}: {result.steps_taken} steps, {result.wall_time:.4f}s, EBE {summary['ebe']:.6g} J")


@app.command()
def spectrum(
    mesh_path: Annotated[Optional[Path], typer.Option("--mesh", help="mesh.json; or use a scenario source.")] = None,
    scenario_file: ScenarioFile = None,
    example1: Example1 = False,
    example2: Example2 = False,
    seed: Seed = None,
    eigenvalues: Annotated[bool, typer.Option("--eigenvalues", help="Include every eigenvalue in the JSON.")] = False,
    out: Annotated[Optional[Path], typer.Option("--out", help="spectrum JSON to write.")] = None,
) -> None:
    """Stiffness ratio and the explicit Euler step limit of a mesh."""
    with _handled():
        if mesh_path is not None:
            mesh = _load_mesh(mesh_path)
        else:
            mesh, _ = build_scenario(_resolve_scenario(scenario_file, example1, example2, seed))
        report = spectral_report(mesh)
        if out is not None:
            write_json(out, report.to_dict(include_eigenvalues=eigenvalues))
        typer.echo(f"stiffness ratio: {report.stiffness_ratio:.6g}")
        typer.echo(f"euler h max: {report.euler_h_max:.6g} s")
        typer.echo(f"|lambda| max: {report.lambda_max_abs:.6g} 1/s")
        typer.echo(f"zero modes: {report.n_zero_modes}")


@app.command()
def converge(
    out: OutDir,
    scenario_file: ScenarioFile = None,
    example1: Example1 = False,
    example2: Example2 = False,
    seed: Seed = None,
    h_list: Annotated[Optional[str], typer.Option("--h-list", help="Comma-separated, strictly decreasing step sizes.")] = None,
) -> None:
    """CNe errors against the exact solution over a range of step sizes: convergence.csv and .json."""
    with _handled():
        spec = _resolve_scenario(scenario_file, example1, example2, seed)
        hs = _parse_h_list(h_list) if h_list else _default_h_list(spec)
        report = run_convergence_sweep(spec, hs, threads=STATE["threads"], progress=True)
        write_frame(out / "convergence.csv", report.to_frame())
        write_json(out / "convergence.json", report.to_dict())
        for name, slope in report.fitted_slope.items():
            typer.echo(f"slope {name}: {slope:.3f}" if slope is not None else f"slope {name}: n/a")
        typer.echo(f"written: {out}")


@app.command()
def compare(
    out: OutDir,
    scenario_file: ScenarioFile = None,
    example1: Example1 = False,
    example2: Example2 = False,
    seed: Seed = None,
    repeats: Annotated[int, typer.Option("--repeats", help="Timed repetitions; the median is reported.")] = 5,
) -> None:
    """Wall time and accuracy of CNe (h = span/100) against Dormand-Prince (tol 1e-7)."""
    with _handled():
        spec = _resolve_scenario(scenario_file, example1, example2, seed)
        result = run_speed_comparison(spec, repeats=repeats, threads=STATE["threads"], progress=True)
        write_experiment(result, out)
        typer.echo(f"{'method':<16}{'steps':>10}{'rejected':>10}{'wall [s]':>12}{'MaxD':>14}")
        for run in result.runs:
            typer.echo(
                f"{run.config.method:<16}{run.result.steps_taken:>10}{run.result.steps_rejected:>10}"
                f"{run.result.wall_time:>12.4f}{run.errors.max_d:>14.4g}"
            )
        typer.echo(f"written: {out}")


if __name__ == "__main__":
    app()
