import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Any, Callable, Iterator

import numpy as np
import pandas as pd

from core.config import DIVERGENCE_FACTOR
from core.errors import DivergenceError, InvalidConfigError
from core.mesh import TemperatureField

logger = logging.getLogger(__name__)

METHODS = ("cne", "euler", "dormand_prince", "exact")
FIXED_STEP_METHODS = ("cne", "euler")

Observer = Callable[[TemperatureField], None]


@dataclass(frozen=True)
class SolverConfig:
    method: str
    t0: float = 0.0
    t_fin: float = 1.0
    h: float | None = None
    rtol: float = 1e-7
    atol: float = 1e-7
    record_trajectory: bool = False
    threads: int = 1

    def __post_init__(self):
        if self.method not in METHODS:
            raise InvalidConfigError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if not self.t0 < self.t_fin:
            raise InvalidConfigError(f"t0 must be before t_fin, got {self.t0} >= {self.t_fin}")
        if self.method in FIXED_STEP_METHODS and not (self.h is not None and self.h > 0 and math.isfinite(self.h)):
            raise InvalidConfigError(f"method {self.method} needs a positive step size h")
        if self.method == "dormand_prince" and not (self.rtol > 0 and self.atol > 0):
            raise InvalidConfigError("rtol and atol must be positive")
        if self.threads < 1:
            raise InvalidConfigError("threads must be >= 1")

    @property
    def t_span(self) -> float:
        return self.t_fin - self.t0

    def to_dict(self) -> dict[str, Any]:
        data: dict[str, Any] = {"method": self.method, "t0": self.t0, "t_fin": self.t_fin}
        if self.method in FIXED_STEP_METHODS:
            data["h"] = self.h
        if self.method == "dormand_prince":
            data.update(rtol=self.rtol, atol=self.atol)
        return data


@dataclass
class RunResult:
    final: TemperatureField
    steps_taken: int
    steps_rejected: int = 0
    wall_time: float = 0.0
    trajectory: list[TemperatureField] | None = None
    method: str = ""

    def to_dict(self) -> dict[str, Any]:
        return {
            "method": self.method,
            "t_fin": self.final.time,
            "steps_taken": self.steps_taken,
            "steps_rejected": self.steps_rejected,
            "wall_time": self.wall_time,
            "n_snapshots": len(self.trajectory) if self.trajectory is not None else 0,
        }

    def trajectory_frame(self) -> pd.DataFrame:
        """One row per snapshot, a time column then one column per block (1-based names)."""
        snapshots = self.trajectory or [self.final]
        n = len(snapshots[0])
        frame = pd.DataFrame(
            np.vstack([s.values for s in snapshots]),
            columns=[f"T{i + 1}" for i in range(n)],
        )
        frame.insert(0, "time", [s.time for s in snapshots])
        return frame


def step_count(t0: float, t_fin: float, h: float) -> int:
    """Number of fixed steps from t0 to t_fin; the last one is shortened to land on t_fin."""
    return max(1, math.ceil((t_fin - t0) / h - 1e-9))


def check_step(h: float) -> float:
    if not (h > 0 and math.isfinite(h)):
        raise InvalidConfigError(f"step size must be positive and finite, got {h}")
    return float(h)


def chunk_slices(n: int, threads: int) -> list[slice]:
    if threads > n:
        logger.warning("%d threads requested for %d blocks; using %d", threads, n, n)
    threads = max(1, min(threads, n))
    bounds = np.linspace(0, n, threads + 1).round().astype(int)
    return [slice(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


@contextmanager
def block_pool(threads: int) -> Iterator[ThreadPoolExecutor | None]:
    if threads <= 1:
        yield None
        return
    with ThreadPoolExecutor(max_workers=threads, thread_name_prefix="heatbench") as pool:
        yield pool


def run_chunks(tasks: list[Callable[[], None]], pool: ThreadPoolExecutor | None) -> None:
    """Run independent block-chunk tasks; each writes only its own slice of the new buffer."""
    if pool is None or len(tasks) == 1:
        for task in tasks:
            task()
        return
    for future in [pool.submit(task) for task in tasks]:
        future.result()


class DivergenceGuard:
    def __init__(self, initial: np.ndarray):
        self.limit = DIVERGENCE_FACTOR * (float(np.max(np.abs(initial))) + 1.0)

    def check(self, values: np.ndarray, step: int) -> None:
        peak = float(np.max(np.abs(values)))
        if not (peak <= self.limit):
            raise DivergenceError(
                f"instability detected at step {step}: max|T| = {peak:.3g} exceeds {self.limit:.3g}",
                step=step,
            )


def run_fixed_step(
    advance: Callable[[np.ndarray, float, np.ndarray], None],
    T0: TemperatureField,
    config: SolverConfig,
    observer: Observer | None = None,
    guard: DivergenceGuard | None = None,
) -> RunResult:
    """
    Shared loop for fixed-step methods. advance(old, h, new) fills the new buffer
    from the old one only; the two buffers swap after each step.
    """
    n_steps = step_count(config.t0, config.t_fin, config.h)
    old = np.array(T0.values, dtype=float)
    new = np.empty_like(old)
    trajectory = [T0] if config.record_trajectory else None

    started = time.perf_counter()
    for k in range(1, n_steps + 1):
        if k < n_steps:
            h, t = config.h, config.t0 + k * config.h
        else:
            h, t = config.t_fin - (config.t0 + (k - 1) * config.h), config.t_fin
        advance(old, h, new)
        old, new = new, old
        if guard is not None:
            guard.check(old, k)
        if trajectory is not None or observer is not None:
            snapshot = TemperatureField(old, t)
            if trajectory is not None:
                trajectory.append(snapshot)
            if observer is not None:
                observer(snapshot)
    wall_time = time.perf_counter() - started

    logger.info("%s: %d steps of h=%g in %.4fs", config.method, n_steps, config.h, wall_time)
    return RunResult(
        final=TemperatureField(old, config.t_fin),
        steps_taken=n_steps,
        wall_time=wall_time,
        trajectory=trajectory,
        method=config.method,
    )
