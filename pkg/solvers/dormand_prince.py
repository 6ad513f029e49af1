"""
Dormand-Prince 5(4) embedded pair with PI step-size control.

Butcher table and error weights as in Dormand & Prince (1980); the first
stage of each step reuses the last stage of the previous accepted one (FSAL).
The error norm is the RMS of err_i / (atol + rtol * max(|y_i|, |y_new_i|)).
"""

import logging
import math
import time

import numpy as np

from core.config import (
    DENSE_MATVEC_LIMIT,
    DP_BETA1,
    DP_BETA2,
    DP_MAX_FACTOR,
    DP_MIN_FACTOR,
    DP_MIN_STEP_FRACTION,
    DP_SAFETY,
)
from core.errors import AdaptiveStepError, InvalidConfigError
from core.mesh import Mesh, TemperatureField, check_field
from core.system import assemble_operator
from solvers._common import Observer, RunResult, SolverConfig

logger = logging.getLogger(__name__)

A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
# fifth-order minus embedded fourth-order weights
E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])


def _rms(values: np.ndarray) -> float:
    return float(np.sqrt(np.mean(values * values)))


def _initial_step(f, y0: np.ndarray, f0: np.ndarray, span: float, rtol: float, atol: float) -> float:
    scale = atol + rtol * np.abs(y0)
    d0 = _rms(y0 / scale)
    d1 = _rms(f0 / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, span)
    f1 = f @ (y0 + h0 * f0)
    d2 = _rms((f1 - f0) / scale) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1, span)


def dormand_prince_integrate(
    mesh: Mesh,
    T0: TemperatureField,
    t_fin: float,
    rtol: float,
    atol: float,
    observer: Observer | None = None,
    record_trajectory: bool = False,
) -> RunResult:
    check_field(mesh, T0)
    if not (rtol > 0 and atol > 0):
        raise InvalidConfigError("rtol and atol must be positive")
    t = T0.time
    span = t_fin - t
    if not span > 0:
        raise InvalidConfigError(f"t_fin {t_fin} must be after the initial time {t}")

    operator = assemble_operator(mesh).matrix
    f = operator.toarray() if mesh.n_blocks <= DENSE_MATVEC_LIMIT else operator
    h_min = DP_MIN_STEP_FRACTION * span

    y = np.array(T0.values, dtype=float)
    stages = np.empty((7, y.size))
    stages[0] = f @ y
    h = _initial_step(f, y, stages[0], span, rtol, atol)

    err_prev = 1e-4
    rejected_last = False
    accepted = rejected = 0
    trajectory = [T0] if record_trajectory else None

    started = time.perf_counter()
    while t < t_fin:
        if h < h_min:
            raise AdaptiveStepError(
                f"step size {h:.3g} underflowed the minimum {h_min:.3g} at t = {t:.6g}"
            )
        last = t + 1.01 * h >= t_fin
        if last:
            h = t_fin - t

        for s in range(1, 6):
            stages[s] = f @ (y + h * (A[s] @ stages[:s]))
        y_new = y + h * (A[6] @ stages[:6])
        stages[6] = f @ y_new

        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = _rms(h * (E @ stages) / scale)

        if err <= 1.0:
            accepted += 1
            t = t_fin if last else t + h
            y = y_new
            stages[0] = stages[6]
            if err == 0.0:
                factor = DP_MAX_FACTOR
            else:
                factor = DP_SAFETY * err ** (-DP_BETA1) * err_prev**DP_BETA2
                factor = min(DP_MAX_FACTOR, max(DP_MIN_FACTOR, factor))
            if rejected_last:
                factor = min(factor, 1.0)
            err_prev = max(err, 1e-4)
            rejected_last = False
            if trajectory is not None or observer is not None:
                snapshot = TemperatureField(y, t)
                if trajectory is not None:
                    trajectory.append(snapshot)
                if observer is not None:
                    observer(snapshot)
        else:
            rejected += 1
            factor = max(DP_MIN_FACTOR, DP_SAFETY * err ** (-1 / 5)) if math.isfinite(err) else DP_MIN_FACTOR
            rejected_last = True
        h *= factor
    wall_time = time.perf_counter() - started

    logger.info(
        "dormand_prince: %d accepted, %d rejected steps in %.3fs", accepted, rejected, wall_time
    )
    return RunResult(
        final=TemperatureField(y, t_fin),
        steps_taken=accepted,
        steps_rejected=rejected,
        wall_time=wall_time,
        trajectory=trajectory,
        method="dormand_prince",
    )


def integrate_dormand_prince(
    mesh: Mesh,
    T0: TemperatureField,
    config: SolverConfig,
    observer: Observer | None = None,
) -> RunResult:
    return dormand_prince_integrate(
        mesh,
        T0,
        config.t_fin,
        config.rtol,
        config.atol,
        observer=observer,
        record_trajectory=config.record_trajectory,
    )
