"""Error measures against a reference field, energy bookkeeping and order fitting."""

import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
import pandas as pd

from core.config import CONVERGENCE_TAIL
from core.errors import DegenerateFitError, SizeMismatchError, TimeMismatchError
from core.mesh import Mesh, TemperatureField, check_field

METRICS = ("max_d", "sum_d", "abs_ebe")


def _check_pair(a: TemperatureField, b: TemperatureField) -> np.ndarray:
    if len(a) != len(b):
        raise SizeMismatchError(f"fields have {len(a)} and {len(b)} values")
    if not math.isclose(a.time, b.time, rel_tol=1e-12, abs_tol=1e-12):
        raise TimeMismatchError(f"fields are at different times: {a.time} vs {b.time}")
    return np.abs(a.values - b.values)


def max_deviation(a: TemperatureField, b: TemperatureField) -> float:
    return float(_check_pair(a, b).max())


def sum_deviation(a: TemperatureField, b: TemperatureField) -> float:
    """Sum of absolute deviations; a signed sum could cancel while blocks are far off."""
    return float(_check_pair(a, b).sum())


def total_energy(mesh: Mesh, T: TemperatureField) -> float:
    check_field(mesh, T)
    return float(np.dot(mesh.capacities, T.values))


def energy_balance_error(mesh: Mesh, T_initial: TemperatureField, T_final: TemperatureField) -> float:
    """Signed: total energy at the end minus total energy at the start."""
    check_field(mesh, T_initial)
    check_field(mesh, T_final)
    return float(np.dot(mesh.capacities, T_final.values - T_initial.values))


def estimate_order(points: Sequence[tuple[float, float]]) -> float:
    """Least-squares slope of log10(error) against log10(h)."""
    if len(points) < 3:
        raise DegenerateFitError(f"need at least 3 (h, error) points, got {len(points)}")
    h = np.array([p[0] for p in points], dtype=float)
    errors = np.array([p[1] for p in points], dtype=float)
    if np.any(h <= 0):
        raise DegenerateFitError("step sizes must be positive")
    if np.any(errors <= 0):
        raise DegenerateFitError("zero error at some h; the method is exact there and no order can be fitted")
    slope, _ = np.polyfit(np.log10(h), np.log10(errors), 1)
    return float(slope)


@dataclass(frozen=True)
class ErrorReport:
    max_d: float
    sum_d: float
    ebe: float

    def to_dict(self) -> dict[str, Any]:
        return {"max_d": self.max_d, "sum_d": self.sum_d, "ebe": self.ebe}


def error_report(
    mesh: Mesh,
    initial: TemperatureField,
    final: TemperatureField,
    reference: TemperatureField,
) -> ErrorReport:
    return ErrorReport(
        max_d=max_deviation(final, reference),
        sum_d=sum_deviation(final, reference),
        ebe=energy_balance_error(mesh, initial, final),
    )


@dataclass
class ConvergenceReport:
    h_values: list[float]
    errors: dict[str, list[float]]
    fitted_slope: dict[str, float | None] = field(default_factory=dict)
    tail: int = CONVERGENCE_TAIL
    # signed energy balance error per step size; abs_ebe in errors is its magnitude
    ebe: list[float] | None = None

    def __post_init__(self):
        h = np.asarray(self.h_values, dtype=float)
        if h.size < 3:
            raise DegenerateFitError("a convergence sweep needs at least 3 step sizes")
        if np.any(np.diff(h) >= 0):
            raise DegenerateFitError("h values must be strictly decreasing")
        for name, values in self.errors.items():
            if len(values) != h.size:
                raise SizeMismatchError(f"{name} has {len(values)} entries for {h.size} step sizes")
        if self.ebe is not None and len(self.ebe) != h.size:
            raise SizeMismatchError(f"ebe has {len(self.ebe)} entries for {h.size} step sizes")
        if not self.fitted_slope:
            self.fitted_slope = {name: self._fit(name) for name in self.errors}

    def _fit(self, metric: str) -> float | None:
        # smallest-h tail only: the large-h plateau flattens the slope
        points = list(zip(self.h_values, self.errors[metric]))[-self.tail :]
        try:
            return estimate_order(points)
        except DegenerateFitError:
            return None

    def halving_ratios(self, metric: str = "max_d") -> list[float]:
        """error(h) / error(h_next) along the tail; about 2 for a first-order method halving h."""
        values = self.errors[metric][-self.tail :]
        return [a / b for a, b in zip(values[:-1], values[1:]) if b > 0]

    def ebe_sign_changes(self) -> int:
        if self.ebe is None:
            return 0
        signs = np.sign([e for e in self.ebe if e != 0.0])
        return int(np.count_nonzero(signs[1:] != signs[:-1]))

    def to_dict(self) -> dict[str, Any]:
        return {
            "h_values": list(self.h_values),
            "errors": {k: list(v) for k, v in self.errors.items()},
            "fitted_slope": dict(self.fitted_slope),
            "tail": self.tail,
            **({"ebe": list(self.ebe)} if self.ebe is not None else {}),
        }

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame({"h": self.h_values})
        for name in METRICS:
            if name in self.errors:
                frame[name] = self.errors[name]
        if self.ebe is not None:
            frame["ebe"] = self.ebe
        return frame


def convergence_report(
    h_values: Sequence[float],
    errors_by_metric: dict[str, Sequence[float]],
    tail: int = CONVERGENCE_TAIL,
    ebe: Sequence[float] | None = None,
) -> ConvergenceReport:
    return ConvergenceReport(
        h_values=[float(h) for h in h_values],
        errors={k: [float(e) for e in v] for k, v in errors_by_metric.items()},
        tail=tail,
        ebe=None if ebe is None else [float(e) for e in ebe],
    )
