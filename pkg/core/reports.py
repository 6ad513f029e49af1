import json
import re
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from core.config import TRAJECTORY_CSV_MAX_BLOCKS
from core.errors import InvalidScenarioError, TooLargeError
from core.mesh import TemperatureField

FLOAT_FORMAT = "%.17g"


def slugify(value: str) -> str:
    value = value.lower().strip()
    value = re.sub(r"[^a-z0-9]+", "_", value)
    return value.strip("_")


def _to_builtin(value: Any) -> Any:
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


def write_json(path: Path, data: Any) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=2, ensure_ascii=True, sort_keys=True, default=_to_builtin)
        fh.write("\n")


def read_json(path: Path) -> Any:
    with Path(path).open("r", encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidScenarioError(f"{path} is not valid JSON: {exc}") from exc


def write_frame(path: Path, frame: pd.DataFrame) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def field_frame(field: TemperatureField) -> pd.DataFrame:
    """Columns block (1-based), time, temperature."""
    return pd.DataFrame(
        {
            "block": np.arange(1, len(field) + 1),
            "time": np.full(len(field), field.time),
            "temperature": field.values,
        }
    )


def write_field(path: Path, field: TemperatureField) -> None:
    write_frame(path, field_frame(field))


def read_field(path: Path) -> TemperatureField:
    try:
        frame = pd.read_csv(path)
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise InvalidScenarioError(f"{path} is not a readable field CSV: {exc}") from exc
    missing = {"block", "time", "temperature"} - set(frame.columns)
    if missing:
        raise InvalidScenarioError(f"{path} lacks columns {sorted(missing)}")
    frame = frame.sort_values("block")
    if not np.array_equal(frame["block"].to_numpy(), np.arange(1, len(frame) + 1)):
        raise InvalidScenarioError(f"{path} must list blocks 1..n exactly once")
    times = frame["time"].unique()
    if times.size != 1:
        raise InvalidScenarioError(f"{path} mixes several time stamps")
    try:
        values = frame["temperature"].to_numpy(dtype=float)
        time = float(times[0])
    except (TypeError, ValueError) as exc:
        raise InvalidScenarioError(f"{path} holds a non-numeric time or temperature: {exc}") from exc
    return TemperatureField(values, time)


def write_trajectory(path: Path, frame: pd.DataFrame) -> None:
    n_blocks = frame.shape[1] - 1
    if n_blocks > TRAJECTORY_CSV_MAX_BLOCKS:
        raise TooLargeError(
            f"trajectory CSV is limited to {TRAJECTORY_CSV_MAX_BLOCKS} blocks, mesh has {n_blocks}"
        )
    write_frame(path, frame)
