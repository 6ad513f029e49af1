import logging
import os
from functools import lru_cache
from pathlib import Path
from typing import Any

# Spectral analysis
DENSE_EIGEN_LIMIT = 10_000
NONZERO_EIGEN_RTOL = 1e-9

# Explicit Euler divergence: max|T| above DIVERGENCE_FACTOR * (initial max|T| + 1)
DIVERGENCE_FACTOR = 1e6

# Dormand-Prince controller
DP_SAFETY = 0.9
DP_MIN_FACTOR = 0.2
DP_MAX_FACTOR = 5.0
DP_BETA1 = 0.7 / 5
DP_BETA2 = 0.4 / 5
DP_MIN_STEP_FRACTION = 1e-14
# Below this size the operator is applied as a dense array (faster for tiny meshes).
DENSE_MATVEC_LIMIT = 512

TRAJECTORY_CSV_MAX_BLOCKS = 1_000

# Euler stability trial: perturbation energy growth that counts as divergence
TRIAL_GROWTH_LIMIT = 1e3
TRIAL_MAX_STEPS = 200
# Max/min principle tolerance, relative to the initial range
MAX_MIN_RTOL = 1e-10

TIMING_REPEATS = 5
CONVERGENCE_TAIL = 5

DEFAULT_SEED = 7
DEFAULT_LOG_LEVEL = "WARNING"

ENV_PREFIX = "HEATBENCH_"
CONFIG_PATH = Path(__file__).resolve().parents[1] / ".heatbench" / "config.toml"

logger = logging.getLogger(__name__)


@lru_cache(maxsize=1)
def _load_config_file() -> dict[str, Any]:
    if not CONFIG_PATH.exists():
        return {}

    try:
        import tomllib

        with CONFIG_PATH.open("rb") as fh:
            data = tomllib.load(fh)
            return data if isinstance(data, dict) else {}
    except Exception:
        return {}


def get_setting(key: str, default: Any = None) -> Any:
    """Environment (HEATBENCH_<KEY>) first, then .heatbench/config.toml, then default."""
    env_value = os.getenv(f"{ENV_PREFIX}{key.upper()}")
    if env_value:
        return env_value

    return _load_config_file().get(key.lower(), default)


def _int_setting(key: str, default: int) -> int:
    value = get_setting(key, default)
    try:
        return int(value)
    except (TypeError, ValueError):
        logger.warning("ignoring non-integer %s setting %r", key, value)
        return default


def default_seed() -> int:
    return _int_setting("seed", DEFAULT_SEED)


def default_threads() -> int:
    return max(1, _int_setting("threads", os.cpu_count() or 1))


def configure_logging(level: str | None = None) -> None:
    level_name = (level or str(get_setting("log_level", DEFAULT_LOG_LEVEL))).upper()
    root = logging.getLogger()
    if not any(getattr(h, "_heatbench", False) for h in root.handlers):
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
        handler._heatbench = True  # type: ignore[attr-defined]
        root.addHandler(handler)
    root.setLevel(getattr(logging, level_name, logging.WARNING))
