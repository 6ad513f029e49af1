from typing import Any


class HeatBenchError(Exception):
    error_type = "heatbench_error"
    exit_code = 1
    recommended_action = "inspect_message"

    def __init__(self, message: str, error_type: str | None = None):
        super().__init__(message)
        if error_type is not None:
            self.error_type = error_type


class InvalidScenarioError(HeatBenchError):
    error_type = "invalid_scenario"
    exit_code = 2
    recommended_action = "fix_input"


class InvalidConfigError(HeatBenchError):
    error_type = "invalid_config"
    exit_code = 2
    recommended_action = "fix_input"


class InvalidBlockError(HeatBenchError):
    error_type = "invalid_id"
    exit_code = 2
    recommended_action = "fix_input"


class SizeMismatchError(HeatBenchError):
    error_type = "size_mismatch"
    exit_code = 2
    recommended_action = "fix_input"


class TimeMismatchError(HeatBenchError):
    error_type = "time_mismatch"
    exit_code = 2
    recommended_action = "fix_input"


class IsolatedBlockError(HeatBenchError):
    error_type = "isolated_block"
    exit_code = 2
    recommended_action = "connect_or_remove_block"


class DisconnectedMeshError(HeatBenchError):
    error_type = "disconnected_mesh"
    exit_code = 2
    recommended_action = "solve_components_separately"


class DegenerateFitError(HeatBenchError):
    error_type = "degenerate"
    exit_code = 2
    recommended_action = "change_step_sizes"


class SolverFailure(HeatBenchError):
    error_type = "solver_failure"
    exit_code = 4
    recommended_action = "change_method_or_step"


class DivergenceError(SolverFailure):
    error_type = "instability_detected"

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message)
        self.step = step


class AdaptiveStepError(SolverFailure):
    error_type = "adaptive_failure"
    recommended_action = "loosen_tolerances_or_use_cne"


class TooLargeError(HeatBenchError):
    error_type = "too_large"
    exit_code = 5
    recommended_action = "use_smaller_mesh"


def classify_error(exc: BaseException) -> dict[str, Any]:
    if isinstance(exc, HeatBenchError):
        return {
            "status": "error",
            "error_type": exc.error_type,
            "recommended_action": exc.recommended_action,
            "message": str(exc),
            "exit_code": exc.exit_code,
        }

    if isinstance(exc, OSError):
        return {
            "status": "error",
            "error_type": "io_failure",
            "recommended_action": "check_paths_and_permissions",
            "message": str(exc),
            "exit_code": 3,
        }

    return {
        "status": "error",
        "error_type": "unexpected",
        "recommended_action": "inspect_message",
        "message": f"{type(exc).__name__}: {exc}",
        "exit_code": 1,
    }
