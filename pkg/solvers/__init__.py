from core.errors import TimeMismatchError
from core.mesh import Mesh, TemperatureField, check_field

from ._common import METHODS, Observer, RunResult, SolverConfig
from .cne import cne_coefficients, cne_step, integrate_cne
from .dormand_prince import dormand_prince_integrate, integrate_dormand_prince
from .euler import euler_step, integrate_euler
from .exact import decompose, exact_solution, integrate_exact

SOLVER_MAP = {
    "cne": integrate_cne,
    "euler": integrate_euler,
    "dormand_prince": integrate_dormand_prince,
    "exact": integrate_exact,
}


def integrate(
    mesh: Mesh,
    T0: TemperatureField,
    config: SolverConfig,
    observer: Observer | None = None,
) -> RunResult:
    check_field(mesh, T0)
    if T0.time != config.t0:
        raise TimeMismatchError(f"initial field is at t = {T0.time}, config starts at t0 = {config.t0}")
    # SolverConfig already rejected unknown methods
    return SOLVER_MAP[config.method](mesh, T0, config, observer)
