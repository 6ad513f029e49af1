import pytest

from core.experiments import build_scenario, scenario_example1
from core.mesh import Mesh, ScenarioSpec, TemperatureField, UniformRandom


@pytest.fixture
def two_blocks() -> Mesh:
    return Mesh.from_edges([1.0, 1.0], [(0, 1, 1.0)])


@pytest.fixture
def two_blocks_hot_cold() -> TemperatureField:
    return TemperatureField([1.0, 0.0], 0.0)


@pytest.fixture(scope="session")
def example1():
    scenario = scenario_example1(seed=7)
    mesh, T0 = build_scenario(scenario)
    return scenario, mesh, T0


@pytest.fixture(scope="session")
def mild_grid():
    """10 x 10 lattice with capacities and conductances within one decade: not stiff."""
    scenario = ScenarioSpec(
        n_x=10,
        n_y=10,
        capacity_exponent_range=(0.0, 1.0),
        ux_exponent_range=(0.0, 1.0),
        uy_exponent_range=(0.0, 1.0),
        seed=3,
        initial_condition=UniformRandom(0.0, 100.0),
        t_fin=1.0,
        name="mild",
    )
    mesh, T0 = build_scenario(scenario)
    return scenario, mesh, T0
