"""Explicit Euler (FTCS on this discretization). Stable only for h <= 2 / |lambda_max|."""

from concurrent.futures import ThreadPoolExecutor
from functools import partial

import numpy as np
from scipy import sparse

from core.mesh import Mesh, TemperatureField, check_field, validate_for_solver
from core.system import rhs
from solvers._common import (
    DivergenceGuard,
    Observer,
    RunResult,
    SolverConfig,
    block_pool,
    check_step,
    chunk_slices,
    run_chunks,
    run_fixed_step,
)


class EulerKernel:
    def __init__(self, mesh: Mesh, threads: int = 1):
        validate_for_solver(mesh)
        self.total = mesh.total_conductance
        self.capacities = mesh.capacities
        self.slices = chunk_slices(mesh.n_blocks, threads)
        self.rows = [mesh.adjacency[sl] for sl in self.slices]

    def advance(self, old: np.ndarray, h: float, new: np.ndarray, pool: ThreadPoolExecutor | None = None) -> None:
        def kernel(sl: slice, rows: sparse.csr_matrix) -> None:
            rates = (rows @ old - self.total[sl] * old[sl]) / self.capacities[sl]
            new[sl] = old[sl] + h * rates

        run_chunks([partial(kernel, sl, rows) for sl, rows in zip(self.slices, self.rows)], pool)


def euler_step(mesh: Mesh, T: TemperatureField, h: float) -> TemperatureField:
    h = check_step(h)
    validate_for_solver(mesh)
    return TemperatureField(T.values + h * rhs(mesh, T), T.time + h)


def integrate_euler(
    mesh: Mesh,
    T0: TemperatureField,
    config: SolverConfig,
    observer: Observer | None = None,
) -> RunResult:
    check_field(mesh, T0)
    kernel = EulerKernel(mesh, config.threads)
    with block_pool(config.threads) as pool:
        return run_fixed_step(
            lambda old, h, new: kernel.advance(old, h, new, pool),
            T0,
            config,
            observer,
            guard=DivergenceGuard(T0.values),
        )
