"""
Explicit exponential relaxation update for block heat conduction.

Each block relaxes towards the conductance-weighted average of its neighbours
with its own characteristic time tau_i = C_i / sum_j U_ij:

    T_i(t+h) = T_i(t) e^(-h/tau_i) + (sum_j U_ij T_j(t) / sum_j U_ij) (1 - e^(-h/tau_i))

Every coefficient is non-negative and they sum to one, so the new value is a
convex combination of old values: unconditionally stable, and no value leaves
the range of the initial data. Only old values are read (double buffering),
which makes the update trivially data-parallel.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import partial

import numpy as np
from scipy import sparse

from core.mesh import Mesh, TemperatureField, check_field, validate_for_solver
from solvers._common import (
    Observer,
    RunResult,
    SolverConfig,
    block_pool,
    check_step,
    chunk_slices,
    run_chunks,
    run_fixed_step,
)


@dataclass(frozen=True, eq=False)
class CnePlan:
    """Per-step-size factors: decay = e^(-h/tau), gain = 1 - e^(-h/tau)."""

    h: float
    decay: np.ndarray
    gain: np.ndarray

    @classmethod
    def build(cls, mesh: Mesh, h: float) -> "CnePlan":
        x = h * mesh.total_conductance / mesh.capacities
        # e^(-x) flushes to 0 beyond x ~ 745; gain then is exactly 1 (neighbour average)
        decay = np.exp(-x)
        gain = -np.expm1(-x)
        return cls(h, decay, gain)


class CneKernel:
    def __init__(self, mesh: Mesh, threads: int = 1):
        validate_for_solver(mesh)
        self.mesh = mesh
        self.adjacency = mesh.adjacency
        self.total = mesh.total_conductance
        self.slices = chunk_slices(mesh.n_blocks, threads)
        self.rows = [self.adjacency[sl] for sl in self.slices]
        self._plans: dict[float, CnePlan] = {}

    def plan(self, h: float) -> CnePlan:
        plan = self._plans.get(h)
        if plan is None:
            plan = self._plans[h] = CnePlan.build(self.mesh, h)
        return plan

    def advance(self, old: np.ndarray, h: float, new: np.ndarray, pool: ThreadPoolExecutor | None = None) -> None:
        plan = self.plan(h)

        def kernel(sl: slice, rows: sparse.csr_matrix) -> None:
            # neighbour sums run in ascending neighbour order whatever the chunking
            average = (rows @ old) / self.total[sl]
            new[sl] = plan.decay[sl] * old[sl] + plan.gain[sl] * average

        run_chunks([partial(kernel, sl, rows) for sl, rows in zip(self.slices, self.rows)], pool)


def cne_coefficients(mesh: Mesh, h: float) -> tuple[np.ndarray, sparse.csr_matrix]:
    """Self weights e^(-h/tau_i) and neighbour weights (1 - e^(-h/tau_i)) U_ij / sum U."""
    validate_for_solver(mesh)
    plan = CnePlan.build(mesh, h)
    scale = plan.gain / mesh.total_conductance
    return plan.decay, sparse.diags(scale) @ mesh.adjacency


def cne_step(mesh: Mesh, T: TemperatureField, h: float) -> TemperatureField:
    h = check_step(h)
    check_field(mesh, T)
    kernel = CneKernel(mesh)
    new = np.empty(mesh.n_blocks)
    kernel.advance(np.array(T.values), h, new)
    return TemperatureField(new, T.time + h)


def integrate_cne(
    mesh: Mesh,
    T0: TemperatureField,
    config: SolverConfig,
    observer: Observer | None = None,
) -> RunResult:
    check_field(mesh, T0)
    kernel = CneKernel(mesh, config.threads)
    with block_pool(config.threads) as pool:
        return run_fixed_step(
            lambda old, h, new: kernel.advance(old, h, new, pool),
            T0,
            config,
            observer,
        )
