"""
Reference solution T(t) = e^(M (t - t0)) T0 through the symmetric form of M.

With S = diag(sqrt C) M diag(1/sqrt C) = V diag(w) V^T:

    T(t) = diag(1/sqrt C) V e^(w (t - t0)) V^T diag(sqrt C) T0
"""

import logging
import time
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from core.mesh import Mesh, TemperatureField, check_field
from core.system import dense_symmetric
from solvers._common import Observer, RunResult, SolverConfig

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    sqrt_c: np.ndarray

    @classmethod
    def from_mesh(cls, mesh: Mesh) -> "SpectralDecomposition":
        eigenvalues, eigenvectors = scipy.linalg.eigh(dense_symmetric(mesh))
        # the operator is negative semidefinite; positive values are round-off on the conserved mode
        eigenvalues = np.minimum(eigenvalues, 0.0)
        return cls(eigenvalues, eigenvectors, np.sqrt(mesh.capacities))

    def propagate(self, values: np.ndarray, elapsed: float) -> np.ndarray:
        modes = self.eigenvectors.T @ (self.sqrt_c * values)
        modes *= np.exp(self.eigenvalues * elapsed)
        return (self.eigenvectors @ modes) / self.sqrt_c


def decompose(mesh: Mesh) -> SpectralDecomposition:
    return SpectralDecomposition.from_mesh(mesh)


def exact_solution(
    mesh: Mesh,
    T0: TemperatureField,
    t: float,
    decomposition: SpectralDecomposition | None = None,
) -> TemperatureField:
    check_field(mesh, T0)
    if t == T0.time:
        return T0
    decomposition = decomposition or decompose(mesh)
    return TemperatureField(decomposition.propagate(T0.values, t - T0.time), t)


def integrate_exact(
    mesh: Mesh,
    T0: TemperatureField,
    config: SolverConfig,
    observer: Observer | None = None,
) -> RunResult:
    check_field(mesh, T0)
    started = time.perf_counter()
    final = exact_solution(mesh, T0, config.t_fin)
    wall_time = time.perf_counter() - started
    if observer is not None:
        observer(final)
    logger.info("exact: %d blocks in %.4fs", mesh.n_blocks, wall_time)
    return RunResult(
        final=final,
        steps_taken=1,
        wall_time=wall_time,
        trajectory=[T0, final] if config.record_trajectory else None,
        method="exact",
    )
