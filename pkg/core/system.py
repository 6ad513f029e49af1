"""
The linear ODE system dT/dt = M T of a block mesh and its spectral diagnostics.

M_ij = U_ij / C_i for neighbours, M_ii = -sum_j U_ij / C_i. M is not symmetric
when capacities differ, but S = diag(sqrt C) M diag(1/sqrt C), with entries
S_ij = U_ij / sqrt(C_i C_j), is, and has the same eigenvalues.
"""

import logging
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np
import scipy.linalg
import sympy
from scipy import sparse

from core.config import DENSE_EIGEN_LIMIT, NONZERO_EIGEN_RTOL
from core.errors import DisconnectedMeshError, TooLargeError
from core.mesh import Mesh, TemperatureField, check_field, connected_components, validate_for_solver

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SystemOperator:
    matrix: sparse.csr_matrix

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def diagonal(self) -> np.ndarray:
        return self.matrix.diagonal()

    def apply(self, values: np.ndarray) -> np.ndarray:
        return self.matrix @ values

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()


@dataclass(frozen=True, eq=False)
class SpectralReport:
    eigenvalues: np.ndarray
    stiffness_ratio: float
    euler_h_max: float
    lambda_max_abs: float
    n_zero_modes: int

    @property
    def connected(self) -> bool:
        return self.n_zero_modes == 1

    def to_dict(self, include_eigenvalues: bool = False) -> dict[str, Any]:
        data: dict[str, Any] = {
            "n_blocks": int(self.eigenvalues.size),
            "stiffness_ratio": self.stiffness_ratio,
            "euler_h_max": self.euler_h_max,
            "lambda_max_abs": self.lambda_max_abs,
            "lambda_min_nonzero_abs": self.lambda_max_abs / self.stiffness_ratio,
            "n_zero_modes": self.n_zero_modes,
            "connected": self.connected,
        }
        if include_eigenvalues:
            data["eigenvalues"] = self.eigenvalues.tolist()
        return data


def _operator_from_parts(mesh: Mesh, off_diagonal: np.ndarray, diagonal: np.ndarray) -> sparse.csr_matrix:
    n = mesh.n_blocks
    rows = np.concatenate([mesh.heads, mesh.tails, np.arange(n)])
    cols = np.concatenate([mesh.tails, mesh.heads, np.arange(n)])
    matrix = sparse.csr_matrix((np.concatenate([off_diagonal, diagonal]), (rows, cols)), shape=(n, n))
    matrix.sort_indices()
    return matrix


def assemble_operator(mesh: Mesh) -> SystemOperator:
    validate_for_solver(mesh)
    c = mesh.capacities
    u = mesh.conductances
    off_diagonal = np.concatenate([u / c[mesh.heads], u / c[mesh.tails]])
    diagonal = -mesh.total_conductance / c
    return SystemOperator(_operator_from_parts(mesh, off_diagonal, diagonal))


def rhs(mesh: Mesh, T: TemperatureField) -> np.ndarray:
    """dT_i/dt = sum_j U_ij (T_j - T_i) / C_i, walking each block's neighbour list."""
    check_field(mesh, T)
    return _rates(mesh, T.values)


def _rates(mesh: Mesh, values: np.ndarray) -> np.ndarray:
    inflow = mesh.adjacency @ values - mesh.total_conductance * values
    return inflow / mesh.capacities


def symmetrize(mesh: Mesh) -> sparse.csr_matrix:
    validate_for_solver(mesh)
    c = mesh.capacities
    coupling = mesh.conductances / np.sqrt(c[mesh.heads] * c[mesh.tails])
    diagonal = -mesh.total_conductance / c
    return _operator_from_parts(mesh, np.concatenate([coupling, coupling]), diagonal)


def dense_symmetric(mesh: Mesh) -> np.ndarray:
    if mesh.n_blocks > DENSE_EIGEN_LIMIT:
        raise TooLargeError(
            f"{mesh.n_blocks} blocks exceed the dense eigensolver limit of {DENSE_EIGEN_LIMIT}"
        )
    return symmetrize(mesh).toarray()


def spectral_report(mesh: Mesh) -> SpectralReport:
    eigenvalues = scipy.linalg.eigh(dense_symmetric(mesh), eigvals_only=True)
    eigenvalues = np.sort(eigenvalues)

    lambda_max_abs = float(np.max(np.abs(eigenvalues)))
    cutoff = NONZERO_EIGEN_RTOL * lambda_max_abs
    magnitudes = np.abs(eigenvalues)
    nonzero = magnitudes[magnitudes > cutoff]
    n_zero_modes = int(np.count_nonzero(magnitudes <= cutoff))

    if n_zero_modes != 1:
        logger.warning("mesh has %d near-zero modes; it is not connected", n_zero_modes)

    return SpectralReport(
        eigenvalues=eigenvalues,
        stiffness_ratio=float(lambda_max_abs / nonzero.min()),
        euler_h_max=2.0 / lambda_max_abs,
        lambda_max_abs=lambda_max_abs,
        n_zero_modes=n_zero_modes,
    )


def equilibrium_temperature(mesh: Mesh, T0: TemperatureField) -> float:
    check_field(mesh, T0)
    components = connected_components(mesh)
    if len(components) != 1:
        raise DisconnectedMeshError(
            f"mesh has {len(components)} connected components; there is no single equilibrium"
        )
    c = mesh.capacities
    return float(np.dot(c, T0.values) / c.sum())


def symbolic_operator(
    capacities: Sequence[Any],
    edges: Sequence[tuple[int, int, Any]],
) -> sympy.Matrix:
    """Exact operator from symbolic or rational C_i and U_ij (0-based edge endpoints)."""
    n = len(capacities)
    caps = [sympy.sympify(c) for c in capacities]
    matrix = sympy.zeros(n, n)
    for i, j, u in edges:
        u = sympy.sympify(u)
        matrix[i, j] += u / caps[i]
        matrix[j, i] += u / caps[j]
        matrix[i, i] -= u / caps[i]
        matrix[j, j] -= u / caps[j]
    return matrix


def slowest_timescale(report: SpectralReport) -> float:
    """1 / |smallest nonzero eigenvalue|, in seconds."""
    return report.stiffness_ratio / report.lambda_max_abs
