import numpy as np
import pytest
import sympy

import core.system
from core.errors import DisconnectedMeshError, IsolatedBlockError, TooLargeError
from core.mesh import Mesh, TemperatureField, characteristic_time
from core.system import (
    assemble_operator,
    equilibrium_temperature,
    rhs,
    slowest_timescale,
    spectral_report,
    symbolic_operator,
    symmetrize,
)


def test_two_block_operator(two_blocks):
    np.testing.assert_array_equal(assemble_operator(two_blocks).toarray(), [[-1.0, 1.0], [1.0, -1.0]])


def test_rows_sum_to_zero(example1):
    _, mesh, _ = example1
    matrix = assemble_operator(mesh).matrix
    row_sums = matrix @ np.ones(mesh.n_blocks)
    scale = np.abs(matrix.diagonal())
    assert np.all(np.abs(row_sums) <= 1e-12 * scale)


def test_operator_indices_sorted(example1):
    _, mesh, _ = example1
    assert assemble_operator(mesh).matrix.has_sorted_indices


def test_rhs():
    mesh = Mesh.from_edges([1.0, 3.0], [(0, 1, 2.0)])
    np.testing.assert_allclose(rhs(mesh, TemperatureField([4.0, 0.0])), [-8.0, 8.0 / 3.0])


def _random_connected_mesh(rng):
    n = int(rng.integers(2, 40))
    pairs = {(int(rng.integers(0, k)), k) for k in range(1, n)}
    for _ in range(int(rng.integers(0, n))):
        i, j = sorted(int(v) for v in rng.choice(n, size=2, replace=False))
        pairs.add((i, j))
    capacities = 10.0 ** rng.uniform(-3.0, 3.0, size=n)
    edges = [(i, j, float(10.0 ** rng.uniform(-3.0, 3.0))) for i, j in sorted(pairs)]
    return Mesh.from_edges(capacities, edges)


def test_rhs_matches_assembled_operator_on_random_meshes():
    rng = np.random.default_rng(2024)
    for _ in range(100):
        mesh = _random_connected_mesh(rng)
        values = rng.uniform(-50.0, 150.0, size=mesh.n_blocks)
        matrix = assemble_operator(mesh).matrix
        expected = matrix @ values
        scale = abs(matrix) @ np.abs(values)
        assert np.all(np.abs(rhs(mesh, TemperatureField(values)) - expected) <= 1e-12 * scale)


def test_characteristic_time_is_inverse_diagonal(example1):
    _, mesh, _ = example1
    diagonal = assemble_operator(mesh).matrix.diagonal()
    for i in range(mesh.n_blocks):
        assert characteristic_time(mesh, i) == pytest.approx(-1.0 / diagonal[i], rel=1e-14)


def test_rhs_constant_field_is_zero(example1):
    _, mesh, _ = example1
    rates = rhs(mesh, TemperatureField(np.full(mesh.n_blocks, 42.0)))
    assert np.all(np.abs(rates) <= 1e-12 * 42.0 * mesh.total_conductance / mesh.capacities)


def test_rhs_rejects_isolated_block():
    mesh = Mesh.from_edges([1.0, 1.0, 1.0], [(0, 1, 1.0)])
    with pytest.raises(IsolatedBlockError):
        assemble_operator(mesh)


def test_symmetrized_matrix_has_same_spectrum(mild_grid):
    _, mesh, _ = mild_grid
    s = symmetrize(mesh).toarray()
    np.testing.assert_allclose(s, s.T, rtol=0, atol=0)
    m_eigs = np.sort(np.linalg.eigvals(assemble_operator(mesh).toarray()).real)
    s_eigs = np.sort(np.linalg.eigvalsh(s))
    np.testing.assert_allclose(m_eigs, s_eigs, atol=1e-9 * np.max(np.abs(s_eigs)))


def test_symmetrize_is_similarity_transform(mild_grid):
    _, mesh, _ = mild_grid
    sqrt_c = np.sqrt(mesh.capacities)
    m = assemble_operator(mesh).toarray()
    expected = sqrt_c[:, None] * m / sqrt_c[None, :]
    np.testing.assert_allclose(symmetrize(mesh).toarray(), expected, rtol=1e-13, atol=1e-15)


class TestSpectralReport:
    def test_two_blocks(self, two_blocks):
        report = spectral_report(two_blocks)
        np.testing.assert_allclose(report.eigenvalues, [-2.0, 0.0], atol=1e-14)
        assert report.lambda_max_abs == pytest.approx(2.0)
        assert report.stiffness_ratio == pytest.approx(1.0)
        assert report.euler_h_max == pytest.approx(1.0)
        assert report.n_zero_modes == 1 and report.connected
        assert slowest_timescale(report) == pytest.approx(0.5)

    def test_disconnected_mesh_has_two_zero_modes(self):
        mesh = Mesh.from_edges([1.0] * 4, [(0, 1, 1.0), (2, 3, 1.0)])
        report = spectral_report(mesh)
        assert report.n_zero_modes == 2
        assert not report.connected

    def test_example1_is_stiff(self, example1):
        _, mesh, _ = example1
        report = spectral_report(mesh)
        assert report.n_zero_modes == 1
        assert report.stiffness_ratio > 1e3
        assert report.euler_h_max == pytest.approx(2.0 / report.lambda_max_abs)
        assert np.all(report.eigenvalues <= 1e-9 * report.lambda_max_abs)

    def test_to_dict(self, two_blocks):
        data = spectral_report(two_blocks).to_dict(include_eigenvalues=True)
        assert data["n_blocks"] == 2
        assert data["lambda_min_nonzero_abs"] == pytest.approx(2.0)
        assert len(data["eigenvalues"]) == 2
        assert "eigenvalues" not in spectral_report(two_blocks).to_dict()

    def test_size_guard(self, example1, monkeypatch):
        _, mesh, _ = example1
        monkeypatch.setattr(core.system, "DENSE_EIGEN_LIMIT", 50)
        with pytest.raises(TooLargeError):
            spectral_report(mesh)


class TestEquilibrium:
    def test_capacity_weighted_mean(self):
        mesh = Mesh.from_edges([1.0, 3.0], [(0, 1, 2.0)])
        assert equilibrium_temperature(mesh, TemperatureField([4.0, 0.0])) == pytest.approx(1.0)

    def test_disconnected(self):
        mesh = Mesh.from_edges([1.0] * 4, [(0, 1, 1.0), (2, 3, 1.0)])
        with pytest.raises(DisconnectedMeshError):
            equilibrium_temperature(mesh, TemperatureField([1.0, 2.0, 3.0, 4.0]))


class TestFourBlockAssembly:
    """Blocks 1..4 on a 2 x 2 lattice; 1-2 and 3-4 share a vertical face, 1-3 and 2-4 a horizontal one."""

    def _expected(self, c, u12, u13, u24, u34):
        c1, c2, c3, c4 = c
        return sympy.Matrix(
            [
                [-u12 / c1 - u13 / c1, u12 / c1, u13 / c1, 0],
                [u12 / c2, -u12 / c2 - u24 / c2, 0, u24 / c2],
                [u13 / c3, 0, -u13 / c3 - u34 / c3, u34 / c3],
                [0, u24 / c4, u34 / c4, -u24 / c4 - u34 / c4],
            ]
        )

    def test_symbolic_entries(self):
        c = sympy.symbols("C1:5", positive=True)
        u12, u13, u24, u34 = sympy.symbols("U12 U13 U24 U34", positive=True)
        matrix = symbolic_operator(c, [(0, 1, u12), (0, 2, u13), (1, 3, u24), (2, 3, u34)])
        assert sympy.simplify(matrix - self._expected(c, u12, u13, u24, u34)) == sympy.zeros(4, 4)

    def test_rational_entries_match_float_assembly(self):
        c = [sympy.Integer(v) for v in (1, 2, 3, 4)]
        u = [sympy.Integer(v) for v in (5, 6, 7, 8)]
        edges = [(0, 1, u[0]), (0, 2, u[1]), (1, 3, u[2]), (2, 3, u[3])]
        exact = symbolic_operator(c, edges)
        assert exact == self._expected(c, *u)
        assert exact[3, 3] == sympy.Rational(-15, 4)

        mesh = Mesh.from_edges([1.0, 2.0, 3.0, 4.0], [(i, j, float(w)) for i, j, w in edges], grid=(2, 2))
        np.testing.assert_allclose(
            assemble_operator(mesh).toarray(),
            np.array(exact.tolist(), dtype=float),
            rtol=1e-15,
        )
