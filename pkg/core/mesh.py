"""
Block meshes, temperature fields and seeded scenario recipes.

Indexing: blocks are zero-based internally. Scenario files and pulse bands use
1-based indices. Grid blocks are linearized column-major, i.e. the 1-based
index of lattice position (ix, iy) is (ix - 1) * N_y + iy, so a contiguous
index band is a vertical slab of whole columns.
"""

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Iterable, Sequence

import jsonschema
import networkx as nx
import numpy as np
from scipy import sparse

from core.errors import (
    InvalidBlockError,
    InvalidScenarioError,
    IsolatedBlockError,
    SizeMismatchError,
)

MASK64 = (1 << 64) - 1
_GOLDEN_GAMMA = 0x9E3779B97F4A7C15


class SplitMix64:
    """Pinned 64-bit generator; identical seeds give identical streams everywhere."""

    def __init__(self, seed: int):
        self.state = int(seed) & MASK64

    def next_uint64(self) -> int:
        self.state = (self.state + _GOLDEN_GAMMA) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def random(self) -> float:
        # top 53 bits plus half an ulp: strictly inside (0, 1)
        return ((self.next_uint64() >> 11) + 0.5) * 2.0**-53

    def skip(self, n: int) -> None:
        self.state = (self.state + n * _GOLDEN_GAMMA) & MASK64


def log_uniform_sample(rng: SplitMix64, exp_lo: float, exp_hi: float) -> float:
    x = exp_lo + (exp_hi - exp_lo) * rng.random()
    return 10.0**x


def heat_capacity(specific_heat: float, density: float, volume: float) -> float:
    """C = c * rho * V, in J/K."""
    for name, value in (("specific_heat", specific_heat), ("density", density), ("volume", volume)):
        if not (value > 0 and math.isfinite(value)):
            raise InvalidScenarioError(f"{name} must be positive and finite, got {value}")
    return specific_heat * density * volume


def conductance(conductivity: float, area: float, distance: float) -> float:
    """U = k * A / d, in W/K."""
    for name, value in (("conductivity", conductivity), ("area", area), ("distance", distance)):
        if not (value > 0 and math.isfinite(value)):
            raise InvalidScenarioError(f"{name} must be positive and finite, got {value}")
    return conductivity * area / distance


def linear_index(ix: int, iy: int, n_y: int) -> int:
    """Zero-based column-major index of zero-based lattice position (ix, iy)."""
    return ix * n_y + iy


def grid_position(i: int, n_y: int) -> tuple[int, int]:
    return divmod(i, n_y)


def lattice_edges(n_x: int, n_y: int) -> tuple[np.ndarray, np.ndarray]:
    """Horizontal then vertical 4-neighbour edges, each in ascending lower-endpoint order."""
    idx = np.arange(n_x * n_y).reshape(n_x, n_y)
    horizontal = np.column_stack([idx[:-1, :].ravel(), idx[1:, :].ravel()])
    vertical = np.column_stack([idx[:, :-1].ravel(), idx[:, 1:].ravel()])
    return horizontal.reshape(-1, 2), vertical.reshape(-1, 2)


def _readonly(values: Any, dtype: type) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Mesh:
    capacities: np.ndarray
    heads: np.ndarray
    tails: np.ndarray
    conductances: np.ndarray
    grid: tuple[int, int] | None = None

    def __post_init__(self):
        capacities = _readonly(self.capacities, float).reshape(-1)
        heads = _readonly(self.heads, np.int64).reshape(-1)
        tails = _readonly(self.tails, np.int64).reshape(-1)
        u = _readonly(self.conductances, float).reshape(-1)
        n = capacities.size

        if n < 1:
            raise InvalidScenarioError("mesh needs at least one block")
        if not np.all(np.isfinite(capacities)) or np.any(capacities <= 0):
            raise InvalidScenarioError("every capacity must be positive and finite")
        if not (heads.size == tails.size == u.size):
            raise InvalidScenarioError("edge arrays must have equal length")
        if not np.all(np.isfinite(u)) or np.any(u <= 0):
            raise InvalidScenarioError("every conductance must be positive and finite")
        if heads.size and (min(heads.min(), tails.min()) < 0 or max(heads.max(), tails.max()) >= n):
            raise InvalidBlockError("edge endpoint outside [0, n_blocks)")
        if np.any(heads == tails):
            raise InvalidScenarioError("edge endpoints must be distinct")

        lo = np.minimum(heads, tails)
        hi = np.maximum(heads, tails)
        order = np.lexsort((hi, lo))
        lo, hi, u = lo[order], hi[order], u[order]
        if lo.size > 1 and np.any((lo[1:] == lo[:-1]) & (hi[1:] == hi[:-1])):
            raise InvalidScenarioError("each unordered block pair may appear at most once")

        if self.grid is not None:
            n_x, n_y = (int(v) for v in self.grid)
            if n_x * n_y != n:
                raise InvalidScenarioError(f"grid {n_x}x{n_y} does not match {n} blocks")
            horizontal, vertical = lattice_edges(n_x, n_y)
            expected = np.vstack([horizontal, vertical])
            exp_order = np.lexsort((expected[:, 1], expected[:, 0]))
            expected = expected[exp_order]
            if expected.shape[0] != lo.size or not (
                np.array_equal(expected[:, 0], lo) and np.array_equal(expected[:, 1], hi)
            ):
                raise InvalidScenarioError("grid metadata present but edges are not the 4-neighbour lattice")
            object.__setattr__(self, "grid", (n_x, n_y))

        for name, arr in (("capacities", capacities), ("heads", lo), ("tails", hi), ("conductances", u)):
            arr = np.ascontiguousarray(arr)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_edges(
        cls,
        capacities: Sequence[float],
        edges: Iterable[tuple[int, int, float]],
        grid: tuple[int, int] | None = None,
    ) -> "Mesh":
        triples = list(edges)
        heads = [int(i) for i, _, _ in triples]
        tails = [int(j) for _, j, _ in triples]
        u = [float(w) for _, _, w in triples]
        return cls(np.asarray(capacities, dtype=float), heads, tails, u, grid)

    @property
    def n_blocks(self) -> int:
        return int(self.capacities.size)

    @property
    def n_edges(self) -> int:
        return int(self.conductances.size)

    @property
    def edges(self) -> list[tuple[int, int, float]]:
        return list(zip(self.heads.tolist(), self.tails.tolist(), self.conductances.tolist()))

    @cached_property
    def adjacency(self) -> sparse.csr_matrix:
        """Symmetric conductance matrix, rows sorted by neighbour index."""
        n = self.n_blocks
        rows = np.concatenate([self.heads, self.tails])
        cols = np.concatenate([self.tails, self.heads])
        data = np.concatenate([self.conductances, self.conductances])
        adj = sparse.csr_matrix((data, (rows, cols)), shape=(n, n))
        adj.sort_indices()
        return adj

    @cached_property
    def total_conductance(self) -> np.ndarray:
        """Sum of U_ij over the neighbours of each block, in ascending neighbour order."""
        adj = self.adjacency
        rows = np.repeat(np.arange(self.n_blocks), np.diff(adj.indptr))
        totals = np.bincount(rows, weights=adj.data, minlength=self.n_blocks)
        totals.setflags(write=False)
        return totals

    @cached_property
    def degree(self) -> np.ndarray:
        return np.diff(self.adjacency.indptr)

    def to_graph(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(range(self.n_blocks))
        graph.add_weighted_edges_from(self.edges)
        return graph

    def to_dict(self) -> dict[str, Any]:
        return {
            "n_blocks": self.n_blocks,
            "capacities": self.capacities.tolist(),
            "edges": [[i, j, u] for i, j, u in self.edges],
            "grid": list(self.grid) if self.grid is not None else None,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Mesh":
        try:
            capacities = data["capacities"]
            edges = [(int(i), int(j), float(u)) for i, j, u in data["edges"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidScenarioError(f"malformed mesh document: {exc}") from exc
        if "n_blocks" in data and int(data["n_blocks"]) != len(capacities):
            raise InvalidScenarioError("n_blocks does not match the capacities array")
        grid = tuple(data["grid"]) if data.get("grid") else None
        return cls.from_edges(capacities, edges, grid)


@dataclass(frozen=True, eq=False)
class TemperatureField:
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        values = np.array(self.values, dtype=float, copy=True).reshape(-1)
        if not np.all(np.isfinite(values)):
            raise InvalidScenarioError("temperature values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "time", float(self.time))

    def __len__(self) -> int:
        return int(self.values.size)

    @property
    def value_range(self) -> float:
        return float(self.values.max() - self.values.min())


def check_block(mesh: Mesh, i: int) -> int:
    if isinstance(i, bool) or not isinstance(i, (int, np.integer)) or not 0 <= i < mesh.n_blocks:
        raise InvalidBlockError(f"block id {i!r} not in [0, {mesh.n_blocks})")
    return int(i)


def check_field(mesh: Mesh, field: TemperatureField) -> None:
    if len(field) != mesh.n_blocks:
        raise SizeMismatchError(f"field has {len(field)} values, mesh has {mesh.n_blocks} blocks")


def neighbors(mesh: Mesh, i: int) -> list[tuple[int, float]]:
    i = check_block(mesh, i)
    adj = mesh.adjacency
    start, end = adj.indptr[i], adj.indptr[i + 1]
    return list(zip(adj.indices[start:end].tolist(), adj.data[start:end].tolist()))


def characteristic_time(mesh: Mesh, i: int) -> float:
    """tau_i = C_i / sum_j U_ij, the relaxation time against frozen neighbours."""
    i = check_block(mesh, i)
    if mesh.degree[i] == 0:
        raise IsolatedBlockError(f"block {i} has no neighbours; its characteristic time is undefined")
    return float(mesh.capacities[i] / mesh.total_conductance[i])


def isolated_blocks(mesh: Mesh) -> list[int]:
    return sorted(nx.isolates(mesh.to_graph()))


def connected_components(mesh: Mesh) -> list[list[int]]:
    components = [sorted(c) for c in nx.connected_components(mesh.to_graph())]
    return sorted(components, key=lambda c: c[0])


def validate_for_solver(mesh: Mesh) -> None:
    if np.any(mesh.degree == 0):
        isolated = np.flatnonzero(mesh.degree == 0)
        raise IsolatedBlockError(f"blocks without neighbours: {isolated[:10].tolist()}")


# --- Scenarios ------------------------------------------------------------------------


@dataclass(frozen=True)
class UniformRandom:
    lo: float = 0.0
    hi: float = 100.0
    kind: str = field(default="uniform-random", init=False)

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)) or self.lo > self.hi:
            raise InvalidScenarioError(f"uniform-random needs finite lo <= hi, got ({self.lo}, {self.hi})")


@dataclass(frozen=True)
class RectangularPulse:
    i_lo: int
    i_hi: int
    high_value: float = 100.0
    low_value: float = 0.0
    kind: str = field(default="rectangular-pulse", init=False)

    def __post_init__(self):
        if self.i_lo < 1 or self.i_hi < self.i_lo:
            raise InvalidScenarioError(f"pulse band must satisfy 1 <= i_lo <= i_hi, got [{self.i_lo}, {self.i_hi}]")


InitialCondition = UniformRandom | RectangularPulse


def _check_range(name: str, bounds: tuple[float, float]) -> tuple[float, float]:
    lo, hi = (float(b) for b in bounds)
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise InvalidScenarioError(f"{name} must be a finite interval with lo < hi, got {bounds}")
    return lo, hi


@dataclass(frozen=True)
class ScenarioSpec:
    n_x: int
    n_y: int
    capacity_exponent_range: tuple[float, float]
    ux_exponent_range: tuple[float, float]
    uy_exponent_range: tuple[float, float]
    seed: int
    initial_condition: InitialCondition
    t0: float = 0.0
    t_fin: float = 1.0
    name: str = "custom"

    def __post_init__(self):
        for attr in ("capacity_exponent_range", "ux_exponent_range", "uy_exponent_range"):
            object.__setattr__(self, attr, _check_range(attr, getattr(self, attr)))
        if not 0 <= int(self.seed) <= MASK64:
            raise InvalidScenarioError("seed must be an unsigned 64-bit integer")
        if not self.t0 < self.t_fin:
            raise InvalidScenarioError(f"t0 must be before t_fin, got {self.t0} >= {self.t_fin}")

    @property
    def n_blocks(self) -> int:
        return self.n_x * self.n_y

    @property
    def t_span(self) -> float:
        return self.t_fin - self.t0

    @property
    def mesh_draws(self) -> int:
        horizontal = max(self.n_x - 1, 0) * self.n_y
        vertical = self.n_x * max(self.n_y - 1, 0)
        return self.n_blocks + horizontal + vertical

    def with_seed(self, seed: int) -> "ScenarioSpec":
        return ScenarioSpec(**{**self.__dict__, "seed": seed})

    def to_dict(self) -> dict[str, Any]:
        ic = self.initial_condition
        if isinstance(ic, RectangularPulse):
            ic_doc = {"kind": ic.kind, "i_lo": ic.i_lo, "i_hi": ic.i_hi,
                      "high_value": ic.high_value, "low_value": ic.low_value}
        else:
            ic_doc = {"kind": ic.kind, "lo": ic.lo, "hi": ic.hi}
        return {
            "name": self.name,
            "n_x": self.n_x,
            "n_y": self.n_y,
            "capacity_exponent_range": list(self.capacity_exponent_range),
            "ux_exponent_range": list(self.ux_exponent_range),
            "uy_exponent_range": list(self.uy_exponent_range),
            "seed": int(self.seed),
            "initial_condition": ic_doc,
            "t0": self.t0,
            "t_fin": self.t_fin,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ScenarioSpec":
        try:
            jsonschema.validate(data, SCENARIO_SCHEMA)
        except jsonschema.ValidationError as exc:
            raise InvalidScenarioError(f"scenario file rejected: {exc.message}") from exc

        ic = dict(data["initial_condition"])
        kind = ic.pop("kind")
        initial = RectangularPulse(**ic) if kind == "rectangular-pulse" else UniformRandom(**ic)
        return cls(
            n_x=data["n_x"],
            n_y=data["n_y"],
            capacity_exponent_range=tuple(data["capacity_exponent_range"]),
            ux_exponent_range=tuple(data["ux_exponent_range"]),
            uy_exponent_range=tuple(data["uy_exponent_range"]),
            seed=data["seed"],
            initial_condition=initial,
            t0=float(data.get("t0", 0.0)),
            t_fin=float(data["t_fin"]),
            name=data.get("name", "custom"),
        )


_RANGE = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}

SCENARIO_SCHEMA: dict[str, Any] = {
    "type": "object",
    "required": [
        "n_x", "n_y", "capacity_exponent_range", "ux_exponent_range",
        "uy_exponent_range", "seed", "initial_condition", "t_fin",
    ],
    "properties": {
        "name": {"type": "string"},
        "n_x": {"type": "integer"},
        "n_y": {"type": "integer"},
        "capacity_exponent_range": _RANGE,
        "ux_exponent_range": _RANGE,
        "uy_exponent_range": _RANGE,
        "seed": {"type": "integer", "minimum": 0},
        "t0": {"type": "number"},
        "t_fin": {"type": "number"},
        "initial_condition": {
            "oneOf": [
                {
                    "type": "object",
                    "required": ["kind"],
                    "properties": {
                        "kind": {"const": "uniform-random"},
                        "lo": {"type": "number"},
                        "hi": {"type": "number"},
                    },
                    "additionalProperties": False,
                },
                {
                    "type": "object",
                    "required": ["kind", "i_lo", "i_hi"],
                    "properties": {
                        "kind": {"const": "rectangular-pulse"},
                        "i_lo": {"type": "integer"},
                        "i_hi": {"type": "integer"},
                        "high_value": {"type": "number"},
                        "low_value": {"type": "number"},
                    },
                    "additionalProperties": False,
                },
            ]
        },
    },
    "additionalProperties": False,
}


def build_grid(scenario: ScenarioSpec) -> Mesh:
    """
    Random log-uniform lattice. Draw order: every capacity in block order, then
    every horizontal edge, then every vertical edge (both in ascending order of
    the lower endpoint), so the seed alone fixes the mesh.
    """
    if scenario.n_x < 1 or scenario.n_y < 1:
        raise InvalidScenarioError(
            f"grid dimensions must be >= 1, got {scenario.n_x}x{scenario.n_y}",
            error_type="invalid_dimension",
        )

    rng = SplitMix64(scenario.seed)
    c_lo, c_hi = scenario.capacity_exponent_range
    capacities = [log_uniform_sample(rng, c_lo, c_hi) for _ in range(scenario.n_blocks)]

    horizontal, vertical = lattice_edges(scenario.n_x, scenario.n_y)
    x_lo, x_hi = scenario.ux_exponent_range
    ux = [log_uniform_sample(rng, x_lo, x_hi) for _ in range(len(horizontal))]
    y_lo, y_hi = scenario.uy_exponent_range
    uy = [log_uniform_sample(rng, y_lo, y_hi) for _ in range(len(vertical))]

    pairs = np.vstack([horizontal, vertical])
    return Mesh(
        np.asarray(capacities),
        pairs[:, 0],
        pairs[:, 1],
        np.asarray(ux + uy),
        grid=(scenario.n_x, scenario.n_y),
    )


def initial_field(mesh: Mesh, scenario: ScenarioSpec) -> TemperatureField:
    n = mesh.n_blocks
    if n != scenario.n_blocks:
        raise SizeMismatchError(f"scenario describes {scenario.n_blocks} blocks, mesh has {n}")

    ic = scenario.initial_condition
    if isinstance(ic, RectangularPulse):
        if ic.i_hi > n:
            raise InvalidScenarioError(
                f"pulse band [{ic.i_lo}, {ic.i_hi}] exceeds {n} blocks", error_type="out_of_range_band"
            )
        values = np.full(n, float(ic.low_value))
        values[ic.i_lo - 1 : ic.i_hi] = float(ic.high_value)
    else:
        # continues the scenario stream right after the mesh draws
        rng = SplitMix64(scenario.seed)
        rng.skip(scenario.mesh_draws)
        values = np.array([ic.lo + (ic.hi - ic.lo) * rng.random() for _ in range(n)])

    return TemperatureField(values, scenario.t0)
