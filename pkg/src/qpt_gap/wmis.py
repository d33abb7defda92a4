"""
Weighted maximum independent set testbed: graphs, a brute-force solver, the
reduction to an Ising problem and the 15-vertex two-cluster instance family.

Reduction convention: spin +1 means the vertex is in the set. With
``h_i = Σ_j J_ij - 2 w_i`` the classical energy equals
``const - 4 W(S) + 4 Σ_{ij in S} J_ij``, so when every ``J_ij > min(w_i, w_j)``
the Ising ground states are exactly the maximum-weight independent sets.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from functools import cached_property

import networkx as nx
import numpy as np

from qpt_gap.errors import CapacityError, DomainError, InputError, ParseError
from qpt_gap.ising_core import MAX_QUBITS, IsingProblem, iter_directives

Edge = tuple[int, int]

CENTRAL_VERTICES = tuple(range(6))
TRIANGLES = ((6, 7, 8), (9, 10, 11), (12, 13, 14))
# central vertex pair -> the two triangles it is fully joined to
CENTRAL_LINKS = {(0, 1): (0, 1), (2, 3): (0, 2), (4, 5): (1, 2)}


@dataclass(frozen=True)
class WeightedGraph:
    n_vertices: int
    weights: tuple[float, ...]
    edges: frozenset[Edge] = frozenset()

    def __post_init__(self) -> None:
        n = self.n_vertices
        if n < 1:
            raise InputError(f"a graph needs at least one vertex, got {n}")
        weights = tuple(float(w) for w in self.weights)
        if len(weights) != n:
            raise InputError(f"expected {n} weights, got {len(weights)}")
        if not all(math.isfinite(w) and w > 0 for w in weights):
            raise InputError("vertex weights must be positive")
        edges: set[Edge] = set()
        for i, j in self.edges:
            i, j = int(i), int(j)
            if i == j:
                raise InputError(f"self-loop on vertex {i}")
            if not (0 <= i < n and 0 <= j < n):
                raise InputError(f"edge ({i}, {j}) out of range for {n} vertices")
            edges.add((min(i, j), max(i, j)))
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "edges", frozenset(edges))

    @cached_property
    def sorted_edges(self) -> tuple[Edge, ...]:
        return tuple(sorted(self.edges))

    def neighbors(self, vertex: int) -> set[int]:
        return {j if i == vertex else i for i, j in self.edges if vertex in (i, j)}

    def is_independent(self, vertices: Iterable[int]) -> bool:
        chosen = set(vertices)
        return not any(i in chosen and j in chosen for i, j in self.edges)

    def weight_of(self, vertices: Iterable[int]) -> float:
        return sum(self.weights[v] for v in set(vertices))

    def to_networkx(self) -> nx.Graph:
        graph = nx.Graph()
        for vertex, weight in enumerate(self.weights):
            graph.add_node(vertex, weight=weight)
        graph.add_edges_from(self.sorted_edges)
        return graph

    @classmethod
    def from_networkx(cls, graph: nx.Graph, weight: str = "weight") -> WeightedGraph:
        """Build from a graph whose nodes are labeled 0..n-1."""
        nodes = sorted(graph.nodes)
        if nodes != list(range(len(nodes))):
            raise InputError("graph nodes must be labeled 0..n-1")
        return cls(
            n_vertices=len(nodes),
            weights=tuple(graph.nodes[v].get(weight, 1.0) for v in nodes),
            edges=frozenset(graph.edges),
        )


@dataclass(frozen=True)
class WmisSolution:
    best_sets: tuple[frozenset[int], ...]
    best_weight: float


def brute_force_wmis(graph: WeightedGraph) -> WmisSolution:
    """Every maximum-weight independent set, by scanning all 2^n subsets."""
    n = graph.n_vertices
    if n > MAX_QUBITS:
        raise CapacityError(f"exhaustive WMIS supports at most {MAX_QUBITS} vertices")
    subsets = np.arange(1 << n, dtype=np.int64)
    members = [((subsets >> v) & 1).astype(bool) for v in range(n)]
    independent = np.ones(subsets.size, dtype=bool)
    for i, j in graph.sorted_edges:
        independent &= ~(members[i] & members[j])
    totals = np.zeros(subsets.size)
    for v, w in enumerate(graph.weights):
        totals += w * members[v]
    totals[~independent] = -np.inf
    best = float(totals.max())
    winners = np.flatnonzero(totals >= best - 1e-9 * max(1.0, abs(best)))
    return WmisSolution(
        best_sets=tuple(
            frozenset(v for v in range(n) if (int(s) >> v) & 1) for s in winners.tolist()
        ),
        best_weight=best,
    )


def to_ising(
    graph: WeightedGraph,
    J: float | Mapping[Edge, float],
    delta: float = 1.0,
) -> IsingProblem:
    """Ising problem whose ground states are the graph's maximum-weight independent sets."""
    couplings: list[tuple[int, int, float]] = []
    for i, j in graph.sorted_edges:
        if isinstance(J, Mapping):
            value = J.get((i, j), J.get((j, i)))
            if value is None:
                raise InputError(f"no coupling given for edge ({i}, {j})")
        else:
            value = J
        value = float(value)
        if not value > min(graph.weights[i], graph.weights[j]):
            raise InputError(
                f"edge ({i}, {j}): J={value} must exceed min(w_{i}, w_{j})="
                f"{min(graph.weights[i], graph.weights[j])}"
            )
        couplings.append((i, j, value))
    fields = [-2.0 * w for w in graph.weights]
    for i, j, value in couplings:
        fields[i] += value
        fields[j] += value
    return IsingProblem(
        n_qubits=graph.n_vertices, h=tuple(fields), couplings=tuple(couplings), delta=delta
    )


@dataclass(frozen=True)
class Fig2Params:
    """Weights and coupling of the two-cluster instance.

    ``w_l == 2 * w_g`` is accepted: it is the boundary where the global and
    local energies meet.
    """

    w_g: float
    w_l: float
    j: float

    def __post_init__(self) -> None:
        for name in ("w_g", "w_l", "j"):
            value = float(getattr(self, name))
            if not (math.isfinite(value) and value > 0):
                raise InputError(f"{name} must be positive, got {getattr(self, name)}")
            object.__setattr__(self, name, value)
        if not self.j > min(self.w_g, self.w_l):
            raise InputError(f"J={self.j} must exceed min(w_G, w_L)={min(self.w_g, self.w_l)}")
        if self.w_l > 2 * self.w_g:
            raise InputError(f"w_L={self.w_l} must not exceed 2 w_G={2 * self.w_g}")

    @classmethod
    def parse(cls, text: str) -> Fig2Params:
        """Parse ``"wG,wL,J"``."""
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 3:
            raise InputError(f"expected 'wG,wL,J', got {text!r}")
        try:
            w_g, w_l, j = (float(p) for p in parts)
        except ValueError as exc:
            raise InputError(f"expected three numbers in {text!r}") from exc
        return cls(w_g, w_l, j)

    def with_w_l(self, w_l: float) -> Fig2Params:
        return Fig2Params(self.w_g, w_l, self.j)


@dataclass(frozen=True)
class Fig2ClosedForms:
    e_gap: float
    chi_g: float
    chi_l: float
    delta_u: float


def fig2_instance(params: Fig2Params) -> WeightedGraph:
    """Six central vertices of weight w_G and three outer triangles of weight w_L.

    Each central vertex is joined to every vertex of two triangles, so every
    outer vertex has four central neighbors.
    """
    edges: set[Edge] = set()
    for triangle in TRIANGLES:
        a, b, c = triangle
        edges |= {(a, b), (a, c), (b, c)}
    for centrals, linked in CENTRAL_LINKS.items():
        for central in centrals:
            for t in linked:
                edges |= {(central, outer) for outer in TRIANGLES[t]}
    weights = (params.w_g,) * len(CENTRAL_VERTICES) + (params.w_l,) * 9
    return WeightedGraph(n_vertices=15, weights=weights, edges=frozenset(edges))


def fig2_problem(params: Fig2Params, delta: float = 1.0) -> IsingProblem:
    return to_ising(fig2_instance(params), params.j, delta)


def fig2_closed_forms(params: Fig2Params, delta: float = 1.0) -> Fig2ClosedForms:
    """Classical gap, χ_G, χ_L and barrier height of the two-cluster instance."""
    w_g, w_l, J = params.w_g, params.w_l, params.j
    denominators = {"2J - w_G": 2 * J - w_g, "4J - w_L": 4 * J - w_l, "J - w_L": J - w_l}
    for label, value in denominators.items():
        if value == 0:
            raise DomainError(f"{label} vanishes")
    scale = delta**2 / 4.0
    return Fig2ClosedForms(
        e_gap=4.0 * (6.0 * w_g - 3.0 * w_l),
        chi_g=scale * (6.0 / w_g + 9.0 / (4.0 * J - w_l)),
        chi_l=scale * (6.0 / (2.0 * J - w_g) + 9.0 / w_l + 12.0 / (J - w_l)),
        delta_u=4.0 * (J - w_l),
    )


def random_weighted_graph(
    n_vertices: int,
    edge_probability: float,
    seed: int,
    weight_range: tuple[float, float] = (0.5, 2.0),
) -> WeightedGraph:
    graph = nx.gnp_random_graph(n_vertices, edge_probability, seed=seed)
    rng = np.random.default_rng(seed)
    weights = rng.uniform(*weight_range, size=n_vertices)
    return WeightedGraph(
        n_vertices=n_vertices,
        weights=tuple(float(w) for w in weights),
        edges=frozenset(graph.edges),
    )


def is_graph_text(text: str) -> bool:
    """True when the first directive of ``text`` is ``nv``."""
    for _, tokens in iter_directives(text):
        return tokens[0] == "nv"
    return False


def load_graph(text: str) -> tuple[WeightedGraph, float | None]:
    """Parse a graph file (``nv``, ``w``, ``e``, ``Juniform``); missing weights are 1.0."""
    n_vertices: int | None = None
    weights: dict[int, float] = {}
    edges: set[Edge] = set()
    j_uniform: float | None = None

    def index(token: str, line_number: int) -> int:
        try:
            value = int(token)
        except ValueError as exc:
            raise ParseError(f"not a vertex index: {token!r}", line_number=line_number) from exc
        if not 0 <= value < n_vertices:
            raise ParseError(f"vertex {value} out of range", line_number=line_number)
        return value

    def number(token: str, line_number: int) -> float:
        try:
            value = float(token)
        except ValueError as exc:
            raise ParseError(f"not a number: {token!r}", line_number=line_number) from exc
        if not (math.isfinite(value) and value > 0):
            raise ParseError(f"value must be positive: {token!r}", line_number=line_number)
        return value

    for line_number, tokens in iter_directives(text):
        keyword, args = tokens[0], tokens[1:]
        if n_vertices is None:
            if keyword != "nv" or len(args) != 1 or not args[0].isdigit():
                raise ParseError("first directive must be 'nv <n>'", line_number=line_number)
            n_vertices = int(args[0])
            if not 1 <= n_vertices <= MAX_QUBITS:
                raise ParseError(
                    f"vertex count must be in 1..{MAX_QUBITS}", line_number=line_number
                )
        elif keyword == "w" and len(args) == 2:
            vertex = index(args[0], line_number)
            if vertex in weights:
                raise ParseError(f"duplicate weight for vertex {vertex}", line_number=line_number)
            weights[vertex] = number(args[1], line_number)
        elif keyword == "e" and len(args) == 2:
            i, j = index(args[0], line_number), index(args[1], line_number)
            if i == j:
                raise ParseError(f"self-loop on vertex {i}", line_number=line_number)
            edge = (min(i, j), max(i, j))
            if edge in edges:
                raise ParseError(f"duplicate edge {edge}", line_number=line_number)
            edges.add(edge)
        elif keyword == "Juniform" and len(args) == 1:
            if j_uniform is not None:
                raise ParseError("duplicate 'Juniform' directive", line_number=line_number)
            j_uniform = number(args[0], line_number)
        else:
            raise ParseError(f"bad directive {' '.join(tokens)!r}", line_number=line_number)

    if n_vertices is None:
        raise ParseError("graph file is empty")
    graph = WeightedGraph(
        n_vertices=n_vertices,
        weights=tuple(weights.get(v, 1.0) for v in range(n_vertices)),
        edges=frozenset(edges),
    )
    return graph, j_uniform
