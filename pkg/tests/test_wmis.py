"""Tests for the WMIS reduction and the two-cluster instance family."""

from __future__ import annotations

import networkx as nx
import numpy as np
import pytest

from qpt_gap.errors import DomainError, InputError, ParseError
from qpt_gap.ising_core import SpinConfiguration, enumerate_minima, lowest_escape_cost
from qpt_gap.perturbation import chi
from qpt_gap.wmis import (
    CENTRAL_VERTICES,
    TRIANGLES,
    Fig2Params,
    WeightedGraph,
    brute_force_wmis,
    fig2_closed_forms,
    fig2_instance,
    fig2_problem,
    is_graph_text,
    load_graph,
    random_weighted_graph,
    to_ising,
)


def _set_of(config: SpinConfiguration) -> frozenset[int]:
    return frozenset(i for i in range(config.n_qubits) if config.spin(i) == 1)


def test_fig2_graph_shape(fig2_params):
    graph = fig2_instance(fig2_params)

    assert len(graph.edges) == 45
    assert all(len(graph.neighbors(v)) == 6 for v in range(15))
    assert all(not graph.neighbors(v) & set(CENTRAL_VERTICES) for v in CENTRAL_VERTICES)
    for a, b, c in TRIANGLES:
        assert {(a, b), (a, c), (b, c)} <= graph.edges
    assert nx.is_connected(graph.to_networkx())


def test_fig2_fields(fig2):
    assert fig2.h[:6] == pytest.approx((10.0,) * 6)
    assert fig2.h[6:] == pytest.approx((8.4,) * 9)
    assert {value for _, _, value in fig2.couplings} == {2.0}


def test_brute_force_wmis_on_path():
    graph = WeightedGraph(
        n_vertices=3, weights=(1.0, 1.5, 1.0), edges=frozenset({(0, 1), (1, 2)})
    )

    solution = brute_force_wmis(graph)

    assert solution.best_sets == (frozenset({0, 2}),)
    assert solution.best_weight == pytest.approx(2.0)


def test_fig2_wmis_is_the_central_set(fig2_params):
    solution = brute_force_wmis(fig2_instance(fig2_params))

    assert solution.best_sets == (frozenset(CENTRAL_VERTICES),)
    assert solution.best_weight == pytest.approx(6.0)


@pytest.mark.parametrize("seed", range(50))
def test_reduction_ground_states_are_maximum_weight_sets(seed):
    rng = np.random.default_rng(seed)
    graph = random_weighted_graph(int(rng.integers(4, 13)), 0.4, seed)
    couplings = {
        (i, j): min(graph.weights[i], graph.weights[j]) + float(rng.uniform(0.1, 1.0))
        for i, j in graph.sorted_edges
    }
    if not couplings:
        pytest.skip("empty graph")

    problem = to_ising(graph, couplings)
    ground = enumerate_minima(problem)[0]
    solution = brute_force_wmis(graph)

    chosen = {_set_of(m) for m in ground.members}
    assert chosen == set(solution.best_sets)
    assert all(graph.is_independent(s) for s in chosen)
    assert all(graph.weight_of(s) == pytest.approx(solution.best_weight) for s in chosen)


def test_reduction_rejects_weak_coupling():
    graph = WeightedGraph(n_vertices=2, weights=(1.0, 2.0), edges=frozenset({(0, 1)}))

    with pytest.raises(InputError, match=r"edge \(0, 1\)"):
        to_ising(graph, 1.0)
    with pytest.raises(InputError):
        to_ising(graph, {})


@pytest.mark.parametrize("seed", range(20))
def test_closed_forms_match_pipeline(seed):
    rng = np.random.default_rng(seed)
    w_l = float(rng.uniform(1.1, 1.95))
    # J below 2 w_L keeps the in-triangle swap the cheapest escape from the local cluster
    params = Fig2Params(1.0, w_l, float(rng.uniform(w_l + 0.1, min(3.0, 2 * w_l))))
    problem = fig2_problem(params)
    closed = fig2_closed_forms(params)

    global_cluster, local_cluster = enumerate_minima(problem)[:2]

    e_gap = local_cluster.energy - global_cluster.energy
    assert e_gap == pytest.approx(closed.e_gap, rel=1e-10)
    assert chi(problem, global_cluster).chi == pytest.approx(closed.chi_g, rel=1e-10)
    assert chi(problem, local_cluster).chi == pytest.approx(closed.chi_l, rel=1e-10)
    assert lowest_escape_cost(problem, local_cluster) == pytest.approx(closed.delta_u)


def test_closed_forms_reference_point(fig2_params):
    closed = fig2_closed_forms(fig2_params)

    assert closed.e_gap == pytest.approx(2.4)
    assert closed.chi_g == pytest.approx(1.862903, abs=1e-6)
    assert closed.chi_l == pytest.approx(16.75)
    assert closed.delta_u == pytest.approx(0.8)
    assert fig2_closed_forms(fig2_params, 2.0).chi_l == pytest.approx(4 * 16.75)


def test_closed_forms_vanishing_denominator():
    params = Fig2Params(1.0, 0.4, 0.5)

    with pytest.raises(DomainError):
        fig2_closed_forms(params)


@pytest.mark.parametrize("text", ["1,1.8", "1,x,2", "1,1.8,0.9", "1,2.5,3", "-1,1.8,2"])
def test_fig2_params_validation(text):
    with pytest.raises(InputError):
        Fig2Params.parse(text)


def test_fig2_params_boundary_and_with_w_l(fig2_params):
    assert Fig2Params.parse("1, 2, 2.5").w_l == 2.0
    assert fig2_params.with_w_l(1.9) == Fig2Params(1.0, 1.9, 2.0)


def test_load_graph():
    text = "nv 3\nw 0 2.0\ne 0 1\ne 2 1  # edge\nJuniform 3\n"

    graph, j_uniform = load_graph(text)

    assert is_graph_text(text)
    assert not is_graph_text("n 3\n")
    assert graph.weights == (2.0, 1.0, 1.0)
    assert graph.sorted_edges == ((0, 1), (1, 2))
    assert j_uniform == 3.0


@pytest.mark.parametrize(
    ("text", "line"),
    [("w 0 1\n", 1), ("nv 2\ne 0 0\n", 2), ("nv 2\ne 0 1\ne 1 0\n", 3), ("nv 2\nw 0 -1\n", 2)],
)
def test_load_graph_errors(text, line):
    with pytest.raises(ParseError) as excinfo:
        load_graph(text)

    assert excinfo.value.line_number == line


def test_networkx_round_trip(fig2_params):
    graph = fig2_instance(fig2_params)

    assert WeightedGraph.from_networkx(graph.to_networkx()) == graph
