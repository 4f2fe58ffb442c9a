import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cautiouspc.graph import (
    GraphError, Kind, Mark, MixedGraph, SepsetMap, d_separated, dag_to_cpdag, is_acyclic,
    is_skeleton_subgraph, markov_equivalent, possible_d_sep, read_graph, skeleton,
    unshielded_colliders, unshielded_triples, write_graph,
)
from cautiouspc.sim import SimConfig, random_dag, simulate

from conftest import A, W1, W2, Y, cpdag_by_enumeration, dsep_by_paths, markov_class, rand_dag, simple_paths


# -- acyclicity ----------------------------------------------------------------


def test_chain_is_acyclic():
    assert is_acyclic(MixedGraph.from_directed_edges(3, [(0, 1), (1, 2)]))


def test_three_cycle_is_not_acyclic():
    g = MixedGraph(3, Kind.CPDAG)
    g.add_edge(0, 1)
    g.add_edge(1, 2)
    g.add_edge(2, 0)
    assert not is_acyclic(g)


def test_empty_graph_is_acyclic():
    assert is_acyclic(MixedGraph(10))


# -- d-separation --------------------------------------------------------------


def test_dsep_example_marginal(fig_a):
    assert d_separated(fig_a, W1, W2, [])
    assert d_separated(fig_a, A, W2, [])


def test_dsep_example_collider_opened(fig_a):
    assert not d_separated(fig_a, W1, W2, [Y])
    assert not dsep_by_paths(fig_a, W1, W2, [Y])


def test_dsep_complete_graph_never_separates(fig_c):
    for i, j in itertools.combinations(range(4), 2):
        rest = [v for v in range(4) if v not in (i, j)]
        for r in range(3):
            for c in itertools.combinations(rest, r):
                assert not d_separated(fig_c, i, j, c)


def test_dsep_rejects_bad_arguments(fig_a):
    with pytest.raises(GraphError):
        d_separated(fig_a, W1, W1)
    with pytest.raises(GraphError):
        d_separated(fig_a, W1, W2, [W1])
    with pytest.raises(GraphError):
        d_separated(fig_a, W1, 9)


def test_dsep_matches_path_enumeration():
    for seed in range(1000):
        rng = np.random.default_rng(seed)
        p = int(rng.integers(2, 8))
        g = rand_dag(p, float(rng.uniform(0.5, 3.0)), seed)
        i, j = (int(v) for v in rng.choice(p, 2, replace=False))
        rest = [v for v in range(p) if v not in (i, j)]
        for r in range(min(3, len(rest)) + 1):
            for c in itertools.combinations(rest, r):
                assert d_separated(g, i, j, c) == dsep_by_paths(g, i, j, c), (seed, i, j, c)


# -- skeletons and triples -----------------------------------------------------


def test_skeleton_of_single_edge():
    s = skeleton(MixedGraph.from_directed_edges(2, [(0, 1)]))
    assert s.is_undirected(0, 1)
    assert s.kind == Kind.SKELETON


def test_skeleton_of_empty_graph():
    assert skeleton(MixedGraph(5)).n_edges == 0


def test_skeleton_subgraph_examples(fig_a, fig_b):
    assert is_skeleton_subgraph(fig_a, fig_b)
    assert not is_skeleton_subgraph(fig_b, fig_a)
    assert is_skeleton_subgraph(fig_a, fig_a)


def test_skeleton_subgraph_requires_same_size():
    with pytest.raises(GraphError):
        is_skeleton_subgraph(MixedGraph(3), MixedGraph(4))


def test_unshielded_triples_path_and_triangle():
    path = MixedGraph(3, Kind.SKELETON)
    path.add_edge(0, 1, Mark.TAIL, Mark.TAIL)
    path.add_edge(1, 2, Mark.TAIL, Mark.TAIL)
    assert unshielded_triples(path) == [(0, 1, 2)]
    path.add_edge(0, 2, Mark.TAIL, Mark.TAIL)
    assert unshielded_triples(path) == []


def test_unshielded_triples_example(fig_a):
    # adjacencies: W1-A, W1-Y, A-Y, W2-Y; only W1, W2 and A, W2 are non-adjacent
    assert (W1, Y, W2) in unshielded_triples(fig_a)
    assert set(unshielded_triples(fig_a)) == {(W1, Y, W2), (W2, Y, A)}


# -- Markov equivalence --------------------------------------------------------


def test_markov_equivalent_examples():
    chain = MixedGraph.from_directed_edges(3, [(0, 1), (1, 2)])
    rev = MixedGraph.from_directed_edges(3, [(2, 1), (1, 0)])
    coll = MixedGraph.from_directed_edges(3, [(0, 1), (2, 1)])
    assert markov_equivalent(chain, rev)
    assert not markov_equivalent(coll, chain)
    assert markov_equivalent(coll, coll)


def test_markov_equivalence_is_an_equivalence_relation():
    for trial in range(40):
        g = rand_dag(4, 2.0, trial)
        members = markov_class(g)
        others = [rand_dag(4, 2.0, 1000 + trial + k) for k in range(3)]
        pool = members[:3] + others
        for x in pool:
            assert markov_equivalent(x, x)
            for y in pool:
                assert markov_equivalent(x, y) == markov_equivalent(y, x)
                for z in pool:
                    if markov_equivalent(x, y) and markov_equivalent(y, z):
                        assert markov_equivalent(x, z)


def test_cpdag_of_chain_is_undirected():
    cp = dag_to_cpdag(MixedGraph.from_directed_edges(3, [(0, 1), (1, 2)]))
    assert cp.is_undirected(0, 1) and cp.is_undirected(1, 2)


def test_cpdag_of_collider_is_directed():
    cp = dag_to_cpdag(MixedGraph.from_directed_edges(3, [(0, 1), (2, 1)]))
    assert cp.is_directed(0, 1) and cp.is_directed(2, 1)


def test_cpdag_of_example_b_matches_enumeration(fig_b):
    cp = dag_to_cpdag(fig_b)
    assert np.array_equal(cp.marks, cpdag_by_enumeration(fig_b).marks)


def test_cpdag_rejects_cycles():
    g = MixedGraph(3, Kind.CPDAG)
    g.add_edge(0, 1)
    g.add_edge(1, 2)
    g.add_edge(2, 0)
    with pytest.raises(GraphError):
        dag_to_cpdag(g)


@settings(max_examples=150, deadline=None)
@given(st.integers(2, 4), st.floats(0.0, 3.0), st.integers(0, 10 ** 6))
def test_cpdag_matches_brute_force_class(p, degree, seed):
    g = rand_dag(p, degree, seed)
    cp = dag_to_cpdag(g)
    assert skeleton(cp) == skeleton(g)
    assert unshielded_colliders(cp) == unshielded_colliders(g)
    assert np.array_equal(cp.marks, cpdag_by_enumeration(g).marks)


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 8), st.floats(0.0, 5.0), st.integers(0, 10 ** 6))
def test_cpdag_keeps_skeleton(p, degree, seed):
    g = rand_dag(p, degree, seed)
    assert skeleton(dag_to_cpdag(g)) == skeleton(g)


# -- possible-d-sep ------------------------------------------------------------


def test_pds_complete_circle_graph():
    g = MixedGraph.complete(4, Mark.CIRCLE, Kind.PAG)
    assert possible_d_sep(g, 0, 1) == {2, 3}


def test_pds_collider_path():
    # 0 *-> 1 <-* 2 with nothing else: from 0, 1 is adjacent and 2 is reached through the collider
    g = MixedGraph(3, Kind.PAG)
    g.add_edge(0, 1, Mark.CIRCLE, Mark.ARROW)
    g.add_edge(2, 1, Mark.CIRCLE, Mark.ARROW)
    assert possible_d_sep(g, 0, 2) == {1}
    g4 = MixedGraph(4, Kind.PAG)
    g4.add_edge(0, 1, Mark.CIRCLE, Mark.ARROW)
    g4.add_edge(2, 1, Mark.CIRCLE, Mark.ARROW)
    assert possible_d_sep(g4, 0, 3) == {1, 2}


def test_pds_noncollider_path_stops():
    g = MixedGraph(4, Kind.PAG)
    g.add_edge(0, 1, Mark.CIRCLE, Mark.CIRCLE)
    g.add_edge(1, 2, Mark.CIRCLE, Mark.CIRCLE)
    assert possible_d_sep(g, 0, 3) == {1}


def test_pds_edgeless():
    assert possible_d_sep(MixedGraph(4, Kind.PAG), 0, 1) == set()


def _pds_by_paths(g, i, j):
    out = set()
    for k in range(g.p):
        if k in (i, j):
            continue
        for path in simple_paths(g, i, k):
            if all(
                (g.marks[a, m] == Mark.ARROW and g.marks[b, m] == Mark.ARROW) or g.adjacent(a, b)
                for a, m, b in zip(path, path[1:], path[2:])
            ):
                out.add(k)
                break
    return out


def test_pds_matches_definition_on_random_pags():
    rng = np.random.default_rng(11)
    for _ in range(200):
        p = int(rng.integers(3, 7))
        g = MixedGraph(p, Kind.PAG)
        for a, b in itertools.combinations(range(p), 2):
            if rng.random() < 0.5:
                g.add_edge(a, b, Mark(int(rng.integers(1, 4))), Mark(int(rng.integers(1, 4))))
        i, j = (int(v) for v in rng.choice(p, 2, replace=False))
        assert possible_d_sep(g, i, j) == _pds_by_paths(g, i, j)


# -- text format -----------------------------------------------------------------


def test_text_round_trip_all_edge_types(tmp_path):
    g = MixedGraph(6, Kind.PAG, ["a", "b", "c", "d", "e", "f"])
    g.add_edge(0, 1, Mark.TAIL, Mark.TAIL)
    g.add_edge(1, 2, Mark.TAIL, Mark.ARROW)
    g.add_edge(2, 3, Mark.ARROW, Mark.ARROW)
    g.add_edge(3, 4, Mark.CIRCLE, Mark.CIRCLE)
    g.add_edge(4, 5, Mark.CIRCLE, Mark.ARROW)
    g.add_edge(5, 0, Mark.TAIL, Mark.ARROW)
    text = g.to_text()
    assert text.splitlines() == [
        "p=6", "# names: a,b,c,d,e,f",
        "0 --- 1", "5 --> 0", "1 --> 2", "2 <-> 3", "3 o-o 4", "4 o-> 5",
    ]
    h = MixedGraph.from_text(text)
    assert h == g and h.names == g.names and h.kind == Kind.PAG
    assert h.to_text() == text
    path = tmp_path / "g.txt"
    write_graph(g, path)
    assert path.read_text() == text
    assert read_graph(path) == g


def test_text_format_lines():
    g = MixedGraph(4, Kind.PAG)
    g.add_edge(0, 1, Mark.TAIL, Mark.TAIL)
    g.add_edge(1, 2, Mark.TAIL, Mark.ARROW)
    g.add_edge(3, 2, Mark.CIRCLE, Mark.ARROW)
    g.add_edge(0, 3, Mark.ARROW, Mark.ARROW)
    lines = g.to_text().splitlines()
    assert lines[0] == "p=4"
    assert set(lines[1:]) == {"0 --- 1", "1 --> 2", "3 o-> 2", "0 <-> 3"}


def test_text_reversed_arrow_is_normalised():
    g = MixedGraph.from_text("p=2\n1 <-- 0\n")
    assert g.is_directed(0, 1)
    assert g.to_text() == "p=2\n0 --> 1\n"


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 7), st.integers(0, 10 ** 6))
def test_text_round_trip_is_byte_stable(p, seed):
    rng = np.random.default_rng(seed)
    g = MixedGraph(p, Kind.PAG)
    for a, b in itertools.combinations(range(p), 2):
        if rng.random() < 0.5:
            g.add_edge(a, b, Mark(int(rng.integers(1, 4))), Mark(int(rng.integers(1, 4))))
    text = g.to_text()
    h = MixedGraph.from_text(text)
    assert h == g
    assert h.to_text() == text


@pytest.mark.parametrize("bad", ["", "q=3\n", "p=3\n0 -> 1\n", "p=3\n0 x-> 1\n", "p=3\n0 --> 5\n", "p=3\n0 --> 0\n"])
def test_text_parse_errors(bad):
    with pytest.raises(GraphError):
        MixedGraph.from_text(bad)


def test_kind_inference():
    assert MixedGraph.from_text("p=2\n0 --> 1\n").kind == Kind.DAG
    assert MixedGraph.from_text("p=3\n0 --> 1\n1 --- 2\n").kind == Kind.CPDAG
    assert MixedGraph.from_text("p=2\n0 o-> 1\n").kind == Kind.PAG
    assert MixedGraph.from_text("p=2\n0 --- 1\n").kind == Kind.SKELETON


# -- validation and sepsets ------------------------------------------------------


def test_validate_rejects_illegal_marks():
    g = MixedGraph(2, Kind.CPDAG)
    g.add_edge(0, 1, Mark.CIRCLE, Mark.ARROW)
    with pytest.raises(GraphError):
        g.validate()
    d = MixedGraph(2, Kind.DAG)
    d.add_edge(0, 1, Mark.TAIL, Mark.TAIL)
    with pytest.raises(GraphError):
        d.validate()


def test_add_edge_errors():
    g = MixedGraph(3)
    g.add_edge(0, 1)
    with pytest.raises(GraphError):
        g.add_edge(1, 0)
    with pytest.raises(GraphError):
        g.add_edge(2, 2)
    with pytest.raises(GraphError):
        MixedGraph(2, names=["only"])


def test_sepset_map_is_symmetric():
    s = SepsetMap()
    s.set(3, 1, [2, 0])
    assert s.get(1, 3) == frozenset({0, 2})
    assert (1, 3) in s and (3, 1) in s
    assert s.get(0, 1) is None
    with pytest.raises(GraphError):
        s.set(1, 2, [1])
    assert s.to_csv_rows() == [["i", "j", "S", "by_knowledge"], ["1", "3", "0;2", "0"]]


def test_simulated_dag_skeleton_size():
    # an instance of the dense p=10 generator: the skeleton keeps the DAG's edge count
    inst = simulate(SimConfig(p=10, expected_degree=7.0, n=10, seed=5))
    assert skeleton(inst.dag).n_edges == inst.dag.n_edges
    assert random_dag(SimConfig(p=10, expected_degree=9.0)).n_edges == 45
