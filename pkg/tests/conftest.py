"""Shared fixtures and brute-force oracles used across the test modules."""

import itertools

import numpy as np
import pytest

from cautiouspc.graph import Kind, Mark, MixedGraph, ancestors, d_separated, is_acyclic, unshielded_colliders
from cautiouspc.sim import SimConfig, random_dag

# vertex labels of the four-node exposure/outcome example
W1, W2, A, Y = 0, 1, 2, 3
NAMES = ["W1", "W2", "A", "Y"]


def example_a() -> MixedGraph:
    return MixedGraph.from_directed_edges(4, [(W1, A), (W1, Y), (A, Y), (W2, Y)], NAMES)


def example_b() -> MixedGraph:
    return MixedGraph.from_directed_edges(4, [(W1, A), (W1, Y), (A, Y), (W2, Y), (W2, A)], NAMES)


def example_c() -> MixedGraph:
    return MixedGraph.from_directed_edges(4, [(W1, A), (W1, Y), (A, Y), (W2, Y), (W2, A), (W1, W2)], NAMES)


@pytest.fixture
def fig_a():
    return example_a()


@pytest.fixture
def fig_b():
    return example_b()


@pytest.fixture
def fig_c():
    return example_c()


def rand_dag(p: int, degree: float, seed: int) -> MixedGraph:
    """Random DAG whose causal order is a random permutation of the vertices."""
    rng = np.random.default_rng(seed)
    g = random_dag(SimConfig(p=p, expected_degree=min(degree, p - 1)), rng)
    return g.relabel(rng.permutation(p).tolist())


# -- oracles -----------------------------------------------------------------


def simple_paths(g: MixedGraph, i: int, j: int):
    """All simple paths between ``i`` and ``j`` in the skeleton of ``g``."""
    adj = g.marks != 0
    stack = [[i]]
    while stack:
        path = stack.pop()
        for nxt in np.flatnonzero(adj[path[-1]]):
            nxt = int(nxt)
            if nxt in path:
                continue
            if nxt == j:
                yield path + [j]
            else:
                stack.append(path + [nxt])


def dsep_by_paths(g: MixedGraph, i: int, j: int, c) -> bool:
    """d-separation by checking every simple path for an open configuration."""
    c = set(c)
    desc_of = {}
    for v in range(g.p):
        out, stack = {v}, [v]
        while stack:
            u = stack.pop()
            for w in g.children(u):
                if w not in out:
                    out.add(w)
                    stack.append(w)
        desc_of[v] = out
    for path in simple_paths(g, i, j):
        open_ = True
        for a, k, b in zip(path, path[1:], path[2:]):
            collider = g.is_directed(a, k) and g.is_directed(b, k)
            if collider and not (desc_of[k] & c):
                open_ = False
                break
            if not collider and k in c:
                open_ = False
                break
        if open_:
            return False
    return True


def markov_class(g: MixedGraph) -> list[MixedGraph]:
    """Every DAG sharing the skeleton and unshielded colliders of ``g``."""
    pairs = sorted(g.adjacency_pairs())
    target = unshielded_colliders(g)
    out = []
    for bits in itertools.product((0, 1), repeat=len(pairs)):
        h = MixedGraph.from_directed_edges(g.p, [(a, b) if s == 0 else (b, a) for (a, b), s in zip(pairs, bits)])
        if is_acyclic(h) and unshielded_colliders(h) == target:
            out.append(h)
    return out


def cpdag_by_enumeration(g: MixedGraph) -> MixedGraph:
    """Directed where every class member agrees, undirected otherwise."""
    members = markov_class(g)
    cp = MixedGraph(g.p, Kind.CPDAG)
    for a, b in sorted(g.adjacency_pairs()):
        fwd = {m.is_directed(a, b) for m in members}
        if fwd == {True}:
            cp.add_edge(a, b, Mark.TAIL, Mark.ARROW)
        elif fwd == {False}:
            cp.add_edge(b, a, Mark.TAIL, Mark.ARROW)
        else:
            cp.add_edge(a, b, Mark.TAIL, Mark.TAIL)
    return cp


def latent_projection(dag: MixedGraph, observed) -> MixedGraph:
    """MAG over ``observed`` (no selection): adjacency by inseparability,
    tail at ancestors and arrowheads elsewhere."""
    k = len(observed)
    m = MixedGraph(k, Kind.PAG)
    for a, b in itertools.combinations(range(k), 2):
        others = [observed[v] for v in range(k) if v not in (a, b)]
        if any(d_separated(dag, observed[a], observed[b], s)
               for r in range(len(others) + 1) for s in itertools.combinations(others, r)):
            continue
        if observed[a] in ancestors(dag, [observed[b]]):
            m.add_edge(a, b, Mark.TAIL, Mark.ARROW)
        elif observed[b] in ancestors(dag, [observed[a]]):
            m.add_edge(b, a, Mark.TAIL, Mark.ARROW)
        else:
            m.add_edge(a, b, Mark.ARROW, Mark.ARROW)
    return m


def pytest_terminal_summary(terminalreporter):
    """One line per acceptance criterion, when the acceptance module ran."""
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.RESULTS.values():
        terminalreporter.write_line(line)
