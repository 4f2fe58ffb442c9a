"""Generalized adjustment criterion on DAGs (and fully directed CPDAG regions)."""

from __future__ import annotations

import numbers
from typing import Iterable

from .graph import GraphError, Mark, MixedGraph, d_separated, descendants


def _as_set(vs) -> set[int]:
    return {int(vs)} if isinstance(vs, numbers.Integral) else {int(v) for v in vs}


def _reach(g: MixedGraph, start: Iterable[int], step) -> set[int]:
    out = set(start)
    stack = list(out)
    while stack:
        v = stack.pop()
        for u in step(v):
            if u not in out:
                out.add(u)
                stack.append(u)
    return out


def causal_nodes(g: MixedGraph, a, y: int, possible: bool = False) -> set[int]:
    """Vertices outside ``a`` lying on a proper directed path from ``a`` to ``y``.

    A proper path meets ``a`` only at its first vertex. With ``possible=True``
    undirected edges may also be traversed (in either direction).
    """
    a = _as_set(a)

    def fwd(v):
        out = [u for u in g.children(v) if u not in a]
        if possible:
            out += [u for u in g.neighbors(v) if u not in a]
        return out

    def back(v):
        out = [u for u in g.parents(v) if u not in a]
        if possible:
            out += [u for u in g.neighbors(v) if u not in a]
        return out

    start = set()
    for v in a:
        start.update(fwd(v))
    reach_from_a = _reach(g, start, fwd)
    if y not in reach_from_a:
        return set()
    reach_to_y = _reach(g, {y}, back)
    return reach_from_a & reach_to_y


def forb_set(g: MixedGraph, a, y: int) -> set[int]:
    """Descendants of every non-``a`` vertex on a proper directed path from ``a`` to ``y``.

    Raises ``GraphError("orientation-incomplete")`` when undirected edges
    leave the causal paths or their descendants undetermined.
    """
    a = _as_set(a)
    if y in a:
        raise GraphError("y must not be in the exposure set")
    if (g.marks == Mark.CIRCLE).any():
        raise GraphError("forb_set is defined for DAGs and CPDAGs only")
    cn = causal_nodes(g, a, y)
    if causal_nodes(g, a, y, possible=True) != cn:
        raise GraphError("orientation-incomplete")
    forb = descendants(g, cn)
    possible = _reach(g, cn, lambda v: g.children(v) + g.neighbors(v))
    if possible != forb:
        raise GraphError("orientation-incomplete")
    return forb


def proper_backdoor_graph(g: MixedGraph, a, y: int) -> MixedGraph:
    """``g`` with every edge ``a_k -> c`` removed for ``c`` a causal node of ``(a, y)``."""
    a = _as_set(a)
    cn = causal_nodes(g, a, y)
    out = g.copy()
    for v in a:
        for c in g.children(v):
            if c in cn:
                out.remove_edge(v, c)
    return out


def is_adjustment_set(g: MixedGraph, a, y: int, w) -> bool:
    """Generalized adjustment criterion for the effect of ``a`` on ``y`` in a DAG.

    ``w`` must avoid the forbidden set, and ``a`` and ``y`` must be
    d-separated by ``w`` in the proper back-door graph (which blocks exactly
    the proper non-causal paths).
    """
    a, w = _as_set(a), _as_set(w)
    if y in a:
        raise GraphError("y must not be in the exposure set")
    if w & (a | {y}):
        raise GraphError("adjustment set overlaps exposure or outcome")
    if w & forb_set(g, a, y):
        return False
    pbd = proper_backdoor_graph(g, a, y)
    return all(d_separated(pbd, v, y, w) for v in a)
