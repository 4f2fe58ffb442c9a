"""Background knowledge and the Meek orientation rules R1-R4."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Optional

from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .graph import GraphError, Kind, Mark, MixedGraph


class KnowledgeConflict(GraphError):
    """Background knowledge contradicts an orientation already in the graph."""


@dataclass
class BackgroundKnowledge:
    """Tiered ordering plus required and forbidden edges.

    ``tiers`` is an ordered list of vertex groups; a vertex in an earlier tier
    can never be a descendant of one in a later tier. ``required_edges`` holds
    ordered pairs ``(a, b)`` meaning ``a -> b`` must be present.
    ``forbidden_edges`` holds pairs whose adjacency is ruled out.
    """

    tiers: list = field(default_factory=list)
    required_edges: set = field(default_factory=set)
    forbidden_edges: set = field(default_factory=set)

    def __post_init__(self):
        self.tiers = [list(t) for t in self.tiers]
        self.required_edges = {(int(a), int(b)) for a, b in self.required_edges}
        self.forbidden_edges = {tuple(sorted((int(a), int(b)))) for a, b in self.forbidden_edges}
        flat = [v for t in self.tiers for v in t]
        if len(flat) != len(set(flat)):
            raise ValueError("tiers must not share vertices")
        self._tier = {v: k for k, t in enumerate(self.tiers) for v in t}
        req = {tuple(sorted(e)) for e in self.required_edges}
        if req & self.forbidden_edges:
            raise ValueError(f"edges both required and forbidden: {sorted(req & self.forbidden_edges)}")
        for a, b in self.required_edges:
            if not self.allows_arrow(a, b, check_required=False):
                raise ValueError(f"required edge {a}->{b} points backwards across tiers")

    def tier_of(self, v: int) -> Optional[int]:
        return self._tier.get(v)

    def is_required(self, a: int, b: int) -> bool:
        return (a, b) in self.required_edges or (b, a) in self.required_edges

    def is_forbidden(self, a: int, b: int) -> bool:
        return tuple(sorted((a, b))) in self.forbidden_edges

    def allows_arrow(self, a: int, b: int, check_required: bool = True) -> bool:
        """Whether knowledge permits the orientation ``a -> b``."""
        ta, tb = self.tier_of(a), self.tier_of(b)
        if ta is not None and tb is not None and tb < ta:
            return False
        if check_required and (b, a) in self.required_edges:
            return False
        return True

    def forced(self, a: int, b: int) -> Optional[tuple[int, int]]:
        """Orientation forced by knowledge on the pair, or ``None``."""
        if (a, b) in self.required_edges:
            return (a, b)
        if (b, a) in self.required_edges:
            return (b, a)
        ta, tb = self.tier_of(a), self.tier_of(b)
        if ta is None or tb is None or ta == tb:
            return None
        return (a, b) if ta < tb else (b, a)

    def permuted(self, perm) -> "BackgroundKnowledge":
        """Knowledge with vertex ``v`` renamed to ``perm[v]``."""
        return BackgroundKnowledge(
            [[perm[v] for v in t] for t in self.tiers],
            {(perm[a], perm[b]) for a, b in self.required_edges},
            {(perm[a], perm[b]) for a, b in self.forbidden_edges},
        )

    @property
    def empty(self) -> bool:
        return not (self.tiers or self.required_edges or self.forbidden_edges)


def apply_knowledge(g: MixedGraph, bk: BackgroundKnowledge) -> None:
    """Orient every edge whose direction is fixed by ``bk``, in place."""
    for a, b in itertools.combinations(range(g.p), 2):
        if not g.adjacent(a, b):
            if bk.is_required(a, b):
                raise KnowledgeConflict(f"required edge {a}-{b} is absent from the graph")
            continue
        f = bk.forced(a, b)
        if f is None:
            continue
        x, y = f
        if g.is_directed(x, y):
            continue
        if g.mark(y, x) == Mark.ARROW:
            raise KnowledgeConflict(f"edge {x}-{y}: knowledge requires {x}->{y} but the graph has {y}->{x}")
        g.orient(x, y)


# Each rule inspects a snapshot and returns the orientations it wants; the
# caller applies them together so the result does not depend on vertex order.


def _r1(g: MixedGraph, adj, ambiguous) -> set:
    """a -> b - c with a, c nonadjacent: orient b -> c."""
    out = set()
    for b in range(g.p):
        nb = g.neighbors(b)
        if not nb:
            continue
        for a in g.parents(b):
            for c in nb:
                if not adj[a][c] and (min(a, c), b, max(a, c)) not in ambiguous:
                    out.add((b, c))
    return out


def _r2(g: MixedGraph, adj) -> set:
    """a -> k -> b with a - b: orient a -> b."""
    out = set()
    for a in range(g.p):
        ch = g.children(a)
        for b in g.neighbors(a):
            if any(g.is_directed(k, b) for k in ch):
                out.add((a, b))
    return out


def _r3(g: MixedGraph, adj) -> set:
    """a - k -> b and a - l -> b, k and l nonadjacent, a - b: orient a -> b."""
    out = set()
    for a in range(g.p):
        nb = g.neighbors(a)
        for b in nb:
            cands = [k for k in nb if k != b and g.is_directed(k, b)]
            if any(not adj[k][l] for k, l in itertools.combinations(cands, 2)):
                out.add((a, b))
    return out


def _r4(g: MixedGraph, adj) -> set:
    """a - k -> b and a - l -> k, b and l nonadjacent, a - b: orient a -> b."""
    out = set()
    for a in range(g.p):
        nb = g.neighbors(a)
        for b in nb:
            for k in nb:
                if k == b or not g.is_directed(k, b):
                    continue
                if any(l not in (b, k) and not adj[l][b] and g.is_directed(l, k) for l in nb):
                    out.add((a, b))
                    break
    return out


def _admissible(g: MixedGraph, wanted: set, adj) -> set:
    """Drop proposals that clash, add an unshielded collider or close a directed cycle.

    On a consistent pattern nothing is dropped; on noisy input the checks are
    made against the whole proposal set at once, so the outcome does not
    depend on vertex order.
    """
    wanted = {(a, b) for a, b in wanted if (b, a) not in wanted and g.is_undirected(a, b)}
    into = {}
    for a, b in wanted:
        into.setdefault(b, set()).add(a)
    keep = set()
    for a, b in wanted:
        heads = set(g.parents(b)) | into[b]
        if any(c != a and not adj[a][c] for c in heads):
            continue
        keep.add((a, b))
    if not keep:
        return keep
    d = g.directed_adjacency().astype(bool)
    for a, b in keep:
        d[a, b] = True
    _, label = connected_components(csr_matrix(d), directed=True, connection="strong")
    return {(a, b) for a, b in keep if label[a] != label[b]}


def _apply(g: MixedGraph, wanted: set, adj) -> bool:
    wanted = _admissible(g, wanted, adj)
    for a, b in wanted:
        g.orient(a, b)
    return bool(wanted)


def meek_rules(
    g: MixedGraph,
    bk: Optional[BackgroundKnowledge] = None,
    ambiguous: Iterable[tuple[int, int, int]] = (),
) -> MixedGraph:
    """Close a partially directed graph under knowledge orientations and R1-R4.

    Knowledge is applied first; then the four rules are applied until none
    fires. Triples listed in ``ambiguous`` (as ``(i, k, j)`` with ``i < j``)
    never trigger R1. An edge stays undirected when two rules ask for opposite
    orientations in the same pass, or when orienting it would create a new
    unshielded collider or a directed cycle (possible only on noisy input).
    """
    out = g.copy(Kind.CPDAG)
    if (out.marks == Mark.CIRCLE).any():
        raise GraphError("meek_rules expects tail/arrow marks only")
    if bk is not None and not bk.empty:
        apply_knowledge(out, bk)
    ambiguous = set(ambiguous)
    adj = (out.marks != 0).tolist()
    while True:
        changed = _apply(out, _r1(out, adj, ambiguous), adj)
        changed |= _apply(out, _r2(out, adj), adj)
        changed |= _apply(out, _r3(out, adj), adj)
        changed |= _apply(out, _r4(out, adj), adj)
        if not changed:
            return out
