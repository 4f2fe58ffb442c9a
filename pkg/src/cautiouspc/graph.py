"""Mixed graphs with endpoint marks and the structural queries built on them.

A single :class:`MixedGraph` represents DAGs, skeletons, CPDAGs and PAGs. Edges
are stored in a ``p x p`` mark matrix where ``marks[a, b]`` is the mark at the
``b`` end of the edge between ``a`` and ``b`` (``0`` when there is no edge).
Vertices are dense 0-based integers.
"""

from __future__ import annotations

import enum
import itertools
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple, Optional, Sequence

import numpy as np


class Mark(enum.IntEnum):
    TAIL = 1
    ARROW = 2
    CIRCLE = 3


class Kind(enum.Enum):
    DAG = "dag"
    SKELETON = "skeleton"
    CPDAG = "cpdag"
    PAG = "pag"


class GraphError(ValueError):
    """Raised for malformed graphs or invalid vertex arguments."""


class Edge(NamedTuple):
    a: int
    b: int
    mark_at_a: Mark
    mark_at_b: Mark

    @property
    def is_undirected(self) -> bool:
        return self.mark_at_a == Mark.TAIL and self.mark_at_b == Mark.TAIL

    @property
    def is_directed(self) -> bool:
        return {self.mark_at_a, self.mark_at_b} == {Mark.TAIL, Mark.ARROW}

    @property
    def is_bidirected(self) -> bool:
        return self.mark_at_a == Mark.ARROW and self.mark_at_b == Mark.ARROW


_ALLOWED = {
    Kind.DAG: {Mark.TAIL, Mark.ARROW},
    Kind.SKELETON: {Mark.TAIL},
    Kind.CPDAG: {Mark.TAIL, Mark.ARROW},
    Kind.PAG: {Mark.TAIL, Mark.ARROW, Mark.CIRCLE},
}


class MixedGraph:
    """Graph on vertices ``0..p-1`` whose edges carry a mark at each end."""

    def __init__(self, p: int, kind: Kind = Kind.DAG, names: Optional[Sequence[str]] = None):
        if p < 0:
            raise GraphError("vertex count must be non-negative")
        self.p = int(p)
        self.kind = kind
        self.marks = np.zeros((self.p, self.p), dtype=np.int8)
        if names is not None and len(names) != self.p:
            raise GraphError(f"expected {self.p} names, got {len(names)}")
        self.names = tuple(names) if names is not None else None

    # -- construction -----------------------------------------------------

    @classmethod
    def complete(cls, p: int, mark: Mark = Mark.TAIL, kind: Kind = Kind.SKELETON, names=None) -> "MixedGraph":
        g = cls(p, kind, names)
        g.marks[:] = int(mark)
        np.fill_diagonal(g.marks, 0)
        return g

    @classmethod
    def from_directed_edges(cls, p: int, edges: Iterable[tuple[int, int]], names=None) -> "MixedGraph":
        g = cls(p, Kind.DAG, names)
        for a, b in edges:
            g.add_edge(a, b, Mark.TAIL, Mark.ARROW)
        return g

    @classmethod
    def from_adjacency(cls, adj: np.ndarray, names=None) -> "MixedGraph":
        """Build a DAG from a 0/1 matrix with ``adj[a, b] != 0`` meaning ``a -> b``."""
        adj = np.asarray(adj)
        p = adj.shape[0]
        return cls.from_directed_edges(p, zip(*np.nonzero(adj)), names)

    def copy(self, kind: Optional[Kind] = None) -> "MixedGraph":
        g = MixedGraph(self.p, self.kind if kind is None else kind, self.names)
        g.marks = self.marks.copy()
        return g

    # -- mutation ---------------------------------------------------------

    def _check_vertex(self, v: int) -> None:
        if not 0 <= v < self.p:
            raise GraphError(f"vertex {v} out of range for p={self.p}")

    def add_edge(self, a: int, b: int, mark_at_a: Mark = Mark.TAIL, mark_at_b: Mark = Mark.ARROW) -> None:
        self._check_vertex(a)
        self._check_vertex(b)
        if a == b:
            raise GraphError("self-loops are not allowed")
        if self.marks[a, b]:
            raise GraphError(f"vertices {a} and {b} are already adjacent")
        self.marks[b, a] = mark_at_a
        self.marks[a, b] = mark_at_b

    def remove_edge(self, a: int, b: int) -> None:
        self.marks[a, b] = 0
        self.marks[b, a] = 0

    def set_mark(self, a: int, b: int, mark: Mark) -> None:
        """Set the mark at the ``b`` end of the existing edge ``a *-* b``."""
        if not self.marks[a, b]:
            raise GraphError(f"no edge between {a} and {b}")
        self.marks[a, b] = mark

    def orient(self, a: int, b: int) -> None:
        """Make the existing edge between ``a`` and ``b`` into ``a -> b``."""
        self.set_mark(a, b, Mark.ARROW)
        self.marks[b, a] = Mark.TAIL

    # -- queries ----------------------------------------------------------

    def mark(self, a: int, b: int) -> int:
        return int(self.marks[a, b])

    def adjacent(self, a: int, b: int) -> bool:
        return bool(self.marks[a, b])

    def adj(self, v: int) -> list[int]:
        return np.flatnonzero(self.marks[v]).tolist()

    def adj_mask(self, v: int) -> int:
        m = 0
        for u in np.flatnonzero(self.marks[v]):
            m |= 1 << int(u)
        return m

    def is_directed(self, a: int, b: int) -> bool:
        """True when ``a -> b``."""
        return self.marks[a, b] == Mark.ARROW and self.marks[b, a] == Mark.TAIL

    def is_undirected(self, a: int, b: int) -> bool:
        return self.marks[a, b] == Mark.TAIL and self.marks[b, a] == Mark.TAIL

    def parents(self, v: int) -> list[int]:
        return np.flatnonzero((self.marks[:, v] == Mark.ARROW) & (self.marks[v, :] == Mark.TAIL)).tolist()

    def children(self, v: int) -> list[int]:
        return np.flatnonzero((self.marks[v, :] == Mark.ARROW) & (self.marks[:, v] == Mark.TAIL)).tolist()

    def neighbors(self, v: int) -> list[int]:
        """Vertices joined to ``v`` by an undirected (tail-tail) edge."""
        return np.flatnonzero((self.marks[v, :] == Mark.TAIL) & (self.marks[:, v] == Mark.TAIL)).tolist()

    def edges(self) -> list[Edge]:
        a_idx, b_idx = np.nonzero(np.triu(self.marks))
        return [Edge(int(a), int(b), Mark(self.marks[b, a]), Mark(self.marks[a, b])) for a, b in zip(a_idx, b_idx)]

    def adjacency_pairs(self) -> set[tuple[int, int]]:
        a_idx, b_idx = np.nonzero(np.triu(self.marks))
        return {(int(a), int(b)) for a, b in zip(a_idx, b_idx)}

    @property
    def n_edges(self) -> int:
        return int(np.count_nonzero(np.triu(self.marks)))

    def directed_adjacency(self) -> np.ndarray:
        """0/1 matrix with entry ``[a, b] = 1`` for each directed edge ``a -> b``."""
        return ((self.marks == Mark.ARROW) & (self.marks.T == Mark.TAIL)).astype(np.int8)

    def validate(self) -> None:
        if not np.array_equal(self.marks != 0, self.marks.T != 0):
            raise GraphError("mark matrix is not symmetric in its support")
        if np.any(np.diag(self.marks)):
            raise GraphError("self-loops present")
        present = {Mark(int(m)) for m in np.unique(self.marks) if m}
        bad = present - _ALLOWED[self.kind]
        if bad:
            raise GraphError(f"marks {sorted(m.name for m in bad)} not allowed in a {self.kind.value}")
        if self.kind == Kind.DAG:
            if any(not e.is_directed for e in self.edges()):
                raise GraphError("a dag may only contain directed edges")
            if not is_acyclic(self):
                raise GraphError("dag contains a directed cycle")
        if self.kind == Kind.CPDAG and any(e.is_bidirected for e in self.edges()):
            raise GraphError("a cpdag may not contain bidirected edges")

    def __eq__(self, other) -> bool:
        if not isinstance(other, MixedGraph):
            return NotImplemented
        return self.p == other.p and np.array_equal(self.marks, other.marks)

    def __repr__(self) -> str:
        return f"MixedGraph(p={self.p}, kind={self.kind.value}, edges={self.n_edges})"

    def relabel(self, perm: Sequence[int]) -> "MixedGraph":
        """Return the graph with vertex ``v`` renamed to ``perm[v]``."""
        perm = np.asarray(perm)
        g = MixedGraph(self.p, self.kind)
        inv = np.argsort(perm)
        g.marks = self.marks[np.ix_(inv, inv)].copy()
        return g

    # -- text format ------------------------------------------------------

    def to_text(self) -> str:
        lines = [f"p={self.p}"]
        if self.names is not None:
            lines.append("# names: " + ",".join(self.names))
        for e in self.edges():
            left, right, ml, mr = e.a, e.b, e.mark_at_a, e.mark_at_b
            if _RANK[ml] > _RANK[mr]:
                left, right, ml, mr = right, left, mr, ml
            lines.append(f"{left} {_LEFT[ml]}-{_RIGHT[mr]} {right}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, kind: Optional[Kind] = None) -> "MixedGraph":
        lines = [ln.strip() for ln in text.splitlines()]
        lines = [ln for ln in lines if ln]
        if not lines or not lines[0].startswith("p="):
            raise GraphError("graph text must start with a 'p=<n>' header")
        p = int(lines[0][2:])
        names = None
        parsed = []
        for ln in lines[1:]:
            if ln.startswith("#"):
                body = ln[1:].strip()
                if body.startswith("names:"):
                    names = [s.strip() for s in body[len("names:"):].split(",")]
                continue
            parts = ln.split()
            if len(parts) != 3 or len(parts[1]) != 3 or parts[1][1] != "-":
                raise GraphError(f"cannot parse edge line {ln!r}")
            a, b = int(parts[0]), int(parts[2])
            try:
                ml, mr = _PARSE_LEFT[parts[1][0]], _PARSE_RIGHT[parts[1][2]]
            except KeyError:
                raise GraphError(f"unknown edge symbol {parts[1]!r}") from None
            parsed.append((a, b, ml, mr))
        if kind is None:
            kind = _infer_kind(parsed)
        g = cls(p, kind, names)
        for a, b, ml, mr in parsed:
            g.add_edge(a, b, ml, mr)
        return g


_RANK = {Mark.TAIL: 0, Mark.CIRCLE: 1, Mark.ARROW: 2}
_LEFT = {Mark.TAIL: "-", Mark.ARROW: "<", Mark.CIRCLE: "o"}
_RIGHT = {Mark.TAIL: "-", Mark.ARROW: ">", Mark.CIRCLE: "o"}
_PARSE_LEFT = {v: k for k, v in _LEFT.items()}
_PARSE_RIGHT = {v: k for k, v in _RIGHT.items()}


def _infer_kind(parsed) -> Kind:
    marks = {m for _, _, ml, mr in parsed for m in (ml, mr)}
    if Mark.CIRCLE in marks or any(ml == mr == Mark.ARROW for _, _, ml, mr in parsed):
        return Kind.PAG
    if marks <= {Mark.TAIL}:
        return Kind.SKELETON if parsed else Kind.DAG
    if any(ml == mr == Mark.TAIL for _, _, ml, mr in parsed):
        return Kind.CPDAG
    return Kind.DAG


def read_graph(path) -> MixedGraph:
    with open(path) as fh:
        return MixedGraph.from_text(fh.read())


def write_graph(g: MixedGraph, path) -> None:
    with open(path, "w") as fh:
        fh.write(g.to_text())


# ---------------------------------------------------------------------------
# Sepsets


@dataclass(frozen=True)
class SepsetEntry:
    sepset: frozenset
    by_knowledge: bool = False


class SepsetMap:
    """Symmetric map from an unordered vertex pair to its separating set."""

    def __init__(self):
        self._entries: dict[tuple[int, int], SepsetEntry] = {}

    @staticmethod
    def _key(i: int, j: int) -> tuple[int, int]:
        if i == j:
            raise GraphError("sepset requires two distinct vertices")
        return (i, j) if i < j else (j, i)

    def set(self, i: int, j: int, s: Iterable[int], by_knowledge: bool = False) -> None:
        s = frozenset(int(v) for v in s)
        if i in s or j in s:
            raise GraphError("a separating set may not contain its own pair")
        self._entries[self._key(i, j)] = SepsetEntry(s, by_knowledge)

    def get(self, i: int, j: int) -> Optional[frozenset]:
        e = self._entries.get(self._key(i, j))
        return None if e is None else e.sepset

    def entry(self, i: int, j: int) -> Optional[SepsetEntry]:
        return self._entries.get(self._key(i, j))

    def __contains__(self, pair) -> bool:
        return self._key(*pair) in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def items(self) -> Iterator[tuple[tuple[int, int], SepsetEntry]]:
        return iter(sorted(self._entries.items()))

    def copy(self) -> "SepsetMap":
        out = SepsetMap()
        out._entries = dict(self._entries)
        return out

    def to_csv_rows(self) -> list[list[str]]:
        rows = [["i", "j", "S", "by_knowledge"]]
        for (i, j), e in self.items():
            rows.append([str(i), str(j), ";".join(map(str, sorted(e.sepset))), str(int(e.by_knowledge))])
        return rows


# ---------------------------------------------------------------------------
# Structural queries


def is_acyclic(g: MixedGraph) -> bool:
    """True iff the directed edges of ``g`` contain no directed cycle."""
    adj = g.directed_adjacency()
    indeg = adj.sum(axis=0).astype(int)
    queue = deque(np.flatnonzero(indeg == 0).tolist())
    seen = 0
    while queue:
        v = queue.popleft()
        seen += 1
        for c in np.flatnonzero(adj[v]):
            indeg[c] -= 1
            if indeg[c] == 0:
                queue.append(int(c))
    return seen == g.p


def topological_order(g: MixedGraph) -> list[int]:
    adj = g.directed_adjacency()
    indeg = adj.sum(axis=0).astype(int)
    ready = sorted(np.flatnonzero(indeg == 0).tolist())
    order = []
    while ready:
        v = ready.pop(0)
        order.append(v)
        for c in np.flatnonzero(adj[v]):
            indeg[c] -= 1
            if indeg[c] == 0:
                ready.append(int(c))
        ready.sort()
    if len(order) != g.p:
        raise GraphError("graph has a directed cycle")
    return order


def ancestors(g: MixedGraph, vs: Iterable[int]) -> set[int]:
    """Ancestors along directed edges, each vertex counting as its own ancestor."""
    out = set(vs)
    stack = list(out)
    while stack:
        v = stack.pop()
        for u in g.parents(v):
            if u not in out:
                out.add(u)
                stack.append(u)
    return out


def descendants(g: MixedGraph, vs: Iterable[int]) -> set[int]:
    out = set(vs)
    stack = list(out)
    while stack:
        v = stack.pop()
        for u in g.children(v):
            if u not in out:
                out.add(u)
                stack.append(u)
    return out


def d_separated(g: MixedGraph, i: int, j: int, c: Iterable[int] = ()) -> bool:
    """Whether ``i`` and ``j`` are d-separated given ``c`` in the DAG ``g``.

    Uses the reachability ("Bayes ball") formulation: a search over
    (vertex, direction-of-arrival) states starting at ``i``.
    """
    c = set(c)
    for v in (i, j, *c):
        g._check_vertex(v)
    if i == j:
        raise GraphError("d-separation needs two distinct vertices")
    if i in c or j in c:
        raise GraphError("conditioning set overlaps the queried pair")
    an_c = ancestors(g, c)
    # state (v, up): up=True means v was reached from one of its children
    visited = set()
    stack = [(i, True)]
    while stack:
        v, up = stack.pop()
        if (v, up) in visited:
            continue
        visited.add((v, up))
        if v == j:
            return False
        if up:
            if v in c:
                continue
            for u in g.parents(v):
                stack.append((u, True))
            for u in g.children(v):
                stack.append((u, False))
        else:
            if v not in c:
                for u in g.children(v):
                    stack.append((u, False))
            if v in an_c:
                for u in g.parents(v):
                    stack.append((u, True))
    return True


def skeleton(g: MixedGraph) -> MixedGraph:
    s = MixedGraph(g.p, Kind.SKELETON, g.names)
    s.marks = np.where(g.marks != 0, Mark.TAIL, 0).astype(np.int8)
    return s


def _check_same_p(g1: MixedGraph, g2: MixedGraph) -> None:
    if g1.p != g2.p:
        raise GraphError(f"vertex-count mismatch: {g1.p} vs {g2.p}")


def is_skeleton_subgraph(g1: MixedGraph, g2: MixedGraph) -> bool:
    """True iff every adjacency of ``g1`` is also an adjacency of ``g2``."""
    _check_same_p(g1, g2)
    return not np.any((g1.marks != 0) & (g2.marks == 0))


def unshielded_triples(g: MixedGraph) -> list[tuple[int, int, int]]:
    """Triples ``(i, k, j)`` with ``i < j`` both adjacent to ``k`` and not to each other."""
    adj = g.marks != 0
    out = []
    for k in range(g.p):
        nb = np.flatnonzero(adj[k])
        for a, b in itertools.combinations(nb, 2):
            if not adj[a, b]:
                out.append((int(a), k, int(b)))
    out.sort()
    return out


def unshielded_colliders(g: MixedGraph) -> set[tuple[int, int, int]]:
    """Unshielded triples ``(i, k, j)`` with arrowheads at ``k`` on both edges."""
    return {
        (i, k, j)
        for i, k, j in unshielded_triples(g)
        if g.marks[i, k] == Mark.ARROW and g.marks[j, k] == Mark.ARROW
    }


def markov_equivalent(g1: MixedGraph, g2: MixedGraph) -> bool:
    _check_same_p(g1, g2)
    return skeleton(g1) == skeleton(g2) and unshielded_colliders(g1) == unshielded_colliders(g2)


def dag_to_cpdag(g: MixedGraph) -> MixedGraph:
    """CPDAG of the Markov equivalence class of the DAG ``g``."""
    from .meek import meek_rules

    if not is_acyclic(g):
        raise GraphError("dag_to_cpdag requires an acyclic graph")
    cp = MixedGraph(g.p, Kind.CPDAG, g.names)
    cp.marks = np.where(g.marks != 0, Mark.TAIL, 0).astype(np.int8)
    for i, k, j in unshielded_colliders(g):
        cp.orient(i, k)
        cp.orient(j, k)
    return meek_rules(cp)


def possible_d_sep(g: MixedGraph, i: int, j: int) -> set[int]:
    """Possible-d-sep of ``(i, j)``: vertices reachable from ``i`` along a path
    whose every interior vertex is a collider on the path or lies in a
    triangle with its path neighbours.

    Paths must be simple, so the search carries the visited vertex set; this
    is exponential in the worst case but exact.
    """
    if i == j:
        raise GraphError("possible_d_sep needs two distinct vertices")
    adj = g.marks != 0
    found: set[int] = set()
    # memo of (prev, cur, visited) states already expanded
    seen: set[tuple[int, int, int]] = set()

    target = g.p - 1

    def extend(prev: int, cur: int, visited: int) -> None:
        key = (prev, cur, visited)
        if key in seen or len(found) == target:
            return
        seen.add(key)
        found.add(cur)
        for nxt in np.flatnonzero(adj[cur]):
            nxt = int(nxt)
            if visited >> nxt & 1:
                continue
            collider = g.marks[prev, cur] == Mark.ARROW and g.marks[nxt, cur] == Mark.ARROW
            if collider or adj[prev, nxt]:
                extend(cur, nxt, visited | (1 << nxt))

    for k in np.flatnonzero(adj[i]):
        k = int(k)
        extend(i, k, (1 << i) | (1 << k))
    found.discard(i)
    found.discard(j)
    return found
