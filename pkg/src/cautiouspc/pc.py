"""PC-stable with pluggable tests, collider orientation and Meek closure."""

from __future__ import annotations

import csv
import itertools
import logging
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence, Union

import numpy as np

from .citest import CiTestConfig, CiTester, CorrelationMatrix, GaussianTester
from .graph import GraphError, Kind, Mark, MixedGraph, SepsetMap, unshielded_triples
from .meek import BackgroundKnowledge, meek_rules

log = logging.getLogger(__name__)

STANDARD = "standard"
CONSERVATIVE = "conservative"


@dataclass
class PcOptions:
    """Options shared by PC and FCI.

    ``max_cond_size=None`` means unlimited for ``p <= 15`` and 5 otherwise.
    """

    test: Optional[CiTestConfig] = None
    max_cond_size: Optional[int] = None
    collider_mode: str = STANDARD
    stable: bool = True
    record: bool = True

    def __post_init__(self):
        if self.max_cond_size is not None and self.max_cond_size < 0:
            raise ValueError("max_cond_size must be >= 0")
        if self.collider_mode not in (STANDARD, CONSERVATIVE):
            raise ValueError(f"unknown collider mode {self.collider_mode!r}")

    def cond_cap(self, p: int) -> int:
        if self.max_cond_size is not None:
            return self.max_cond_size
        return p if p <= 15 else 5


@dataclass
class RunReport:
    """Audit trail of every test a run performed, plus orientation notes."""

    chunks: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    ambiguous_triples: set = field(default_factory=set)
    config: dict = field(default_factory=dict)

    def add(self, phase: str, i: int, j: int, combos: np.ndarray, batch, upto: Optional[int] = None) -> None:
        k = len(combos) if upto is None else upto
        self.chunks.append((phase, i, j, combos[:k], batch.rho[:k], batch.statistic[:k], batch.remove[:k], batch.ok[:k]))

    @property
    def n_tests(self) -> int:
        return sum(len(c[3]) for c in self.chunks)

    def rows(self) -> Iterator[tuple]:
        for phase, i, j, combos, rho, stat, remove, ok in self.chunks:
            for t in range(len(combos)):
                decision = "error" if not ok[t] else ("remove" if remove[t] else "retain")
                yield (i, j, tuple(int(v) for v in combos[t]), float(rho[t]), float(stat[t]), decision, phase)

    def write_csv(self, path, index: Optional[Sequence[int]] = None) -> None:
        """Write one row per test; ``index`` renames vertex ``v`` to ``index[v]``."""
        ix = (lambda v: v) if index is None else (lambda v: index[v])
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["i", "j", "S", "rho_hat", "statistic", "decision", "phase"])
            for i, j, s, rho, stat, dec, phase in self.rows():
                w.writerow([ix(i), ix(j), ";".join(str(ix(v)) for v in s), repr(rho), repr(stat), dec, phase])


def _as_tester(data: Union[CorrelationMatrix, CiTester], opts: PcOptions) -> CiTester:
    if isinstance(data, CiTester):
        return data
    if opts.test is None:
        raise ValueError("a CiTestConfig is required when passing a correlation matrix")
    return GaussianTester(data, opts.test)


def _bits(mask: int) -> list[int]:
    out = []
    v = 0
    while mask:
        if mask & 1:
            out.append(v)
        mask >>= 1
        v += 1
    return out


def _combos(members: list[int], s: int) -> np.ndarray:
    rows = list(itertools.combinations(members, s))
    return np.array(rows, dtype=np.intp).reshape(len(rows), s)


def candidate_sets(i: int, j: int, a_i: int, a_j: int, s: int) -> np.ndarray:
    """Conditioning sets of size ``s`` drawn from ``a_i`` then ``a_j`` (bitmasks).

    Sets from ``a_i`` come first in lexicographic order, followed by the sets
    from ``a_j`` that were not already listed.
    """
    a_i &= ~(1 << j)
    a_j &= ~(1 << i)
    parts = []
    if bin(a_i).count("1") >= s:
        parts.append(_combos(_bits(a_i), s))
    if bin(a_j).count("1") >= s:
        cj = _combos(_bits(a_j), s)
        if s > 0 and parts:
            masks = np.bitwise_or.reduce(np.left_shift(1, cj.astype(np.int64)), axis=1)
            cj = cj[(masks & ~a_i) != 0]
        elif parts:
            cj = cj[:0]
        parts.append(cj)
    if not parts:
        return np.zeros((0, s), dtype=np.intp)
    return np.concatenate(parts, axis=0)


def pc_skeleton(
    data: Union[CorrelationMatrix, CiTester],
    opts: Optional[PcOptions] = None,
    bk: Optional[BackgroundKnowledge] = None,
    report: Optional[RunReport] = None,
    initial: Optional[MixedGraph] = None,
) -> tuple[MixedGraph, SepsetMap]:
    """Adjacency search of PC (stable by default).

    Starts from the complete graph (or ``initial``) and for s = 0, 1, ...
    tests every adjacent pair against each size-s subset of its frozen
    adjacency sets. An edge is deleted at the first level where some test
    says so; the recorded separating set is the removing set with the
    smallest test statistic, which keeps orientations independent of vertex
    labels.
    """
    opts = opts or PcOptions()
    bk = bk or BackgroundKnowledge()
    tester = _as_tester(data, opts)
    p = tester.p
    if p < 2:
        raise ValueError("need at least two variables")
    cap = opts.cond_cap(p)
    g = MixedGraph.complete(p, names=getattr(initial, "names", None)) if initial is None else initial.copy()
    seps = SepsetMap()
    for a, b in sorted(bk.forbidden_edges):
        if g.adjacent(a, b):
            g.remove_edge(a, b)
            seps.set(a, b, (), by_knowledge=True)
            if report is not None:
                report.notes.append(f"edge {a}-{b} removed by knowledge")
    adj = [g.adj_mask(v) for v in range(p)]
    s = 0
    while s <= cap:
        frozen = list(adj)
        testable = False
        removals = []
        for i in range(p):
            for j in range(i + 1, p):
                if not (adj[i] >> j) & 1 or bk.is_required(i, j):
                    continue
                a_i, a_j = (frozen[i], frozen[j]) if opts.stable else (adj[i], adj[j])
                combos = candidate_sets(i, j, a_i, a_j, s)
                if not len(combos):
                    continue
                testable = True
                batch = tester.decide_many(i, j, combos)
                if report is not None and opts.record:
                    report.add("skeleton", i, j, combos, batch)
                hits = np.flatnonzero(batch.remove)
                if not len(hits):
                    continue
                # strongest evidence for removal; ties go to the first set
                hit = int(hits[np.argmin(batch.statistic[hits])])
                removals.append((i, j, combos[hit]))
                if not opts.stable:
                    adj[i] &= ~(1 << j)
                    adj[j] &= ~(1 << i)
        for i, j, sep in removals:
            adj[i] &= ~(1 << j)
            adj[j] &= ~(1 << i)
            g.remove_edge(i, j)
            seps.set(i, j, sep.tolist())
        if not testable:
            break
        s += 1
    return g, seps


def skeleton_from_removals(remove: np.ndarray, cap: Optional[int] = None) -> np.ndarray:
    """Stable skeleton search driven by a precomputed ``remove[i, j, mask]`` table.

    Gives the same adjacencies as :func:`pc_skeleton` (stable, no knowledge)
    without tracking separating sets. Returns a boolean adjacency matrix.
    """
    p = remove.shape[0]
    cap = p if cap is None else cap
    masks = np.arange(1 << p)
    pop = np.array([bin(m).count("1") for m in masks])
    bits = 1 << np.arange(p)
    iu, ju = np.triu_indices(p, 1)
    rem = remove[iu, ju]
    adj = ~np.eye(p, dtype=bool)
    alive = np.ones(len(iu), dtype=bool)
    for s in range(cap + 1):
        amask = (adj * bits).sum(axis=1)
        a_i = amask[iu] & ~bits[ju]
        a_j = amask[ju] & ~bits[iu]
        testable = alive & ((pop[a_i] >= s) | (pop[a_j] >= s))
        if not testable.any():
            break
        cols = masks[pop == s]
        inside = ((cols[None, :] & ~a_i[:, None]) == 0) | ((cols[None, :] & ~a_j[:, None]) == 0)
        hit = testable & (rem[:, pop == s] & inside).any(axis=1)
        alive &= ~hit
        adj[iu[hit], ju[hit]] = False
        adj[ju[hit], iu[hit]] = False
    return adj


def _collider_arrows(g: MixedGraph, triples, bk: Optional[BackgroundKnowledge], report: Optional[RunReport]):
    """Orient the given collider triples, dropping conflicting arrowheads."""
    wanted = set()
    for i, k, j in triples:
        if bk is not None and not (bk.allows_arrow(i, k) and bk.allows_arrow(j, k)):
            if report is not None:
                report.notes.append(f"collider {i}->{k}<-{j} contradicts knowledge; skipped")
            continue
        wanted.add((i, k))
        wanted.add((j, k))
    for a, b in sorted(wanted):
        if (b, a) in wanted:
            if report is not None and a < b:
                report.notes.append(f"conflicting collider orientations on {a}-{b}; left unoriented")
            continue
        g.set_mark(a, b, Mark.ARROW)


def orient_colliders(
    skel: MixedGraph,
    seps: SepsetMap,
    mode: str = STANDARD,
    data: Union[CorrelationMatrix, CiTester, None] = None,
    opts: Optional[PcOptions] = None,
    bk: Optional[BackgroundKnowledge] = None,
    report: Optional[RunReport] = None,
) -> tuple[MixedGraph, set]:
    """Orient unshielded colliders; returns the graph and the ambiguous triples.

    In conservative mode every subset of ``Adj(i)`` and ``Adj(j)`` is retested
    and a triple becomes a collider only if ``k`` is in none of the separating
    sets found, a definite non-collider if it is in all of them, and ambiguous
    otherwise (including when no separating set turns up).
    """
    opts = opts or PcOptions()
    g = skel.copy(Kind.CPDAG)
    colliders = []
    ambiguous = set()
    tester = _as_tester(data, opts) if mode == CONSERVATIVE else None
    cap = opts.cond_cap(g.p)
    for i, k, j in unshielded_triples(g):
        entry = seps.entry(i, j)
        if entry is None:
            raise GraphError(f"no separating set recorded for non-adjacent pair {i}, {j}")
        if entry.by_knowledge:
            if report is not None:
                report.notes.append(f"triple ({i},{k},{j}) skipped: {i}-{j} removed by knowledge")
            continue
        if mode == STANDARD:
            if k not in entry.sepset:
                colliders.append((i, k, j))
            continue
        a_i, a_j = g.adj_mask(i), g.adj_mask(j)
        found = []
        for s in range(0, cap + 1):
            combos = candidate_sets(i, j, a_i, a_j, s)
            if not len(combos):
                continue
            batch = tester.decide_many(i, j, combos)
            if report is not None and opts.record:
                report.add("collider", i, j, combos, batch)
            found.extend(combos[batch.remove].tolist())
        in_sep = [k in sep for sep in found]
        if found and not any(in_sep):
            colliders.append((i, k, j))
        elif not found or not all(in_sep):
            ambiguous.add((i, k, j))
    _collider_arrows(g, colliders, bk, report)
    if report is not None:
        report.ambiguous_triples |= ambiguous
    return g, ambiguous


def pc(
    data: Union[CorrelationMatrix, CiTester],
    opts: Optional[PcOptions] = None,
    bk: Optional[BackgroundKnowledge] = None,
) -> tuple[MixedGraph, SepsetMap, RunReport]:
    """Skeleton search, collider orientation and Meek closure."""
    opts = opts or PcOptions()
    tester = _as_tester(data, opts)
    report = RunReport(config={"algorithm": "pc", **tester.describe(), "collider_mode": opts.collider_mode,
                               "max_cond_size": opts.cond_cap(tester.p), "stable": opts.stable})
    skel, seps = pc_skeleton(tester, opts, bk, report)
    g, ambiguous = orient_colliders(skel, seps, opts.collider_mode, tester, opts, bk, report)
    g = meek_rules(g, bk, ambiguous)
    return g, seps, report
