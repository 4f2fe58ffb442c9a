"""FCI: skeleton, possible-d-sep pruning and PAG orientation rules.

Orientation uses Zhang's rules R1-R4 and R8-R10; the rules that only matter
under selection bias (R5-R7) are left out.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .citest import CiTester, CorrelationMatrix
from .graph import Kind, Mark, MixedGraph, SepsetMap, possible_d_sep, unshielded_triples
from .meek import BackgroundKnowledge
from .pc import PcOptions, RunReport, _as_tester, candidate_sets, pc_skeleton

A, T, C = Mark.ARROW, Mark.TAIL, Mark.CIRCLE


@dataclass
class FciOptions(PcOptions):
    bk: Optional[BackgroundKnowledge] = None


def _circles(g: MixedGraph) -> MixedGraph:
    out = g.copy(Kind.PAG)
    out.marks = np.where(g.marks != 0, C, 0).astype(np.int8)
    return out


def _orient_colliders(g: MixedGraph, seps: SepsetMap, report: Optional[RunReport]) -> None:
    """Put arrowheads at ``k`` for every unshielded ``i *-* k *-* j`` with ``k`` outside sepset(i, j)."""
    arrows = set()
    for i, k, j in unshielded_triples(g):
        entry = seps.entry(i, j)
        if entry is None or entry.by_knowledge:
            if report is not None and entry is not None:
                report.notes.append(f"triple ({i},{k},{j}) skipped: {i}-{j} removed by knowledge")
            continue
        if k not in entry.sepset:
            arrows.add((i, k))
            arrows.add((j, k))
    for a, b in arrows:
        g.marks[a, b] = A


def _apply_knowledge(g: MixedGraph, bk: Optional[BackgroundKnowledge]) -> None:
    """Later tiers cannot be ancestors of earlier ones; required edges are directed."""
    if bk is None or bk.empty:
        return
    for a, b in itertools.combinations(range(g.p), 2):
        if not g.adjacent(a, b):
            continue
        f = bk.forced(a, b)
        if f is None:
            continue
        x, y = f
        g.marks[x, y] = A
        if (x, y) in bk.required_edges:
            g.marks[y, x] = T


def _pds_stage(g: MixedGraph, seps: SepsetMap, tester: CiTester, cap: int, bk, report, record) -> None:
    """Remove edges separated by subsets of possible-d-sep sets."""
    p = g.p
    pds = {}
    for i in range(p):
        for j in g.adj(i):
            pds[i, j] = sum(1 << v for v in possible_d_sep(g, i, j))
    removals = []
    for i in range(p):
        for j in range(i + 1, p):
            if not g.adjacent(i, j) or (bk is not None and bk.is_required(i, j)):
                continue
            for s in range(cap + 1):
                combos = candidate_sets(i, j, pds[i, j], pds[j, i], s)
                if not len(combos):
                    continue
                batch = tester.decide_many(i, j, combos)
                if report is not None and record:
                    report.add("pds", i, j, combos, batch)
                hits = np.flatnonzero(batch.remove)
                if len(hits):
                    removals.append((i, j, combos[hits[np.argmin(batch.statistic[hits])]]))
                    break
    for i, j, sep in removals:
        g.remove_edge(i, j)
        seps.set(i, j, sep.tolist())


# PAG rules. ``m[a, b]`` is the mark at ``b`` on the edge between ``a`` and ``b``.


def _into(m, a, b) -> bool:
    return m[a, b] == A


def _directed(m, a, b) -> bool:
    return m[a, b] == A and m[b, a] == T


def _violates(m) -> bool:
    """Directed cycle, or a bidirected edge whose ends are joined by a directed path."""
    d = (m == A) & (m.T == T)
    reach = d.copy()
    for k in range(len(m)):
        reach |= reach[:, [k]] & reach[[k], :]
    if reach.diagonal().any():
        return True
    return bool(((m == A) & (m.T == A) & (reach | reach.T)).any())


def _try(g: MixedGraph, *changes) -> bool:
    """Apply ``(a, b, mark)`` changes together unless they break ancestrality.

    Only noisy input can trigger the refusal; the edge then keeps its
    circle marks.
    """
    m = g.marks
    old = [(a, b, m[a, b]) for a, b, _ in changes]
    for a, b, mark in changes:
        m[a, b] = mark
    if _violates(m):
        for a, b, mark in old:
            m[a, b] = mark
        return False
    return True


def _rule1(g: MixedGraph) -> bool:
    m, changed = g.marks, False
    for b in range(g.p):
        for a in g.adj(b):
            if not _into(m, a, b):
                continue
            for c in g.adj(b):
                if c != a and m[c, b] == C and not g.adjacent(a, c):
                    changed |= _try(g, (c, b, T), (b, c, A))
    return changed


def _rule2(g: MixedGraph) -> bool:
    m, changed = g.marks, False
    for a in range(g.p):
        for c in g.adj(a):
            if m[a, c] != C:
                continue
            for b in g.adj(a):
                if b == c or not g.adjacent(b, c):
                    continue
                if (_directed(m, a, b) and _into(m, b, c)) or (_into(m, a, b) and _directed(m, b, c)):
                    if _try(g, (a, c, A)):
                        changed = True
                        break
    return changed


def _rule3(g: MixedGraph) -> bool:
    m, changed = g.marks, False
    for b in range(g.p):
        for th in g.adj(b):
            if m[th, b] != C:
                continue
            into_b = [a for a in g.adj(b) if a != th and _into(m, a, b) and g.adjacent(a, th) and m[a, th] == C]
            if any(not g.adjacent(a, c) for a, c in itertools.combinations(into_b, 2)):
                changed |= _try(g, (th, b, A))
    return changed


def _discriminating_theta(g: MixedGraph, alpha: int, beta: int, gamma: int) -> Optional[int]:
    """End ``theta`` of a discriminating path ``theta ... alpha beta gamma`` for ``beta``, if any."""
    m = g.marks
    prev = {alpha: beta}
    queue = deque([alpha])
    while queue:
        v = queue.popleft()
        for t in g.adj(v):
            if t in prev or t in (beta, gamma) or not _into(m, t, v):
                continue
            if not g.adjacent(t, gamma):
                return t
            if _directed(m, t, gamma) and _into(m, v, t):
                prev[t] = v
                queue.append(t)
    return None


def _rule4(g: MixedGraph, seps: SepsetMap) -> bool:
    m = g.marks
    for beta in range(g.p):
        for gamma in g.adj(beta):
            if m[gamma, beta] != C:
                continue
            for alpha in g.adj(beta):
                if alpha == gamma or not _into(m, beta, alpha) or not _directed(m, alpha, gamma):
                    continue
                theta = _discriminating_theta(g, alpha, beta, gamma)
                if theta is None:
                    continue
                sep = seps.get(theta, gamma) or frozenset()
                if beta in sep:
                    done = _try(g, (gamma, beta, T), (beta, gamma, A))
                else:
                    done = _try(g, (alpha, beta, A), (beta, alpha, A), (gamma, beta, A), (beta, gamma, A))
                if done:
                    return True
    return False


def _rule8(g: MixedGraph) -> bool:
    m, changed = g.marks, False
    for a in range(g.p):
        for c in g.adj(a):
            if not (m[c, a] == C and m[a, c] == A):
                continue
            for b in g.adj(a):
                if b == c or not _directed(m, b, c):
                    continue
                if (_directed(m, a, b) or (m[b, a] == T and m[a, b] == C)) and _try(g, (c, a, T)):
                    changed = True
                    break
    return changed


def _pd_edge(m, a, b) -> bool:
    """Edge ``a *-* b`` can be oriented ``a -> b``."""
    return m[b, a] != A and m[a, b] != T


def _upd_first_steps(g: MixedGraph, alpha: int, target: int, avoid: int) -> set[int]:
    """Second vertices of uncovered potentially directed paths ``alpha ... target``.

    Paths may not pass through ``avoid``.
    """
    m = g.marks
    out = set()

    def reach(prev, cur, visited) -> bool:
        if cur == target:
            return True
        for nxt in g.adj(cur):
            if visited >> nxt & 1 or nxt == avoid or g.adjacent(prev, nxt) or not _pd_edge(m, cur, nxt):
                continue
            if reach(cur, nxt, visited | 1 << nxt):
                return True
        return False

    for first in g.adj(alpha):
        if first == avoid or not _pd_edge(m, alpha, first):
            continue
        if reach(alpha, first, 1 << alpha | 1 << first):
            out.add(first)
    return out


def _rule9(g: MixedGraph) -> bool:
    m, changed = g.marks, False
    for a in range(g.p):
        for c in g.adj(a):
            if not (m[c, a] == C and m[a, c] == A):
                continue
            if any(b != c and not g.adjacent(b, c) for b in _upd_first_steps(g, a, c, -1)):
                changed |= _try(g, (c, a, T))
    return changed


def _rule10(g: MixedGraph) -> bool:
    m, changed = g.marks, False
    for a in range(g.p):
        for c in g.adj(a):
            if not (m[c, a] == C and m[a, c] == A):
                continue
            pa = [b for b in g.adj(c) if b != a and _directed(m, b, c)]
            firsts = {b: _upd_first_steps(g, a, b, c) for b in pa}
            done = False
            for b, t in itertools.combinations(pa, 2):
                for mu in firsts[b]:
                    if any(w != mu and not g.adjacent(mu, w) for w in firsts[t]):
                        done = True
                        break
                if done:
                    break
            if done:
                changed |= _try(g, (c, a, T))
    return changed


def pag_rules(g: MixedGraph, seps: SepsetMap) -> None:
    """Close ``g`` in place under R1-R4 and R8-R10."""
    while True:
        changed = _rule1(g) | _rule2(g) | _rule3(g)
        while _rule4(g, seps):
            changed = True
        changed |= _rule8(g) | _rule9(g) | _rule10(g)
        if not changed:
            return


def fci(
    data: Union[CorrelationMatrix, CiTester],
    opts: Optional[FciOptions] = None,
) -> tuple[MixedGraph, SepsetMap, RunReport]:
    """Fast causal inference with the possible-d-sep pruning stage.

    Returns the PAG (circle marks where undetermined), the final separating
    sets and the run report.
    """
    opts = opts or FciOptions()
    bk = opts.bk
    tester = _as_tester(data, opts)
    cap = opts.cond_cap(tester.p)
    report = RunReport(config={"algorithm": "fci", **tester.describe(), "max_cond_size": cap})
    skel, seps = pc_skeleton(tester, opts, bk, report)
    g = _circles(skel)
    _orient_colliders(g, seps, None)
    _pds_stage(g, seps, tester, cap, bk, report, opts.record)
    g = _circles(g)
    _orient_colliders(g, seps, report)
    _apply_knowledge(g, bk)
    pag_rules(g, seps)
    return g, seps, report


def fci_equals_pc_check(
    data: Union[CorrelationMatrix, CiTester],
    opts: Optional[FciOptions] = None,
    pc_opts: Optional[PcOptions] = None,
) -> bool:
    """Whether FCI keeps exactly the adjacencies of the PC skeleton.

    ``pc_opts`` may be given to make the comparison explicit; it must use the
    same test configuration as ``opts``.
    """
    opts = opts or FciOptions()
    if pc_opts is not None and pc_opts.test != opts.test:
        raise ValueError("FCI and PC must be compared under the same test configuration")
    tester = _as_tester(data, opts)
    skel, _ = pc_skeleton(tester, opts, opts.bk)
    pag, _, _ = fci(tester, opts)
    return skel.adjacency_pairs() == pag.adjacency_pairs()
