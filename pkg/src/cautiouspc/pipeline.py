"""End-to-end learning from a data matrix, with optional baseline covariates."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .citest import CiTestConfig, correlation_from_data, residualize
from .fci import FciOptions, fci
from .graph import Kind, Mark, MixedGraph, SepsetMap
from .meek import BackgroundKnowledge
from .pc import STANDARD, PcOptions, RunReport, pc


@dataclass
class LearnResult:
    graph: MixedGraph
    sepsets: SepsetMap
    report: RunReport
    targets: list
    baseline: list


def learn(
    data,
    test: CiTestConfig,
    algo: str = "pc",
    names: Optional[Sequence[str]] = None,
    baseline: Sequence[int] = (),
    tiers: Sequence[Sequence[int]] = (),
    max_cond_size: Optional[int] = None,
    collider_mode: str = STANDARD,
) -> LearnResult:
    """Learn a CPDAG (``algo="pc"``) or PAG (``algo="fci"``) from raw data.

    Baseline columns are regressed out of every other column before any test
    runs, and come back in the output as parents of every other vertex. Tier
    and output indices refer to the full column set.
    """
    x = np.asarray(data, dtype=float)
    p = x.shape[1]
    baseline = sorted(set(int(b) for b in baseline))
    targets = [v for v in range(p) if v not in baseline]
    if len(targets) < 2:
        raise ValueError("need at least two non-baseline columns")
    work = residualize(x, targets, baseline) if baseline else x
    pos = {v: k for k, v in enumerate(targets)}
    sub_tiers = [[pos[v] for v in t if v in pos] for t in tiers]
    bk = BackgroundKnowledge([t for t in sub_tiers if t])
    corr = correlation_from_data(work)
    if algo == "pc":
        opts = PcOptions(test=test, max_cond_size=max_cond_size, collider_mode=collider_mode)
        g, seps, report = pc(corr, opts, bk)
    elif algo == "fci":
        opts = FciOptions(test=test, max_cond_size=max_cond_size, bk=bk)
        g, seps, report = fci(corr, opts)
    else:
        raise ValueError(f"unknown algorithm {algo!r}")

    full = MixedGraph(p, g.kind if g.kind != Kind.SKELETON else Kind.CPDAG, list(names) if names else None)
    idx = np.array(targets)
    full.marks[np.ix_(idx, idx)] = g.marks
    for b in baseline:
        for t in targets:
            full.add_edge(b, t, Mark.TAIL, Mark.ARROW)
    full_seps = SepsetMap()
    for (i, j), e in seps.items():
        full_seps.set(targets[i], targets[j], [targets[v] for v in e.sepset], e.by_knowledge)
    report.config["baseline"] = baseline
    return LearnResult(full, full_seps, report, targets, baseline)
