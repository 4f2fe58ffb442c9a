"""Simulation protocols: recovery sweep, IDA comparison and tolerance selection.

Each protocol returns per-trial rows and a summary; all randomness derives
from one integer seed, and output order does not depend on ``threads``.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .citest import CLASSICAL, EQUIVALENCE, CiTestConfig, correlation_from_data
from .delta import DeltaGrid, StabilityConfig, select_delta
from .graph import MixedGraph
from .ida import covariance_of, ida_multiset, int_mse, mean_width, oracle_effect
from .meek import BackgroundKnowledge
from .metrics import evaluate_skeleton
from .pc import PcOptions, pc, pc_skeleton
from .sim import SimConfig, simulate

SWEEP_NS = (200, 400, 800, 1600, 3400, 6800)
TABLE1_TIERS = ([0, 1], [2, 3, 4, 5, 6], [7, 8], [9])
TABLE1_EXPOSURE, TABLE1_OUTCOME = 4, 9


def trial_seed(seed: int, *key: int) -> int:
    """Independent 32-bit seed for one trial, derived from the run seed."""
    return int(np.random.SeedSequence([seed, *key]).generate_state(1)[0])


def run_map(fn: Callable, items: Sequence, threads: Optional[int] = 1) -> list:
    """``map`` over worker processes, preserving input order."""
    items = list(items)
    threads = (os.cpu_count() or 1) if threads is None else threads
    if threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items, chunksize=max(1, len(items) // (4 * threads))))


# Recovery sweep


def _sweep_trial(args) -> list:
    n, trial, seed, p, d, scales, alphas, eq_alpha = args
    inst = simulate(SimConfig(p=p, expected_degree=d, n=n, seed=trial_seed(seed, n, trial)))
    corr = correlation_from_data(inst.data)
    rows = []
    tests = [("e-PC", c, CiTestConfig(EQUIVALENCE, eq_alpha, delta_scale=c)) for c in scales]
    tests += [("PC", a, CiTestConfig(CLASSICAL, a)) for a in alphas]
    for method, param, cfg in tests:
        g, _ = pc_skeleton(corr, PcOptions(test=cfg, record=False))
        e = evaluate_skeleton(g, inst.dag)
        rows.append((method, param, n, trial, e.recall, e.precision, e.shd, g.n_edges, inst.dag.n_edges))
    return rows


SWEEP_HEADER = ("method", "param", "n", "trial", "recall", "precision", "shd", "n_edges", "true_edges")


def fig2_sweep(
    trials: int = 50,
    ns: Iterable[int] = SWEEP_NS,
    scales: Sequence[float] = (1.66,),
    alphas: Sequence[float] = (0.20,),
    eq_alpha: float = 0.05,
    p: int = 10,
    degree: float = 7.0,
    seed: int = 0,
    threads: Optional[int] = 1,
) -> tuple[list, list]:
    """Skeleton recall and precision of e-PC and PC over a grid of sample sizes.

    Returns ``(rows, summary)``; summary rows are
    ``(method, param, n, mean_recall, mean_precision, mean_edges)``.
    """
    jobs = [(n, t, seed, p, degree, tuple(scales), tuple(alphas), eq_alpha) for n in ns for t in range(trials)]
    rows = [r for chunk in run_map(_sweep_trial, jobs, threads) for r in chunk]
    summary = []
    for key in dict.fromkeys((r[0], r[1], r[2]) for r in rows):
        sel = [r for r in rows if (r[0], r[1], r[2]) == key]
        summary.append((*key, float(np.mean([r[4] for r in sel])), float(np.nanmean([r[5] for r in sel])),
                        float(np.mean([r[7] for r in sel]))))
    return rows, summary


SWEEP_SUMMARY_HEADER = ("method", "param", "n", "mean_recall", "mean_precision", "mean_edges")


# IDA comparison


def _ida_trial(args) -> list:
    n, trial, seed, c, eq_alpha, pc_alpha = args
    inst = simulate(SimConfig(p=10, expected_degree=7.0, n=n, seed=trial_seed(seed, n, trial)))
    corr = correlation_from_data(inst.data)
    cov = covariance_of(inst.data)
    bk = BackgroundKnowledge(TABLE1_TIERS)
    x, y = TABLE1_EXPOSURE, TABLE1_OUTCOME
    oracle = oracle_effect(inst.dag, None, x, y, cov=cov)
    rows = []
    for method, cfg in (("e-PC", CiTestConfig(EQUIVALENCE, eq_alpha, delta_scale=c)),
                        ("PC", CiTestConfig(CLASSICAL, pc_alpha))):
        g, _, _ = pc(corr, PcOptions(test=cfg, record=False), bk)
        ms = ida_multiset(g, None, x, y, cov=cov)
        rows.append((method, n, trial, ms.min, ms.max, len(ms), oracle, ms))
    return rows


IDA_HEADER = ("method", "n", "trial", "beta_min", "beta_max", "n_estimates", "beta_oracle")
IDA_SUMMARY_HEADER = ("method", "n", "int_mse", "width")


def table1_ida(
    trials: int = 200,
    ns: Iterable[int] = (500, 5000),
    c: float = 1.68,
    eq_alpha: float = 0.05,
    pc_alpha: float = 0.20,
    seed: int = 0,
    threads: Optional[int] = 1,
) -> tuple[list, list]:
    """Int-MSE and mean interval width of IDA after tiered e-PC and PC.

    The exposure is vertex 4 and the outcome vertex 9 of a ten-vertex graph
    whose vertex order is its causal order.
    """
    jobs = [(n, t, seed, c, eq_alpha, pc_alpha) for n in ns for t in range(trials)]
    raw = [r for chunk in run_map(_ida_trial, jobs, threads) for r in chunk]
    summary = []
    for key in dict.fromkeys((r[0], r[1]) for r in raw):
        sel = [r for r in raw if (r[0], r[1]) == key and len(r[7])]
        ms = [r[7] for r in sel]
        summary.append((*key, int_mse(ms, [r[6] for r in sel]), mean_width(ms)))
    return [r[:7] for r in raw], summary


# Tolerance selection


def _delta_trial(args) -> tuple:
    n, sim, seed, c_lo, c_hi, k, reps, eq_alpha = args
    inst = simulate(SimConfig(p=10, expected_degree=7.0, n=n, seed=trial_seed(seed, n, sim)))
    grid = DeltaGrid.scaled(c_lo, c_hi, k, n)
    opts = PcOptions(test=CiTestConfig(EQUIVALENCE, eq_alpha, delta=grid.values[0]), record=False)
    sel = select_delta(inst.data, grid, StabilityConfig(reps=reps, seed=trial_seed(seed, n, sim, 1)), opts)
    cfg = CiTestConfig(EQUIVALENCE, eq_alpha, delta=sel.selected)
    g, _ = pc_skeleton(correlation_from_data(inst.data), PcOptions(test=cfg, record=False))
    e = evaluate_skeleton(g, inst.dag)
    step = grid.values.index(sel.selected)
    return (n, sim, sel.selected, step, int(sel.no_drop), e.recall, e.precision, g.n_edges, inst.dag.n_edges)


DELTA_HEADER = ("n", "sim", "selected_delta", "grid_index", "no_drop", "recall", "precision", "n_edges", "true_edges")
DELTA_SUMMARY_HEADER = ("n", "selected_delta", "count")


def sec6_delta(
    sims: int = 50,
    ns: Iterable[int] = (500, 5000),
    c_lo: float = 1.5,
    c_hi: float = 2.5,
    k: int = 10,
    reps: int = 50,
    eq_alpha: float = 0.05,
    seed: int = 0,
    threads: Optional[int] = 1,
) -> tuple[list, list]:
    """Stability-based tolerance selection on repeated simulations.

    Summary rows form a histogram of the selected tolerance per sample size.
    """
    jobs = [(n, s, seed, c_lo, c_hi, k, reps, eq_alpha) for n in ns for s in range(sims)]
    rows = run_map(_delta_trial, jobs, threads)
    summary = []
    for n in dict.fromkeys(r[0] for r in rows):
        vals = [r[2] for r in rows if r[0] == n]
        for v in sorted(set(vals)):
            summary.append((n, v, vals.count(v)))
    return rows, summary


def grid_step(n: int, c_lo: float = 1.5, c_hi: float = 2.5, k: int = 10) -> float:
    return (c_hi - c_lo) / (k - 1) / math.sqrt(n)


__all__ = [
    "fig2_sweep", "table1_ida", "sec6_delta", "run_map", "trial_seed", "grid_step",
    "SWEEP_HEADER", "SWEEP_SUMMARY_HEADER", "IDA_HEADER", "IDA_SUMMARY_HEADER",
    "DELTA_HEADER", "DELTA_SUMMARY_HEADER", "MixedGraph",
]
