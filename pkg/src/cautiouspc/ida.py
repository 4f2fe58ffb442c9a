"""Local IDA: multisets of back-door adjusted effect estimates from a CPDAG."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .graph import GraphError, Mark, MixedGraph


@dataclass
class EffectMultiset:
    """Effect estimates of ``x`` on ``y``, one per locally valid parent set."""

    estimates: list = field(default_factory=list)
    parent_sets: list = field(default_factory=list)
    skipped: list = field(default_factory=list)

    def add(self, value: float, parents) -> None:
        self.estimates.append(float(value))
        self.parent_sets.append(tuple(sorted(parents)))

    @property
    def min(self) -> float:
        return min(self.estimates) if self.estimates else math.nan

    @property
    def max(self) -> float:
        return max(self.estimates) if self.estimates else math.nan

    @property
    def width(self) -> float:
        return self.max - self.min

    def __len__(self) -> int:
        return len(self.estimates)


def covariance_of(data) -> np.ndarray:
    """Sample covariance over complete rows."""
    x = np.asarray(data, dtype=float)
    x = x[~np.isnan(x).any(axis=1)]
    return np.cov(x, rowvar=False)


def regression_coefficient(cov: np.ndarray, y: int, x: int, adjust: Sequence[int]) -> float:
    """OLS coefficient of ``x`` when regressing ``y`` on ``x`` and ``adjust``."""
    z = [x, *adjust]
    szz = cov[np.ix_(z, z)]
    if np.linalg.cond(szz) > 1e12:
        raise np.linalg.LinAlgError(f"singular design for regressors {z}")
    return float(np.linalg.solve(szz, cov[z, y])[0])


def locally_valid_parent_sets(g: MixedGraph, x: int) -> list[tuple[int, ...]]:
    """Subsets ``T`` of the undirected neighbours of ``x`` that add no new collider at ``x``.

    ``T`` qualifies when it is a clique and each member is adjacent to every
    existing parent of ``x``. The returned tuples are ``Pa(x) + T`` sorted.
    """
    pa = g.parents(x)
    sib = g.neighbors(x)
    out = []
    for r in range(len(sib) + 1):
        for t in itertools.combinations(sib, r):
            if any(not g.adjacent(a, b) for a, b in itertools.combinations(t, 2)):
                continue
            if any(not g.adjacent(a, q) for a in t for q in pa):
                continue
            out.append(tuple(sorted(pa + list(t))))
    return out


def ida_multiset(g: MixedGraph, data, x: int, y: int, cov=None) -> EffectMultiset:
    """Local IDA estimates of the total effect of ``x`` on ``y``.

    ``cov`` may be passed instead of recomputing the covariance of ``data``.
    A parent set containing ``y`` contributes an estimate of 0; a singular
    regression is skipped and listed in ``skipped``.
    """
    if x == y:
        raise GraphError("x and y must differ")
    if (g.marks == Mark.CIRCLE).any():
        raise GraphError("IDA needs a DAG or CPDAG")
    cov = covariance_of(data) if cov is None else cov
    out = EffectMultiset()
    for ps in locally_valid_parent_sets(g, x):
        if y in ps:
            out.add(0.0, ps)
            continue
        try:
            out.add(regression_coefficient(cov, y, x, ps), ps)
        except np.linalg.LinAlgError:
            out.skipped.append(ps)
    return out


def oracle_effect(truth: MixedGraph, data, x: int, y: int, cov=None) -> float:
    """Coefficient of ``x`` regressing ``y`` on ``x`` and its true parents."""
    if x == y:
        raise GraphError("x and y must differ")
    cov = covariance_of(data) if cov is None else cov
    pa = truth.parents(x)
    if y in pa:
        return 0.0
    return regression_coefficient(cov, y, x, pa)


def interval_sq_error(lo: float, hi: float, oracle: float) -> float:
    if lo < oracle < hi:
        return 0.0
    return min((oracle - lo) ** 2, (oracle - hi) ** 2)


def int_mse(multisets: Sequence[EffectMultiset], oracles: Sequence[float]) -> float:
    """Mean interval squared error: zero inside ``(min, max)``, else distance to the nearer end."""
    if len(multisets) != len(oracles):
        raise ValueError("multisets and oracles differ in length")
    return float(np.mean([interval_sq_error(m.min, m.max, o) for m, o in zip(multisets, oracles)]))


def mean_width(multisets: Sequence[EffectMultiset]) -> float:
    return float(np.mean([m.width for m in multisets]))
