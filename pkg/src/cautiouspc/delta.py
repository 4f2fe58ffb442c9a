"""Choosing the equivalence tolerance by subsampled skeleton stability."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .citest import EQUIVALENCE, CiTestConfig, correlation_from_data, partial_correlation_table, removal_table
from .pc import PcOptions, pc_skeleton, skeleton_from_removals

# Above this many variables the full partial-correlation table is too large
# and skeletons are computed with the regular search instead.
TABLE_MAX_P = 12


@dataclass(frozen=True)
class DeltaGrid:
    values: tuple

    def __post_init__(self):
        v = tuple(float(x) for x in self.values)
        object.__setattr__(self, "values", v)
        if len(v) < 2:
            raise ValueError("a delta grid needs at least two values")
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("delta grid must be strictly increasing")
        if not all(0 < x < 1 for x in v):
            raise ValueError("delta grid values must lie in (0, 1)")

    @classmethod
    def scaled(cls, c_lo: float, c_hi: float, k: int, n: int) -> "DeltaGrid":
        """``k`` equally spaced values from ``c_lo / sqrt(n)`` to ``c_hi / sqrt(n)``."""
        return cls(tuple(np.linspace(c_lo, c_hi, k) / math.sqrt(n)))

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class StabilityConfig:
    reps: int = 50
    subsample_fraction: float = 0.9
    threshold: float = 0.9
    seed: int = 0
    # keep C = delta * sqrt(n) fixed on subsamples, so each delta is applied
    # as delta * sqrt(n / m) on a subsample of m rows
    rescale_to_subsample: bool = True

    def __post_init__(self):
        if not 0 < self.subsample_fraction < 1:
            raise ValueError("subsample_fraction must be in (0, 1)")
        if self.reps < 10:
            raise ValueError("reps must be at least 10")
        if not 0 < self.threshold < 1:
            raise ValueError("threshold must be in (0, 1)")


class DeltaSelection(NamedTuple):
    selected: float
    trace: list
    no_drop: bool


def _equivalence_opts(opts: Optional[PcOptions]) -> PcOptions:
    opts = opts or PcOptions(test=CiTestConfig(EQUIVALENCE, 0.05, delta=0.5))
    if opts.test is None or opts.test.kind != EQUIVALENCE:
        raise ValueError("delta selection needs an equivalence test configuration")
    return opts


class _Subsamples:
    """Subsamples shared across all tolerance values, with skeletons cached per delta."""

    def __init__(self, data, cfg: StabilityConfig, opts: PcOptions):
        x = np.asarray(data, dtype=float)
        n = x.shape[0]
        m = int(math.floor(cfg.subsample_fraction * n))
        if m < 5:
            raise ValueError(f"subsample of size {m} is too small for any test")
        rng = np.random.default_rng(cfg.seed)
        self.opts = opts
        self.m = m
        self.scale = math.sqrt(n / m) if cfg.rescale_to_subsample else 1.0
        self.corrs = [correlation_from_data(x[rng.choice(n, size=m, replace=False)]) for _ in range(cfg.reps)]
        self.p = x.shape[1]
        use_table = self.p <= TABLE_MAX_P and opts.stable
        self.tables = [partial_correlation_table(c.r) if use_table and c.uniform_n else None for c in self.corrs]
        self._cache: dict = {}

    def skeletons(self, delta: float) -> list[np.ndarray]:
        if delta not in self._cache:
            applied = min(delta * self.scale, 1.0 - 1e-9)
            test = dataclasses.replace(self.opts.test, delta=applied, delta_scale=None)
            cap = self.opts.cond_cap(self.p)
            out = []
            for c, tab in zip(self.corrs, self.tables):
                if tab is not None:
                    out.append(skeleton_from_removals(removal_table(tab, c.n_nominal, test), cap))
                else:
                    g, _ = pc_skeleton(c, dataclasses.replace(self.opts, test=test, record=False))
                    out.append(g.marks != 0)
            self._cache[delta] = out
        return self._cache[delta]

    def frequency(self, delta_lo: float, delta_hi: float) -> float:
        lo, hi = self.skeletons(delta_lo), self.skeletons(delta_hi)
        return float(np.mean([not np.any(b & ~a) for a, b in zip(lo, hi)]))


def inclusion_frequency(data, delta_lo: float, delta_hi: float, cfg: StabilityConfig,
                        opts: Optional[PcOptions] = None) -> float:
    """Share of subsamples on which the skeleton at ``delta_hi`` is inside the one at ``delta_lo``.

    Both skeletons of a repetition are estimated on the same subsample.
    """
    if not delta_lo < delta_hi:
        raise ValueError("delta_lo must be smaller than delta_hi")
    return _Subsamples(data, cfg, _equivalence_opts(opts)).frequency(delta_lo, delta_hi)


def select_from_frequencies(grid: Sequence[float], freqs: Sequence[float], threshold: float):
    """Apply the stopping rule to precomputed adjacent-pair frequencies.

    Returns ``(selected, no_drop)``: the lower value of the first pair whose
    frequency is at or below ``threshold``, else the largest grid value.
    """
    for k, f in enumerate(freqs):
        if f <= threshold:
            return grid[k], False
    return grid[-1], True


def select_delta(data, grid: DeltaGrid, cfg: StabilityConfig, opts: Optional[PcOptions] = None) -> DeltaSelection:
    """Walk adjacent grid pairs from the smallest value and stop at the first stability drop.

    The trace lists ``((delta_lo, delta_hi), frequency)`` for every pair
    evaluated.
    """
    subs = _Subsamples(data, cfg, _equivalence_opts(opts))
    v = grid.values
    trace = []
    for lo, hi in zip(v, v[1:]):
        f = subs.frequency(lo, hi)
        trace.append(((lo, hi), f))
        if f <= cfg.threshold:
            return DeltaSelection(lo, trace, False)
    return DeltaSelection(v[-1], trace, True)
