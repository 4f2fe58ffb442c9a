"""Correlation machinery and Gaussian conditional-independence tests.

Two decision rules share the same Fisher-z machinery:

* the classical test removes an edge when the null of zero partial
  correlation is *not* rejected;
* the equivalence test removes an edge only when the null ``|rho| >= delta``
  is rejected by two one-sided tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy.special import ndtr, ndtri

from .graph import MixedGraph, d_separated

CLAMP = 1.0 - 1e-12
MAX_CACHE_P = 12
_SINGULAR = 2.0  # cache sentinel, outside [-1, 1]


class CiTestError(ValueError):
    """A test could not be carried out (singular system, no degrees of freedom)."""


class SingularMatrixError(CiTestError):
    def __init__(self, message: str, condition: float):
        super().__init__(f"{message} (condition estimate {condition:.3g})")
        self.condition = condition


# ---------------------------------------------------------------------------
# Correlation matrices


class CorrelationMatrix:
    """Sample correlations with pairwise effective sample sizes.

    Parameters
    ----------
    r : ndarray of shape (p, p)
        Symmetric correlation matrix with unit diagonal.
    n_eff : ndarray of shape (p, p)
        Number of pairwise-complete rows behind each entry.
    n_nominal : int
        Number of rows in the source data.
    """

    def __init__(self, r, n_eff, n_nominal: int):
        r = np.array(r, dtype=float)
        n_eff = np.array(n_eff, dtype=np.int64)
        if r.ndim != 2 or r.shape[0] != r.shape[1] or r.shape != n_eff.shape:
            raise ValueError("r and n_eff must be square matrices of equal shape")
        if not np.allclose(r, r.T, atol=1e-12) or not np.array_equal(n_eff, n_eff.T):
            raise ValueError("r and n_eff must be symmetric")
        if np.any(np.abs(r) > 1 + 1e-12):
            raise ValueError("correlations must lie in [-1, 1]")
        if np.any(n_eff > n_nominal):
            raise ValueError("effective sample sizes cannot exceed n_nominal")
        r = np.clip((r + r.T) / 2, -1.0, 1.0)
        np.fill_diagonal(r, 1.0)
        self.r = r
        self.n_eff = n_eff
        self.n_nominal = int(n_nominal)
        self.r.setflags(write=False)
        self.n_eff.setflags(write=False)
        self.uniform_n = bool(np.all(n_eff == n_eff[0, 0]))
        self._cache = None

    @classmethod
    def from_correlation(cls, r, n: int) -> "CorrelationMatrix":
        r = np.asarray(r, dtype=float)
        return cls(r, np.full(r.shape, n, dtype=np.int64), n)

    @property
    def p(self) -> int:
        return self.r.shape[0]

    def effective_n(self, vertices: Sequence[int]) -> int:
        v = np.asarray(vertices)
        return int(self.n_eff[np.ix_(v, v)].min())

    def _rho_cache(self) -> Optional[np.ndarray]:
        if self.p > MAX_CACHE_P:
            return None
        if self._cache is None:
            self._cache = np.full((self.p, self.p, 1 << self.p), np.nan)
        return self._cache


def correlation_from_data(data, min_pairs: int = 5) -> CorrelationMatrix:
    """Pearson correlations over pairwise-complete rows (``nan`` marks missing)."""
    x = np.asarray(data, dtype=float)
    if x.ndim != 2:
        raise ValueError("data must be a 2-d array")
    n, p = x.shape
    obs = ~np.isnan(x)
    if obs.all():
        sd = x.std(axis=0)
        if np.any(sd == 0):
            raise ValueError(f"constant column(s): {np.flatnonzero(sd == 0).tolist()}")
        if n < min_pairs:
            raise ValueError(f"need at least {min_pairs} rows, got {n}")
        r = np.corrcoef(x, rowvar=False).reshape(p, p)
        return CorrelationMatrix(np.clip(r, -1, 1), np.full((p, p), n), n)
    r = np.eye(p)
    counts = obs.T.astype(np.int64) @ obs.astype(np.int64)
    for a in range(p):
        col = x[obs[:, a], a]
        if col.size >= 2 and np.ptp(col) == 0:
            raise ValueError(f"constant column: {a}")
        for b in range(a + 1, p):
            m = obs[:, a] & obs[:, b]
            if m.sum() < min_pairs:
                raise ValueError(f"columns {a} and {b} share only {int(m.sum())} complete rows")
            xa, xb = x[m, a] - x[m, a].mean(), x[m, b] - x[m, b].mean()
            den = math.sqrt(float(xa @ xa) * float(xb @ xb))
            if den == 0:
                raise ValueError(f"zero variance on the complete rows of columns {a} and {b}")
            r[a, b] = r[b, a] = float(np.clip((xa @ xb) / den, -1, 1))
    return CorrelationMatrix(r, counts, n)


def _batch_partial(r: np.ndarray, i: int, j: int, combos: np.ndarray):
    """Partial correlations of (i, j) given each row of ``combos``.

    Returns ``(rho, ok)``; ``ok`` is False where the conditioning submatrix is
    numerically singular.
    """
    m, s = combos.shape
    if s == 0:
        return np.full(m, r[i, j]), np.ones(m, dtype=bool)
    idx = np.empty((m, s + 2), dtype=np.intp)
    idx[:, 0] = i
    idx[:, 1] = j
    idx[:, 2:] = combos
    sub = r[idx[:, :, None], idx[:, None, :]]
    try:
        k = np.linalg.inv(sub)
        ok = np.ones(m, dtype=bool)
    except np.linalg.LinAlgError:
        k = np.empty_like(sub)
        ok = np.ones(m, dtype=bool)
        for t in range(m):
            try:
                k[t] = np.linalg.inv(sub[t])
            except np.linalg.LinAlgError:
                k[t] = np.nan
                ok[t] = False
    with np.errstate(invalid="ignore", divide="ignore"):
        cond = np.abs(sub).sum(axis=1).max(axis=1) * np.abs(k).sum(axis=1).max(axis=1)
        rho = -k[:, 0, 1] / np.sqrt(k[:, 0, 0] * k[:, 1, 1])
    ok &= np.isfinite(cond) & (cond < 1e12) & np.isfinite(rho) & (np.abs(rho) <= 1 + 1e-9)
    rho = np.where(ok, np.clip(rho, -1, 1), np.nan)
    return rho, ok


def partial_correlation_table(r: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """All partial correlations of a small correlation matrix.

    Returns ``t`` of shape ``(p, p, 2**p)`` with ``t[i, j, mask]`` the partial
    correlation of ``i`` and ``j`` given the vertices in ``mask``. Built level
    by level from the one-variable recursion; entries whose mask contains
    ``i`` or ``j``, or whose recursion hits a near-zero residual variance,
    are ``nan``.
    """
    r = np.asarray(r, dtype=float)
    p = r.shape[0]
    full = np.empty((1 << p, p, p))
    full[0] = r
    masks = np.arange(1 << p)
    pop = np.array([bin(m).count("1") for m in masks])
    top = np.zeros(1 << p, dtype=np.intp)
    top[1:] = np.floor(np.log2(masks[1:])).astype(np.intp)
    with np.errstate(invalid="ignore", divide="ignore"):
        for level in range(1, p + 1):
            ms = masks[pop == level]
            k = top[ms]
            prev = full[ms ^ (1 << k)]
            col = prev[np.arange(len(ms)), :, k]
            resid = 1.0 - col ** 2
            resid = np.where(resid > tol, resid, np.nan)
            full[ms] = (prev - col[:, :, None] * col[:, None, :]) / np.sqrt(resid[:, :, None] * resid[:, None, :])
    table = np.transpose(full, (1, 2, 0)).copy()
    vert = np.arange(p)
    inside = (masks[None, :] >> vert[:, None]) & 1 == 1
    table[inside[:, None, :] | inside[None, :, :]] = np.nan
    table[vert, vert, :] = np.nan
    return np.clip(table, -1, 1)


def removal_table(table: np.ndarray, n: int, config: "CiTestConfig") -> np.ndarray:
    """Boolean ``remove[i, j, mask]`` for every test in a partial-correlation table.

    Untestable entries (``nan`` or exhausted degrees of freedom) never remove.
    """
    p = table.shape[0]
    pop = np.array([bin(m).count("1") for m in range(1 << p)])
    m = n - pop - 3
    good = ~np.isnan(table) & (m > 0)
    rho = np.where(good, table, 0.0)
    mm = np.where(m > 0, m, 1)
    if config.kind == CLASSICAL:
        _, remove = classical_decision(rho, mm, config.alpha)
    else:
        _, remove = equivalence_decision(rho, mm, config.alpha, config.resolve_delta(n))
    return remove & good


def partial_correlation(c: CorrelationMatrix, i: int, j: int, s: Sequence[int] = ()) -> float:
    """Partial correlation of ``i`` and ``j`` given ``s`` from the inverse of
    the correlation submatrix on ``{i, j} | s``."""
    s = list(s)
    if i == j or i in s or j in s:
        raise ValueError("i, j must be distinct and outside the conditioning set")
    for v in (i, j, *s):
        if not 0 <= v < c.p:
            raise IndexError(f"vertex {v} out of range")
    if not s:
        return float(c.r[i, j])
    idx = [i, j, *s]
    sub = c.r[np.ix_(idx, idx)]
    cond = float(np.linalg.cond(sub))
    if not np.isfinite(cond) or cond > 1e12:
        raise SingularMatrixError(f"singular correlation submatrix on {idx}", cond)
    k = np.linalg.inv(sub)
    return float(np.clip(-k[0, 1] / math.sqrt(k[0, 0] * k[1, 1]), -1, 1))


def fisher_z(rho):
    """Fisher's variance-stabilising transform ``atanh(rho)``."""
    arr = np.asarray(rho, dtype=float)
    if np.any(np.abs(arr) >= 1):
        raise ValueError("fisher_z is undefined for |rho| >= 1")
    z = np.arctanh(arr)
    return float(z) if np.ndim(z) == 0 else z


# ---------------------------------------------------------------------------
# Test configuration and single-test entry points


CLASSICAL = "classical"
EQUIVALENCE = "equivalence"


@dataclass(frozen=True)
class CiTestConfig:
    """Which test to run and at what level.

    For the equivalence test give either an absolute ``delta`` or a
    ``delta_scale`` C so that ``delta = C / sqrt(n)``.
    """

    kind: str = EQUIVALENCE
    alpha: float = 0.05
    delta: Optional[float] = None
    delta_scale: Optional[float] = None

    def __post_init__(self):
        if self.kind not in (CLASSICAL, EQUIVALENCE):
            raise ValueError(f"unknown test kind {self.kind!r}")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must be in (0, 1)")
        if self.kind == EQUIVALENCE:
            if (self.delta is None) == (self.delta_scale is None):
                raise ValueError("equivalence test needs exactly one of delta or delta_scale")
            if self.delta is not None and not 0 < self.delta < 1:
                raise ValueError("delta must be in (0, 1)")
            if self.delta_scale is not None and self.delta_scale <= 0:
                raise ValueError("delta_scale must be positive")

    def resolve_delta(self, n: int) -> Optional[float]:
        if self.kind != EQUIVALENCE:
            return None
        d = self.delta if self.delta is not None else self.delta_scale / math.sqrt(n)
        if not 0 < d < 1:
            raise ValueError(f"resolved delta {d} outside (0, 1)")
        return d

    def describe(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if v is not None}


class TestDecision(NamedTuple):
    remove_edge: bool
    statistic: float
    rho_hat: float
    effective_n: int
    error: Optional[str] = None


def _dof(n: int, s: int) -> int:
    m = n - s - 3
    if m <= 0:
        raise CiTestError(f"degrees of freedom exhausted (n={n}, |S|={s})")
    return m


def _clamp(rho):
    return np.clip(rho, -CLAMP, CLAMP)


def classical_decision(rho, m, alpha):
    """Vectorised classical rule; returns ``(statistic, remove)``."""
    stat = np.sqrt(m) * np.abs(np.arctanh(_clamp(rho)))
    pval = 2.0 * ndtr(-stat)
    return stat, pval > alpha


def equivalence_decision(rho, m, alpha, delta):
    """Vectorised two-one-sided rule; returns ``(statistic, remove)``.

    The reported statistic is ``sqrt(m) * (|z(rho)| - z(delta))``, the binding
    one-sided statistic, compared against ``Phi^-1(alpha)``.
    """
    z = np.arctanh(_clamp(rho))
    zd = math.atanh(delta)
    rt = np.sqrt(m)
    lower = ndtri(alpha)
    upper = ndtri(1.0 - alpha)
    remove = (rt * (z - zd) <= lower) & (rt * (z + zd) >= upper)
    return rt * (np.abs(z) - zd), remove


def ci_test_classical(c: CorrelationMatrix, i: int, j: int, s: Sequence[int], alpha: float) -> TestDecision:
    rho = partial_correlation(c, i, j, s)
    n = c.effective_n([i, j, *s])
    m = _dof(n, len(s))
    stat, remove = classical_decision(rho, m, alpha)
    return TestDecision(bool(remove), float(stat), rho, n)


def ci_test_equivalence(
    c: CorrelationMatrix, i: int, j: int, s: Sequence[int], alpha: float, delta: float
) -> TestDecision:
    if not 0 < delta < 1:
        raise CiTestError("delta must be in (0, 1)")
    rho = partial_correlation(c, i, j, s)
    n = c.effective_n([i, j, *s])
    m = _dof(n, len(s))
    stat, remove = equivalence_decision(rho, m, alpha, delta)
    return TestDecision(bool(remove), float(stat), rho, n)


# ---------------------------------------------------------------------------
# Testers used by the structure-learning loops


class DecisionBatch(NamedTuple):
    remove: np.ndarray
    statistic: np.ndarray
    rho: np.ndarray
    n: np.ndarray
    ok: np.ndarray


def _masks_of(combos: np.ndarray) -> np.ndarray:
    if combos.shape[1] == 0:
        return np.zeros(combos.shape[0], dtype=np.int64)
    return np.bitwise_or.reduce(np.left_shift(1, combos.astype(np.int64)), axis=1)


class CiTester:
    """Base class: a conditional-independence decision procedure on ``p`` variables."""

    p: int

    def decide(self, i: int, j: int, s: Sequence[int]) -> TestDecision:
        raise NotImplementedError

    def decide_many(self, i: int, j: int, combos: np.ndarray) -> DecisionBatch:
        out = [self.decide(i, j, list(row)) for row in combos]
        return DecisionBatch(
            np.array([d.remove_edge for d in out], dtype=bool),
            np.array([d.statistic for d in out], dtype=float),
            np.array([d.rho_hat for d in out], dtype=float),
            np.array([d.effective_n for d in out], dtype=np.int64),
            np.array([d.error is None for d in out], dtype=bool),
        )

    def describe(self) -> dict:
        return {}


class GaussianTester(CiTester):
    """Partial-correlation tests on a :class:`CorrelationMatrix`.

    Numerical failures never remove an edge: the decision is reported with
    ``remove_edge=False`` and an error message.
    """

    def __init__(self, corr: CorrelationMatrix, config: CiTestConfig):
        self.corr = corr
        self.config = config
        self.p = corr.p
        self.delta = config.resolve_delta(corr.n_nominal)

    def describe(self) -> dict:
        d = self.config.describe()
        if self.delta is not None:
            d["delta_resolved"] = self.delta
        return d

    def _decide_arrays(self, rho, n, s):
        m = n - s - 3
        good = m > 0
        mm = np.where(good, m, 1)
        if self.config.kind == CLASSICAL:
            stat, remove = classical_decision(rho, mm, self.config.alpha)
        else:
            stat, remove = equivalence_decision(rho, mm, self.config.alpha, self.delta)
        return np.where(good, stat, np.nan), remove & good, good

    def decide(self, i: int, j: int, s: Sequence[int]) -> TestDecision:
        b = self.decide_many(i, j, np.asarray([list(s)], dtype=np.intp).reshape(1, len(s)))
        err = None
        if not b.ok[0]:
            err = "singular conditioning submatrix" if np.isnan(b.rho[0]) else "degrees of freedom exhausted"
        return TestDecision(bool(b.remove[0]), float(b.statistic[0]), float(b.rho[0]), int(b.n[0]), err)

    def decide_many(self, i: int, j: int, combos: np.ndarray) -> DecisionBatch:
        combos = np.asarray(combos, dtype=np.intp)
        s = combos.shape[1]
        cache = self.corr._rho_cache()
        if cache is not None:
            masks = _masks_of(combos)
            rho = cache[i, j, masks]
            miss = np.isnan(rho)
            if miss.any():
                new, ok = _batch_partial(self.corr.r, i, j, combos[miss])
                new = np.where(ok, new, _SINGULAR)
                cache[i, j, masks[miss]] = new
                cache[j, i, masks[miss]] = new
                rho[miss] = new
            ok = rho != _SINGULAR
            rho = np.where(ok, rho, np.nan)
        else:
            rho, ok = _batch_partial(self.corr.r, i, j, combos)
        if self.corr.uniform_n:
            n = np.full(len(combos), self.corr.n_eff[0, 0], dtype=np.int64)
        else:
            idx = np.concatenate([np.tile([i, j], (len(combos), 1)), combos], axis=1)
            n = self.corr.n_eff[idx[:, :, None], idx[:, None, :]].min(axis=(1, 2))
        stat, remove, good = self._decide_arrays(np.where(ok, rho, 0.0), n, s)
        ok = ok & good
        return DecisionBatch(remove & ok, np.where(ok, stat, np.nan), rho, n, ok)


class DSepOracle(CiTester):
    """Perfect test answering d-separation queries in a known DAG.

    ``observed`` maps test indices to DAG vertices, so latent vertices can be
    marginalised out.
    """

    def __init__(self, dag: MixedGraph, observed: Optional[Sequence[int]] = None):
        self.dag = dag
        self.observed = list(range(dag.p)) if observed is None else list(observed)
        self.p = len(self.observed)
        self._memo: dict = {}

    def decide(self, i: int, j: int, s: Sequence[int]) -> TestDecision:
        key = (min(i, j), max(i, j), frozenset(s))
        sep = self._memo.get(key)
        if sep is None:
            o = self.observed
            sep = d_separated(self.dag, o[i], o[j], [o[v] for v in s])
            self._memo[key] = sep
        return TestDecision(sep, 0.0 if sep else math.inf, 0.0 if sep else float("nan"), 0)

    def describe(self) -> dict:
        return {"kind": "d-separation oracle"}


# ---------------------------------------------------------------------------
# Baseline residualisation


def residualize(data, targets: Sequence[int], baseline: Sequence[int]) -> np.ndarray:
    """Residuals of each target column on the baseline columns plus intercept.

    Rows with a missing baseline value come back as ``nan``; a missing target
    value stays missing.
    """
    x = np.asarray(data, dtype=float)
    targets, baseline = list(targets), list(baseline)
    base = x[:, baseline]
    base_ok = ~np.isnan(base).any(axis=1)
    design = np.column_stack([np.ones(x.shape[0]), base])
    out = np.full((x.shape[0], len(targets)), np.nan)
    for k, t in enumerate(targets):
        y = x[:, t]
        rows = base_ok & ~np.isnan(y)
        d = design[rows]
        if np.linalg.matrix_rank(d) < d.shape[1]:
            raise np.linalg.LinAlgError(f"baseline design is rank deficient for target column {t}")
        coef, *_ = np.linalg.lstsq(d, y[rows], rcond=None)
        out[rows, k] = y[rows] - d @ coef
    return out
