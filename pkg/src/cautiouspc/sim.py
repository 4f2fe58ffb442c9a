"""Random DAGs and linear-Gaussian data for benchmarking."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .graph import GraphError, MixedGraph, is_acyclic, topological_order

SeedLike = Union[None, int, np.random.Generator, np.random.SeedSequence]


@dataclass(frozen=True)
class SimConfig:
    p: int = 10
    expected_degree: float = 7.0
    weight_range: tuple = (0.5, 1.0)
    n: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.p < 2:
            raise ValueError("p must be at least 2")
        if not 0 <= self.expected_degree <= self.p - 1:
            raise ValueError("expected_degree must lie in [0, p-1]")
        lo, hi = self.weight_range
        if not 0 < lo <= hi:
            raise ValueError("weight_range must satisfy 0 < lo <= hi")

    def streams(self) -> tuple[np.random.Generator, np.random.Generator, np.random.Generator]:
        """Independent generators for the graph, the weights and the noise."""
        ss = np.random.SeedSequence(self.seed).spawn(3)
        return tuple(np.random.default_rng(s) for s in ss)


def _rng(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def random_dag(cfg: SimConfig, rng: SeedLike = None) -> MixedGraph:
    """Erdos-Renyi DAG over the fixed order ``0 < 1 < ... < p-1``.

    Each forward pair gets an edge with probability ``d / (p - 1)``.
    """
    rng = cfg.streams()[0] if rng is None else _rng(rng)
    p = cfg.p
    prob = cfg.expected_degree / (p - 1)
    upper = np.triu(rng.random((p, p)) < prob, k=1)
    return MixedGraph.from_adjacency(upper)


def sample_weights_normalized(g: MixedGraph, weight_range=(0.5, 1.0), seed: SeedLike = None) -> np.ndarray:
    """Weight matrix ``W`` with ``W[k, j]`` the coefficient of ``X_k`` in ``X_j``.

    Magnitudes are uniform on ``[lo, hi]`` with a fair random sign; each
    column is then divided by ``sqrt(||W[:, j]||^2 + 1)``.
    """
    if not is_acyclic(g):
        raise GraphError("weights require an acyclic graph")
    rng = _rng(seed)
    lo, hi = weight_range
    adj = g.directed_adjacency().astype(bool)
    p = g.p
    mag = rng.uniform(lo, hi, size=(p, p))
    sign = np.where(rng.random((p, p)) < 0.5, -1.0, 1.0)
    w = np.where(adj, mag * sign, 0.0)
    return normalize_columns(w)


def normalize_columns(w: np.ndarray) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    return w / np.sqrt((w ** 2).sum(axis=0) + 1.0)


def simulate_linear_gaussian(g: MixedGraph, weights: np.ndarray, n: int, seed: SeedLike = None) -> np.ndarray:
    """``n`` draws from ``X_j = sum_k W[k, j] X_k + eps_j`` with standard normal noise."""
    weights = np.asarray(weights, dtype=float)
    adj = g.directed_adjacency().astype(bool)
    if np.any((weights != 0) & ~adj):
        raise GraphError("weights have nonzero entries off the graph's edges")
    order = topological_order(g)
    rng = _rng(seed)
    eps = rng.standard_normal((n, g.p))
    x = np.zeros((n, g.p))
    for j in order:
        pa = np.flatnonzero(adj[:, j])
        x[:, j] = eps[:, j] + (x[:, pa] @ weights[pa, j] if len(pa) else 0.0)
    return x


def implied_covariance(weights: np.ndarray) -> np.ndarray:
    """Covariance ``(I - W)^-T (I - W)^-1`` of the unit-noise linear SEM."""
    p = weights.shape[0]
    inv = np.linalg.inv(np.eye(p) - weights)
    return inv.T @ inv


@dataclass
class SimInstance:
    dag: MixedGraph
    weights: np.ndarray
    data: np.ndarray


def simulate(cfg: SimConfig, n: Optional[int] = None) -> SimInstance:
    """Graph, weights and data drawn from the three streams of ``cfg.seed``."""
    g_rng, w_rng, e_rng = cfg.streams()
    dag = random_dag(cfg, g_rng)
    w = sample_weights_normalized(dag, cfg.weight_range, w_rng)
    x = simulate_linear_gaussian(dag, w, cfg.n if n is None else n, e_rng)
    return SimInstance(dag, w, x)
