"""Graph-recovery metrics: adjacency precision/recall and SHD."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .graph import GraphError, MixedGraph, is_skeleton_subgraph


@dataclass
class EvalReport:
    tp: int
    fp: int
    tn: int
    fn: int
    precision: float
    recall: float
    shd: int
    is_supergraph: bool
    precision_undefined: bool = False
    recall_undefined: bool = False

    def as_row(self) -> dict:
        return asdict(self)


def evaluate_skeleton(estimate: MixedGraph, truth: MixedGraph) -> EvalReport:
    """Adjacency confusion counts over all unordered pairs.

    ``shd`` here counts adjacency disagreements only (``fp + fn``); use
    :func:`shd` for the mark-aware distance between two CPDAGs.
    """
    if estimate.p != truth.p:
        raise GraphError("vertex-count mismatch")
    iu = np.triu_indices(truth.p, k=1)
    est = (estimate.marks != 0)[iu]
    tru = (truth.marks != 0)[iu]
    tp = int(np.sum(est & tru))
    fp = int(np.sum(est & ~tru))
    fn = int(np.sum(~est & tru))
    tn = int(np.sum(~est & ~tru))
    precision = tp / (tp + fp) if tp + fp else math.nan
    recall = tp / (tp + fn) if tp + fn else math.nan
    return EvalReport(
        tp, fp, tn, fn, precision, recall, fp + fn,
        is_skeleton_subgraph(truth, estimate),
        precision_undefined=tp + fp == 0,
        recall_undefined=tp + fn == 0,
    )


def shd(estimate: MixedGraph, truth: MixedGraph) -> int:
    """Pairs whose edge status differs: presence mismatch or any mark mismatch counts 1."""
    if estimate.p != truth.p:
        raise GraphError("vertex-count mismatch")
    iu = np.triu_indices(truth.p, k=1)
    same = (estimate.marks[iu] == truth.marks[iu]) & (estimate.marks.T[iu] == truth.marks.T[iu])
    return int(np.sum(~same))
