"""Link-prediction evaluation: AUC, average precision, cross-validation,
and ranked next-state candidates for a dialogue.

Evaluation always uses mean embeddings (Z = mu, no sampling), so results
are deterministic given trained parameters and a split.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .graph import EdgeSplit, NodeId, NodeKind, StateGraph, identity_features
from .vgae import TrainConfig, VgaeParams, decode_edge, encode, normalize_adjacency, train


@dataclass(frozen=True)
class ScoredEdge:
    """A candidate (Domain, SlotValue) pair with its predicted probability."""

    pair: tuple[NodeId, NodeId]
    score: float
    label: bool | None = None

    def __post_init__(self):
        if not (0.0 < self.score < 1.0):
            raise ValueError(f"score must lie in (0, 1), got {self.score}")


@dataclass(frozen=True)
class CvReport:
    fold_auc: tuple[float, ...]
    fold_ap: tuple[float, ...]
    mean_auc: float
    std_auc: float
    mean_ap: float
    std_ap: float


def _average_ranks(scores: np.ndarray) -> np.ndarray:
    """1-based ranks in ascending score order; ties get their average rank."""
    order = np.argsort(scores, kind="mergesort")
    ranks = np.empty(len(scores), dtype=np.float64)
    sorted_scores = scores[order]
    i = 0
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def auc(scores: Sequence[float], labels: Sequence[bool]) -> float:
    """Probability a random positive outranks a random negative, ties 0.5.

    Rank-based Mann-Whitney formulation; exactly equals brute-force
    pairwise counting because average ranks are half-integer exact.
    """
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels, dtype=bool)
    if s.shape != y.shape:
        raise ValueError("scores and labels must have equal length")
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("auc needs at least one positive and one negative label")
    ranks = _average_ranks(s)
    u = ranks[y].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def average_precision(scores: Sequence[float], labels: Sequence[bool]) -> float:
    """Mean precision at each positive's rank, descending score order.

    Ties are broken by stable input order; AP is not tie-invariant, so the
    policy is part of the contract.
    """
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels, dtype=bool)
    if s.shape != y.shape:
        raise ValueError("scores and labels must have equal length")
    if not y.any():
        raise ValueError("average_precision needs at least one positive label")
    order = np.argsort(-s, kind="stable")
    hits = 0
    total = 0.0
    for rank, idx in enumerate(order, start=1):
        if y[idx]:
            hits += 1
            total += hits / rank
    return total / hits


def mean_embeddings(params: VgaeParams, graph: StateGraph, adjacency: np.ndarray) -> np.ndarray:
    """Posterior means for every node under the given adjacency."""
    x = identity_features(graph)
    return encode(x, normalize_adjacency(adjacency), params)[0]


def evaluate_split(
    params: VgaeParams, graph: StateGraph, split: EdgeSplit
) -> dict[str, float]:
    """AUC and AP over the held-out test edges and their matched negatives.

    The encoder sees the full observed adjacency, matching the candidate
    ranking posture at deployment; the held-out edges were masked from the
    training loss only.  Slot-value nodes touch at most a handful of
    domains, so encoding the train-only graph would leave most held-out
    endpoints isolated and cap the measurable ranking quality near chance.
    """
    if not split.test or not split.neg_test:
        raise ValueError("split has no test edges to evaluate")
    mu = mean_embeddings(params, graph, graph.adjacency().astype(np.float64))
    pairs = list(split.test) + list(split.neg_test)
    scores = [decode_edge(mu, i, j) for i, j in pairs]
    labels = [True] * len(split.test) + [False] * len(split.neg_test)
    return {"auc": auc(scores, labels), "ap": average_precision(scores, labels)}


def rank_candidates(
    params: VgaeParams,
    graph: StateGraph,
    context_nodes: Sequence[NodeId] | frozenset[NodeId],
    top_k: int,
) -> list[ScoredEdge]:
    """Top-k unobserved (Domain, SlotValue) pairs for a dialogue's domains.

    Candidates are the graph's non-edges incident to the context's Domain
    nodes, scored with mean embeddings over the full observed adjacency.
    Sorted by descending probability; ties resolve by node index.
    """
    context = set(context_nodes)
    if not context:
        raise ValueError("context_nodes must be non-empty")
    if top_k <= 0:
        raise ValueError("top_k must be positive")
    domains = sorted(
        (n for n in context if n.kind is NodeKind.DOMAIN), key=lambda n: n.index
    )
    mu = mean_embeddings(params, graph, graph.adjacency().astype(np.float64))

    slot_values = [n for n in graph.nodes if n.kind is NodeKind.SLOT_VALUE]
    candidates: list[ScoredEdge] = []
    for d in domains:
        for sv in slot_values:
            key = (d.index, sv.index) if d.index < sv.index else (sv.index, d.index)
            if key in graph.edges:
                continue
            score = decode_edge(mu, d.index, sv.index)
            candidates.append(ScoredEdge(pair=(d, sv), score=score))
    candidates.sort(key=lambda e: (-e.score, e.pair[0].index, e.pair[1].index))
    return candidates[:top_k]


def candidate_records(dialogue_id: str, ranked: Sequence[ScoredEdge]) -> list[dict]:
    """JSONL-ready records for ranked candidates, 1-based rank."""
    return [
        {
            "dialogue_id": dialogue_id,
            "domain_label": e.pair[0].label,
            "slotvalue_label": e.pair[1].label,
            "probability": e.score,
            "rank": r,
        }
        for r, e in enumerate(ranked, start=1)
    ]


def cross_validate(graph: StateGraph, k: int = 10, config: TrainConfig | None = None) -> CvReport:
    """K-fold edge-level cross-validation.

    Edges are partitioned into k seeded folds; each fold serves once as
    the test set (with freshly sampled matched negatives) while the model
    trains on the rest.  Folding is at the edge level: state graphs are
    small, and coarser folds would routinely leave a fold with no edges.
    """
    if config is None:
        config = TrainConfig()
    edges = graph.sorted_edges()
    if len(edges) < k:
        raise ValueError(f"need at least {k} edges for {k}-fold CV, got {len(edges)}")

    from .datasets import kfold_split

    folds = kfold_split(edges, k, seed=config.seed)
    non_edges = graph.non_edges()

    fold_auc: list[float] = []
    fold_ap: list[float] = []
    for fold_index, fold in enumerate(folds):
        held_out = set(fold)
        rest = tuple(e for e in edges if e not in held_out)
        if not rest:
            raise ValueError("a fold consumed every edge; graph too small for CV")
        rng = np.random.default_rng([config.seed, fold_index])
        if len(fold) > len(non_edges):
            raise ValueError("not enough non-edges to sample fold negatives")
        neg_idx = rng.choice(len(non_edges), size=len(fold), replace=False)
        split = EdgeSplit(
            train=rest,
            val=(),
            test=tuple(fold),
            neg_val=(),
            neg_test=tuple(non_edges[i] for i in neg_idx),
            seed=config.seed,
        )
        params, _ = train(graph, split, config)
        result = evaluate_split(params, graph, split)
        fold_auc.append(result["auc"])
        fold_ap.append(result["ap"])

    return CvReport(
        fold_auc=tuple(fold_auc),
        fold_ap=tuple(fold_ap),
        mean_auc=float(np.mean(fold_auc)),
        std_auc=float(np.std(fold_auc)),
        mean_ap=float(np.mean(fold_ap)),
        std_ap=float(np.std(fold_ap)),
    )
