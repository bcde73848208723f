"""Retrieval metrics over ranked node lists with binary relevance."""

from __future__ import annotations

import math


def average_precision(ranked, relevant) -> float | None:
    """Mean of precision at each relevant rank, over all relevant nodes.

    Relevant nodes missing from the ranking count as misses through the
    denominator. Returns None when the relevant set is empty: the query
    carries no signal and must be excluded from aggregation, not scored.
    """
    relevant = set(relevant)
    if not relevant:
        return None
    hits = 0
    precision_sum = 0.0
    for pos, node in enumerate(ranked, start=1):
        if node in relevant:
            hits += 1
            precision_sum += hits / pos
    return precision_sum / len(relevant)


def precision_at_k(ranked, relevant, k: int = 10) -> float:
    """Relevant fraction of the top k; the denominator stays k even when
    fewer candidates were retrieved."""
    if k < 1:
        raise ValueError("k must be >= 1")
    relevant = set(relevant)
    return sum(1 for node in ranked[:k] if node in relevant) / k


def ndcg_at_k(ranked, relevant, k: int = 10) -> float:
    """Binarized NDCG with 1/log2(rank+1) discounts; 0 when nothing is
    relevant."""
    if k < 1:
        raise ValueError("k must be >= 1")
    relevant = set(relevant)
    if not relevant:
        return 0.0
    dcg = sum(
        1.0 / math.log2(pos + 1)
        for pos, node in enumerate(ranked[:k], start=1)
        if node in relevant
    )
    ideal = sum(1.0 / math.log2(pos + 1) for pos in range(1, min(k, len(relevant)) + 1))
    return dcg / ideal
