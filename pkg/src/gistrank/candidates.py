"""Step 4b: score border nodes against the clusters and pick candidates."""

from __future__ import annotations

from dataclasses import dataclass

from .clustering import ClusterSet
from .expansion import LayeredNodeSets
from .relatedness import RelatednessParams, cluster_proximity


@dataclass
class CandidateSet:
    """Per-cluster top borders plus the full candidate pool.

    ``proximity`` keeps every candidate's score against every cluster;
    the feature extractor reads it later. Seeds and intermediates are
    always candidates.
    """

    per_cluster_top: tuple[tuple[tuple[int, float], ...], ...]
    candidates: frozenset[int]
    proximity: dict[int, dict[int, float]]


def select_candidates(
    layers: LayeredNodeSets,
    clusters: ClusterSet,
    params: RelatednessParams | None = None,
    top_k: int | None = 20,
) -> CandidateSet:
    """Top ``top_k`` borders per cluster by mean cluster relatedness.

    Scores are computed over the border graph. Borders with zero
    proximity to a cluster never enter that cluster's list: zero carries
    no evidence. ``top_k=None`` disables filtering entirely and admits
    every border into the candidate pool.
    """
    params = params or RelatednessParams()
    if top_k is not None and top_k < 1:
        raise ValueError("top_k must be >= 1 or None")

    core = layers.seed_and_intermediate
    borders = sorted(layers.borders)
    graph = layers.border_graph

    proximity: dict[int, dict[int, float]] = {}
    for node in sorted(core) + borders:
        proximity[node] = {
            idx: cluster_proximity(graph, node, cluster, params)
            for idx, cluster in enumerate(clusters.clusters)
        }

    per_cluster: list[tuple[tuple[int, float], ...]] = []
    selected: set[int] = set()
    for idx in range(len(clusters.clusters)):
        scored = [(node, proximity[node][idx]) for node in borders if proximity[node][idx] > 0.0]
        scored.sort(key=lambda item: (-item[1], item[0]))
        if top_k is not None:
            scored = scored[:top_k]
        per_cluster.append(tuple(scored))
        selected.update(node for node, _ in scored)

    if top_k is None:
        pool = core | set(borders)
    else:
        pool = core | selected
    return CandidateSet(
        per_cluster_top=tuple(per_cluster),
        candidates=frozenset(pool),
        proximity={node: proximity[node] for node in sorted(pool)},
    )
