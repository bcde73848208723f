"""The 15-feature vector describing one candidate node for one query.

Layer membership, intermediate-graph centrality, cluster proximity and
cluster composition, the content-retrieval reciprocal rank, and two
query-independent statistics from the full graph.
"""

from __future__ import annotations

import numpy as np

from .candidates import CandidateSet
from .centrality import betweenness, pagerank
from .clustering import ClusterSet
from .expansion import LayeredNodeSets
from .graph import KnowledgeGraph

FEATURE_NAMES = (
    "is_seed",
    "is_intermediate",
    "pagerank_intermediate",
    "betweenness_intermediate",
    "is_border",
    "max_cluster_proximity",
    "avg_cluster_proximity",
    "sum_cluster_proximity",
    "in_top_seed_cluster",
    "in_top_seed_intermediate_cluster",
    "seed_fraction_of_cluster",
    "seed_intermediate_fraction_of_cluster",
    "ql_reciprocal_rank",
    "in_degree",
    "clustering_coefficient",
)
NUM_FEATURES = len(FEATURE_NAMES)


def _home_cluster(
    node: int,
    membership: dict[int, int],
    proximity: dict[int, float],
) -> int | None:
    """The cluster a node is judged against: its own for clustered nodes,
    the nearest by proximity for borders, none when all proximities are 0."""
    if node in membership:
        return membership[node]
    best: tuple[float, int] | None = None
    for idx in sorted(proximity):
        score = proximity[idx]
        if score <= 0.0:
            continue
        if best is None or score > best[0]:
            best = (score, idx)
    return None if best is None else best[1]


def extract_features(
    graph: KnowledgeGraph,
    layers: LayeredNodeSets,
    clusters: ClusterSet,
    cand: CandidateSet,
    ql_reciprocal: dict[int, float],
) -> dict[int, np.ndarray]:
    """Feature vectors for every candidate, keyed by node id."""
    pr, _ = pagerank(layers.intermediate_graph)
    bw = betweenness(layers.intermediate_graph)

    membership = clusters.membership()
    seed_counts = [len(c & layers.seeds) for c in clusters.clusters]
    si_counts = [len(c) for c in clusters.clusters]
    max_seed_count = max(seed_counts, default=0)
    max_si_count = max(si_counts, default=0)
    total_seeds = len(layers.seeds)
    total_si = len(layers.seed_and_intermediate)

    out: dict[int, np.ndarray] = {}
    for node in sorted(cand.candidates):
        vec = np.zeros(NUM_FEATURES, dtype=np.float64)
        if node in layers.seeds:
            vec[0] = 1.0
        elif node in layers.intermediates:
            vec[1] = 1.0
        else:
            vec[4] = 1.0
        vec[2] = pr.get(node, 0.0)
        vec[3] = bw.get(node, 0.0)

        proximity = cand.proximity.get(node, {})
        if proximity:
            values = [proximity[idx] for idx in sorted(proximity)]
            vec[5] = max(values)
            vec[6] = sum(values) / len(values)
            vec[7] = sum(values)

        home = _home_cluster(node, membership, proximity)
        if home is not None:
            if seed_counts[home] == max_seed_count and max_seed_count > 0:
                vec[8] = 1.0
            if si_counts[home] == max_si_count and max_si_count > 0:
                vec[9] = 1.0
            if total_seeds:
                vec[10] = seed_counts[home] / total_seeds
            if total_si:
                vec[11] = si_counts[home] / total_si

        vec[12] = ql_reciprocal.get(node, 0.0)
        vec[13] = float(graph.in_degree(node))
        vec[14] = graph.clustering_coefficient(node)
        out[node] = vec
    return out
