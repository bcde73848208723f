"""Centrality on the intermediate subgraph: PageRank and betweenness.

Both treat the subgraph as undirected. PageRank walks every stored edge in
both directions (parallel edges count), teleports uniformly, and spreads
the mass of isolated nodes over all nodes. Betweenness is exact Brandes
accumulation over unweighted shortest paths, each unordered pair counted
once and endpoints excluded.
"""

from __future__ import annotations

from collections import deque


def pagerank(
    subgraph,
    damping: float = 0.85,
    eps: float = 1e-8,
    max_iter: int = 200,
) -> tuple[dict[int, float], bool]:
    """Power iteration; returns (scores, converged).

    Scores sum to 1. On non-convergence the last iterate is returned with
    the flag set to False.
    """
    nodes = sorted(subgraph.nodes)
    if not nodes:
        raise ValueError("subgraph has no nodes")
    n = len(nodes)

    weight: dict[int, dict[int, int]] = {v: {} for v in nodes}
    for e in subgraph.edges:
        if e.src == e.dst:
            continue
        weight[e.src][e.dst] = weight[e.src].get(e.dst, 0) + 1
        weight[e.dst][e.src] = weight[e.dst].get(e.src, 0) + 1
    strength = {v: sum(weight[v].values()) for v in nodes}

    rank = {v: 1.0 / n for v in nodes}
    converged = False
    for _ in range(max_iter):
        dangling = sum(rank[v] for v in nodes if strength[v] == 0)
        nxt = {v: (1.0 - damping) / n + damping * dangling / n for v in nodes}
        for v in nodes:
            if strength[v] == 0:
                continue
            share = damping * rank[v] / strength[v]
            for w, mult in weight[v].items():
                nxt[w] += share * mult
        diff = sum(abs(nxt[v] - rank[v]) for v in nodes)
        rank = nxt
        if diff < eps:
            converged = True
            break
    return rank, converged


def betweenness(subgraph) -> dict[int, float]:
    """Exact unweighted betweenness on the undirected simple graph."""
    nodes = sorted(subgraph.nodes)
    if not nodes:
        raise ValueError("subgraph has no nodes")

    centrality = {v: 0.0 for v in nodes}
    for source in nodes:
        stack: list[int] = []
        preds: dict[int, list[int]] = {v: [] for v in nodes}
        sigma = {v: 0.0 for v in nodes}
        dist: dict[int, int] = {source: 0}
        sigma[source] = 1.0
        queue = deque([source])
        while queue:
            v = queue.popleft()
            stack.append(v)
            for w in sorted(subgraph.neighbors(v)):
                if w not in dist:
                    dist[w] = dist[v] + 1
                    queue.append(w)
                if dist[w] == dist[v] + 1:
                    sigma[w] += sigma[v]
                    preds[w].append(v)
        delta = {v: 0.0 for v in nodes}
        while stack:
            w = stack.pop()
            for v in preds[w]:
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w])
            if w != source:
                centrality[w] += delta[w]

    # Each unordered pair was accumulated from both endpoints.
    return {v: c / 2.0 for v, c in centrality.items()}
