"""Exclusivity-weighted path relatedness between graph nodes.

An edge of type ``r`` from ``s`` to ``t`` costs::

    cost(s -r-> t) = |{s -r-> *}| + |{* -r-> t}| - 1

so an edge is cheap exactly when it is exclusive: few same-typed
alternatives leave its source or enter its target. A path costs the sum
of its edge costs, and the relatedness of two nodes aggregates their
best-ranked simple paths::

    relatedness(s, t) = sum_i  decay^length(p_i) / cost(p_i)

over the ``num_paths`` cheapest paths, ranked by length first and cost
second. Shorter, more exclusive connections therefore dominate. Scores
are nonnegative and symmetric under undirected traversal; disconnected
pairs score zero.

Path enumeration is a bounded-depth exhaustive search rather than a
classical k-shortest-path algorithm: the length cap makes the bounded
search exact, and it keeps ranking ties fully deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

from .graph import Edge


@dataclass
class RelatednessParams:
    """Decay per path edge, number of paths kept, and the search depth cap."""

    length_decay: float = 0.25
    num_paths: int = 3
    max_path_len: int = 4

    def __post_init__(self) -> None:
        if not 0.0 < self.length_decay <= 1.0:
            raise ValueError("length_decay must be in (0, 1]")
        if self.num_paths < 1:
            raise ValueError("num_paths must be >= 1")
        if self.max_path_len < 1:
            raise ValueError("max_path_len must be >= 1")


@dataclass(frozen=True)
class ScoredPath:
    """A simple path with its edge count and summed edge cost."""

    nodes: tuple[int, ...]
    length: int
    cost: int


def edge_cost(graph, e: Edge) -> int:
    """Typed fan-out of the source plus typed fan-in of the target, minus
    one so the edge itself is counted once. Always >= 1."""
    if not graph.has_edge(e):
        raise ValueError(f"edge {e} not in graph")
    return (
        graph.typed_out_count[e.src, e.etype]
        + graph.typed_in_count[e.dst, e.etype]
        - 1
    )


def _hop_cost(graph, u: int, v: int) -> int:
    # Parallel edges between the same endpoints: a hop costs its cheapest
    # stored edge, whichever direction it points.
    return min(edge_cost(graph, e) for e in graph.edges_between(u, v))


def top_k_paths(graph, s: int, t: int, params: RelatednessParams | None = None) -> list[ScoredPath]:
    """Best-ranked simple undirected paths from s to t.

    Ordered by (length, cost, node sequence); the lexicographic key only
    breaks exact ties so results are reproducible. Returns fewer than
    ``num_paths`` entries when fewer paths exist, and an empty list for
    disconnected pairs.
    """
    params = params or RelatednessParams()
    if s == t:
        raise ValueError("path endpoints must differ")
    if s not in graph or t not in graph:
        raise KeyError(f"unknown node id {s if s not in graph else t}")

    found: list[tuple[int, int, tuple[int, ...]]] = []
    cap = params.max_path_len

    def dfs(path: list[int], on_path: set[int], cost: int) -> None:
        depth = len(path) - 1
        if depth >= cap:
            return
        for w in sorted(graph.neighbors(path[-1])):
            if w in on_path:
                continue
            hop = _hop_cost(graph, path[-1], w)
            if w == t:
                found.append((depth + 1, cost + hop, tuple(path) + (w,)))
                continue
            path.append(w)
            on_path.add(w)
            dfs(path, on_path, cost + hop)
            on_path.discard(w)
            path.pop()

    dfs([s], {s}, 0)
    found.sort(key=lambda item: (item[0], item[1], item[2]))
    return [
        ScoredPath(nodes=nodes, length=length, cost=cost)
        for length, cost, nodes in found[: params.num_paths]
    ]


def relatedness(graph, s: int, t: int, params: RelatednessParams | None = None) -> float:
    """Decay-weighted inverse-cost sum over the top paths; 0 when disconnected."""
    params = params or RelatednessParams()
    return sum(
        params.length_decay ** p.length / p.cost
        for p in top_k_paths(graph, s, t, params)
    )


def cluster_proximity(graph, node: int, cluster, params: RelatednessParams | None = None) -> float:
    """Mean relatedness between a node and the members of a cluster.

    A node belonging to the cluster is scored against the other members
    only (self-relatedness is undefined); a cluster containing nothing but
    the node itself scores 0.
    """
    members = set(cluster)
    if not members:
        raise ValueError("cluster is empty")
    members.discard(node)
    if not members:
        return 0.0
    total = sum(relatedness(graph, node, y, params) for y in sorted(members))
    return total / len(members)
