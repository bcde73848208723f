"""Steps 2 and 3: intermediate graph from seed-to-seed paths, border graph
from a bounded hop expansion around it.

Traversal ignores edge direction by default (the graph is treated as
undirected), but retained edges keep their stored direction and type
because the relatedness cost function needs the directed typed counts.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .graph import Edge, KnowledgeGraph


@dataclass
class ExpansionConfig:
    """Bounds for the two expansion steps.

    ``max_path_len`` caps seed-to-seed paths by edge count.
    ``degree_cap`` skips non-seed nodes whose full-graph degree exceeds it
    during the path search; disabled by default so the search stays exact.
    ``directed`` restricts the path search to stored edge directions.
    """

    max_path_len: int = 4
    border_hops: int = 2
    degree_cap: int | None = None
    directed: bool = False

    def __post_init__(self) -> None:
        if self.max_path_len < 1:
            raise ValueError("max_path_len must be >= 1")
        if self.border_hops < 1:
            raise ValueError("border_hops must be >= 1")
        if self.degree_cap is not None and self.degree_cap < 1:
            raise ValueError("degree_cap must be >= 1 when set")


class Subgraph:
    """A node/edge subset of a knowledge graph.

    Exposes the same traversal surface as the full graph. Typed fan-in and
    fan-out counts delegate to the parent graph: edge informativeness is a
    property of the whole knowledge base, not of the slice under scrutiny.
    """

    def __init__(self, parent: KnowledgeGraph, nodes, edges):
        self.parent = parent
        self.nodes: frozenset[int] = frozenset(nodes)
        self.edges: frozenset[Edge] = frozenset(edges)
        self._neighbors: dict[int, set[int]] = {v: set() for v in self.nodes}
        self._pair_edges: dict[tuple[int, int], list[Edge]] = {}
        for e in sorted(self.edges, key=lambda e: (e.src, e.dst, e.etype)):
            if e.src not in self.nodes or e.dst not in self.nodes:
                raise ValueError(f"edge {e} has an endpoint outside the subgraph")
            if e.src != e.dst:
                self._neighbors[e.src].add(e.dst)
                self._neighbors[e.dst].add(e.src)
            key = (e.src, e.dst) if e.src <= e.dst else (e.dst, e.src)
            self._pair_edges.setdefault(key, []).append(e)

    def __contains__(self, node_id: int) -> bool:
        return node_id in self.nodes

    @property
    def typed_out_count(self) -> dict[tuple[int, str], int]:
        return self.parent.typed_out_count

    @property
    def typed_in_count(self) -> dict[tuple[int, str], int]:
        return self.parent.typed_in_count

    def neighbors(self, node_id: int) -> set[int]:
        if node_id not in self.nodes:
            raise KeyError(f"unknown node id {node_id}")
        return self._neighbors[node_id]

    def edges_between(self, u: int, v: int) -> list[Edge]:
        key = (u, v) if u <= v else (v, u)
        return self._pair_edges.get(key, [])

    def has_edge(self, e: Edge) -> bool:
        key = (e.src, e.dst) if e.src <= e.dst else (e.dst, e.src)
        return e in self._pair_edges.get(key, ())


@dataclass
class LayeredNodeSets:
    """Seed, intermediate, and border layers with their two subgraphs."""

    seeds: frozenset[int]
    intermediates: frozenset[int]
    borders: frozenset[int]
    intermediate_graph: Subgraph
    border_graph: Subgraph

    @property
    def seed_and_intermediate(self) -> frozenset[int]:
        return self.seeds | self.intermediates


def build_intermediate(
    graph: KnowledgeGraph, seeds, cfg: ExpansionConfig | None = None
) -> Subgraph:
    """Union of all simple paths of bounded length between distinct seeds.

    Every node and edge on any qualifying path is retained; paths from a
    seed to itself are not considered. Seeds always enter the subgraph,
    connected or not.
    """
    cfg = cfg or ExpansionConfig()
    seed_set = frozenset(seeds)
    if not seed_set:
        raise ValueError("seed set is empty")
    for s in seed_set:
        graph.node(s)

    nodes: set[int] = set(seed_set)
    edges: set[Edge] = set()
    cap = cfg.degree_cap

    def successors(v: int) -> list[int]:
        if cfg.directed:
            return sorted({e.dst for e in graph.out_edges(v) if e.dst != v})
        return sorted(graph.neighbors(v))

    def hop_edges(u: int, v: int) -> list[Edge]:
        between = graph.edges_between(u, v)
        if cfg.directed:
            return [e for e in between if e.src == u and e.dst == v]
        return between

    def record(path: list[int]) -> None:
        nodes.update(path)
        for u, v in zip(path, path[1:]):
            edges.update(hop_edges(u, v))

    def dfs(path: list[int], on_path: set[int]) -> None:
        if len(path) - 1 >= cfg.max_path_len:
            return
        for w in successors(path[-1]):
            if w in on_path:
                continue
            if w in seed_set:
                path.append(w)
                record(path)
                on_path.add(w)
                dfs(path, on_path)
                on_path.discard(w)
                path.pop()
            else:
                if cap is not None and graph.degree(w) > cap:
                    continue
                path.append(w)
                on_path.add(w)
                dfs(path, on_path)
                on_path.discard(w)
                path.pop()

    for root in sorted(seed_set):
        dfs([root], {root})

    return Subgraph(graph, nodes, edges)


def build_border(
    graph: KnowledgeGraph, intermediate: Subgraph, cfg: ExpansionConfig | None = None
) -> Subgraph:
    """Add every node within ``border_hops`` undirected steps of the
    intermediate graph, plus all edges lying on such short outward paths."""
    cfg = cfg or ExpansionConfig()
    hops = cfg.border_hops

    dist: dict[int, int] = {v: 0 for v in intermediate.nodes}
    frontier = deque(sorted(intermediate.nodes))
    while frontier:
        v = frontier.popleft()
        d = dist[v]
        if d == hops:
            continue
        for w in graph.neighbors(v):
            if w not in dist:
                dist[w] = d + 1
                frontier.append(w)

    nodes = set(dist)
    edges: set[Edge] = set(intermediate.edges)
    for e in graph.edges:
        if e.src == e.dst:
            continue
        ds = dist.get(e.src)
        dd = dist.get(e.dst)
        if ds is None or dd is None:
            continue
        if min(ds, dd) + 1 <= hops:
            edges.add(e)

    return Subgraph(graph, nodes, edges)


def expand(graph: KnowledgeGraph, seeds, cfg: ExpansionConfig | None = None) -> LayeredNodeSets:
    """Run both expansions and separate the three node layers."""
    cfg = cfg or ExpansionConfig()
    intermediate = build_intermediate(graph, seeds, cfg)
    border = build_border(graph, intermediate, cfg)
    seed_set = frozenset(seeds)
    return LayeredNodeSets(
        seeds=seed_set,
        intermediates=frozenset(intermediate.nodes - seed_set),
        borders=frozenset(border.nodes - intermediate.nodes),
        intermediate_graph=intermediate,
        border_graph=border,
    )
