"""Step 4a: partition seed and intermediate nodes into sub-topic clusters.

The similarity graph weights node pairs by their path relatedness over
the border graph, and the partition is found by two-phase modularity
optimization (greedy local moving followed by graph aggregation, repeated
until no further gain). Local moving checks its own progress: modularity
must never decrease between passes.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from itertools import combinations

from .expansion import LayeredNodeSets
from .relatedness import RelatednessParams, relatedness


@dataclass
class WeightedGraph:
    """Undirected weighted graph; keys are (u, v) with u < v, weights > 0."""

    vertices: tuple[int, ...]
    weights: dict[tuple[int, int], float]

    @classmethod
    def build(cls, vertices, weighted_edges) -> "WeightedGraph":
        verts = tuple(sorted(set(vertices)))
        vert_set = set(verts)
        weights: dict[tuple[int, int], float] = {}
        for u, v, w in weighted_edges:
            if u == v:
                raise ValueError(f"self edge on vertex {u}")
            if u not in vert_set or v not in vert_set:
                raise ValueError(f"edge ({u}, {v}) references an unknown vertex")
            if not (w >= 0.0) or w != w or w == float("inf"):
                raise ValueError(f"edge ({u}, {v}) has invalid weight {w}")
            if w == 0.0:
                continue
            key = (u, v) if u < v else (v, u)
            if key in weights:
                raise ValueError(f"duplicate edge {key}")
            weights[key] = w
        return cls(vertices=verts, weights=weights)

    def adjacency(self) -> dict[int, dict[int, float]]:
        adj: dict[int, dict[int, float]] = {v: {} for v in self.vertices}
        for (u, v), w in self.weights.items():
            adj[u][v] = w
            adj[v][u] = w
        return adj

    def total_weight(self) -> float:
        return sum(self.weights.values())


@dataclass
class ClusterSet:
    """Disjoint clusters covering the clustered vertices, with the
    modularity of the returned partition."""

    clusters: tuple[frozenset[int], ...]
    modularity: float

    def membership(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for idx, cluster in enumerate(self.clusters):
            for v in cluster:
                out[v] = idx
        return out


def modularity(wg: WeightedGraph, partition) -> float:
    """Weighted modularity of a partition: internal weight fraction minus
    the expected fraction under the degree-preserving null model."""
    groups = [frozenset(c) for c in partition]
    flat: set[int] = set()
    for c in groups:
        if flat & c:
            raise ValueError("partition has overlapping clusters")
        flat |= c
    if flat != set(wg.vertices):
        raise ValueError("partition does not cover the vertex set exactly")

    m = wg.total_weight()
    if m == 0.0:
        return 0.0
    degree: dict[int, float] = {v: 0.0 for v in wg.vertices}
    for (u, v), w in wg.weights.items():
        degree[u] += w
        degree[v] += w

    index = {}
    for idx, c in enumerate(groups):
        for v in c:
            index[v] = idx
    internal = [0.0] * len(groups)
    for (u, v), w in wg.weights.items():
        if index[u] == index[v]:
            internal[index[u]] += w
    q = 0.0
    for idx, c in enumerate(groups):
        k_c = sum(degree[v] for v in c)
        q += internal[idx] / m - (k_c / (2.0 * m)) ** 2
    return q


class _Level:
    """One aggregation level: symmetric adjacency plus per-node loop weight."""

    def __init__(self, adj: dict[int, dict[int, float]], loops: dict[int, float]):
        self.adj = adj
        self.loops = loops
        self.m = sum(loops.values()) + 0.5 * sum(
            w for nbrs in adj.values() for w in nbrs.values()
        )

    def node_strength(self, v: int) -> float:
        return 2.0 * self.loops[v] + sum(self.adj[v].values())

    def partition_modularity(self, community: dict[int, int]) -> float:
        if self.m == 0.0:
            return 0.0
        internal: dict[int, float] = {}
        strength: dict[int, float] = {}
        for v in self.adj:
            c = community[v]
            internal[c] = internal.get(c, 0.0) + self.loops[v]
            strength[c] = strength.get(c, 0.0) + self.node_strength(v)
        for u, nbrs in self.adj.items():
            for v, w in nbrs.items():
                if u < v and community[u] == community[v]:
                    internal[community[u]] += w
        two_m = 2.0 * self.m
        return sum(
            internal[c] / self.m - (strength[c] / two_m) ** 2 for c in internal
        )


def _local_moving(level: _Level, order: list[int]) -> tuple[dict[int, int], bool]:
    community = {v: v for v in level.adj}
    strength_tot = {v: level.node_strength(v) for v in level.adj}
    two_m = 2.0 * level.m
    moved_any = False
    q_prev = level.partition_modularity(community)

    while True:
        moved_this_pass = False
        for v in order:
            c_old = community[v]
            k_v = level.node_strength(v)
            strength_tot[c_old] -= k_v
            community[v] = -1

            links: dict[int, float] = {c_old: 0.0}
            for w, weight in level.adj[v].items():
                c = community[w]
                if c != -1:
                    links[c] = links.get(c, 0.0) + weight

            best_c, best_gain = c_old, links.get(c_old, 0.0) - strength_tot[c_old] * k_v / two_m
            for c in sorted(links):
                gain = links[c] - strength_tot[c] * k_v / two_m
                if gain > best_gain + 1e-12:
                    best_c, best_gain = c, gain

            community[v] = best_c
            strength_tot[best_c] = strength_tot.get(best_c, 0.0) + k_v
            if best_c != c_old:
                moved_this_pass = True
                moved_any = True

        q_now = level.partition_modularity(community)
        # Greedy moves only ever accept improvements; a drop means a bug.
        if q_now < q_prev - 1e-9:
            raise AssertionError(
                f"local moving decreased modularity: {q_prev} -> {q_now}"
            )
        q_prev = q_now
        if not moved_this_pass:
            break

    return community, moved_any


def louvain(wg: WeightedGraph, rng_seed: int = 0, shuffle: bool = False) -> ClusterSet:
    """Two-phase greedy modularity clustering.

    Deterministic for fixed input: local moving visits nodes in ascending
    id order unless ``shuffle`` asks for a seeded shuffle. An edgeless
    graph yields singletons with modularity 0.
    """
    if not wg.vertices:
        raise ValueError("weighted graph has no vertices")
    if not wg.weights:
        clusters = tuple(frozenset((v,)) for v in wg.vertices)
        return ClusterSet(clusters=clusters, modularity=0.0)

    rng = random.Random(rng_seed)
    members: dict[int, frozenset[int]] = {v: frozenset((v,)) for v in wg.vertices}
    adj = wg.adjacency()
    loops: dict[int, float] = {v: 0.0 for v in wg.vertices}

    while True:
        level = _Level(adj, loops)
        order = sorted(level.adj)
        if shuffle:
            rng.shuffle(order)
        community, moved = _local_moving(level, order)
        if not moved:
            break

        # Aggregate: each community becomes one node, named after its
        # smallest member so renumbering stays deterministic.
        groups: dict[int, list[int]] = {}
        for v, c in community.items():
            groups.setdefault(c, []).append(v)
        rename = {c: min(vs) for c, vs in groups.items()}

        new_members: dict[int, frozenset[int]] = {}
        new_loops: dict[int, float] = {}
        new_adj: dict[int, dict[int, float]] = {}
        for c, vs in groups.items():
            name = rename[c]
            new_members[name] = frozenset().union(*(members[v] for v in vs))
            new_loops[name] = sum(loops[v] for v in vs)
            new_adj[name] = {}
        for u, nbrs in adj.items():
            cu = rename[community[u]]
            for v, w in nbrs.items():
                if u >= v:
                    continue
                cv = rename[community[v]]
                if cu == cv:
                    new_loops[cu] += w
                else:
                    new_adj[cu][cv] = new_adj[cu].get(cv, 0.0) + w
                    new_adj[cv][cu] = new_adj[cv].get(cu, 0.0) + w
        members = new_members
        adj = new_adj
        loops = new_loops

    clusters = tuple(sorted(members.values(), key=min))
    return ClusterSet(clusters=clusters, modularity=modularity(wg, clusters))


def build_similarity_graph(
    layers: LayeredNodeSets, params: RelatednessParams | None = None
) -> WeightedGraph:
    """Pairwise relatedness over the border graph for all seed and
    intermediate nodes; zero-relatedness pairs are dropped."""
    params = params or RelatednessParams()
    nodes = sorted(layers.seed_and_intermediate)
    edges = []
    for u, v in combinations(nodes, 2):
        w = relatedness(layers.border_graph, u, v, params)
        if w > 0.0:
            edges.append((u, v, w))
    return WeightedGraph.build(nodes, edges)
