"""Typed knowledge graph: storage, TSV loading, and local node statistics.

The graph is a directed multigraph over article and category nodes. Every
edge carries exactly one type label ("page-category", "super-category",
"sub-category" by convention, arbitrary labels accepted). Parallel edges
with identical (src, type, dst) are rejected at load so that the typed
fan-in/fan-out counts used by the relatedness cost function are
unambiguous. The graph is immutable after construction and safe to share
across worker threads.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

ARTICLE = "article"
CATEGORY = "category"
NODE_KINDS = (ARTICLE, CATEGORY)


class GraphLoadError(ValueError):
    """A nodes or edges file violates the TSV contract."""


def normalize_title(title: str) -> str:
    """Canonical title form: NFC, case-folded, inner whitespace collapsed."""
    folded = unicodedata.normalize("NFC", title).casefold()
    return " ".join(folded.split())


def escape_field(value: str) -> str:
    """Escape backslash, tab, and newline for single-line TSV fields."""
    return value.replace("\\", "\\\\").replace("\t", "\\t").replace("\n", "\\n")


def unescape_field(value: str) -> str:
    out: list[str] = []
    i = 0
    while i < len(value):
        ch = value[i]
        if ch == "\\":
            if i + 1 >= len(value):
                raise ValueError("dangling backslash escape")
            nxt = value[i + 1]
            if nxt == "t":
                out.append("\t")
            elif nxt == "n":
                out.append("\n")
            elif nxt == "\\":
                out.append("\\")
            else:
                raise ValueError(f"unknown escape sequence \\{nxt}")
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


@dataclass(frozen=True, slots=True)
class Edge:
    """Directed typed edge between two node ids."""

    src: int
    etype: str
    dst: int


@dataclass(slots=True)
class NodeRecord:
    """One graph node: a Wikipedia-style article or category.

    ``text`` is the optional prose body used by the retrieval index;
    category nodes often ship without one.
    """

    id: int
    kind: str
    title: str
    is_disambiguation: bool = False
    text: str = ""

    def __post_init__(self) -> None:
        if self.kind not in NODE_KINDS:
            raise ValueError(f"node {self.id}: unknown kind {self.kind!r}")
        if not self.title:
            raise ValueError(f"node {self.id}: empty title")
        if self.is_disambiguation and self.kind != ARTICLE:
            raise ValueError(f"node {self.id}: only articles can be disambiguation pages")
        if self.id < 0:
            raise ValueError(f"node id must be non-negative, got {self.id}")


class KnowledgeGraph:
    """Immutable typed multigraph with precomputed adjacency and counts."""

    def __init__(self, nodes: Iterable[NodeRecord], edges: Iterable[Edge]):
        self.nodes: dict[int, NodeRecord] = {}
        for rec in nodes:
            if rec.id in self.nodes:
                raise GraphLoadError(f"duplicate node id {rec.id}")
            self.nodes[rec.id] = rec

        self.edges: tuple[Edge, ...] = tuple(edges)
        self.edge_types: set[str] = set()
        self.typed_out_count: dict[tuple[int, str], int] = {}
        self.typed_in_count: dict[tuple[int, str], int] = {}
        self._out: dict[int, list[Edge]] = {v: [] for v in self.nodes}
        self._in: dict[int, list[Edge]] = {v: [] for v in self.nodes}
        self._neighbors: dict[int, set[int]] = {v: set() for v in self.nodes}
        self._pair_edges: dict[tuple[int, int], list[Edge]] = {}

        seen: set[Edge] = set()
        for e in self.edges:
            if e.src not in self.nodes:
                raise GraphLoadError(f"edge references unknown node id {e.src}")
            if e.dst not in self.nodes:
                raise GraphLoadError(f"edge references unknown node id {e.dst}")
            if not e.etype:
                raise GraphLoadError(f"edge {e.src}->{e.dst} has an empty type")
            if e in seen:
                raise GraphLoadError(
                    f"duplicate edge {e.src} -[{e.etype}]-> {e.dst}"
                )
            seen.add(e)
            self.edge_types.add(e.etype)
            self.typed_out_count[e.src, e.etype] = self.typed_out_count.get((e.src, e.etype), 0) + 1
            self.typed_in_count[e.dst, e.etype] = self.typed_in_count.get((e.dst, e.etype), 0) + 1
            self._out[e.src].append(e)
            self._in[e.dst].append(e)
            if e.src != e.dst:
                self._neighbors[e.src].add(e.dst)
                self._neighbors[e.dst].add(e.src)
            key = (e.src, e.dst) if e.src <= e.dst else (e.dst, e.src)
            self._pair_edges.setdefault(key, []).append(e)

        # Normalized-title lookup, split by how the linker resolves matches.
        self._title_articles: dict[str, list[int]] = {}
        self._title_disambiguations: dict[str, list[int]] = {}
        self._title_categories: dict[str, list[int]] = {}
        for rec in self.nodes.values():
            key = normalize_title(rec.title)
            if rec.kind == CATEGORY:
                self._title_categories.setdefault(key, []).append(rec.id)
            elif rec.is_disambiguation:
                self._title_disambiguations.setdefault(key, []).append(rec.id)
            else:
                self._title_articles.setdefault(key, []).append(rec.id)

    # -- lookups -----------------------------------------------------------

    def __contains__(self, node_id: int) -> bool:
        return node_id in self.nodes

    def node(self, node_id: int) -> NodeRecord:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise KeyError(f"unknown node id {node_id}") from None

    def has_edge(self, e: Edge) -> bool:
        key = (e.src, e.dst) if e.src <= e.dst else (e.dst, e.src)
        return e in self._pair_edges.get(key, ())

    def out_edges(self, node_id: int) -> list[Edge]:
        self.node(node_id)
        return self._out[node_id]

    def in_edges(self, node_id: int) -> list[Edge]:
        self.node(node_id)
        return self._in[node_id]

    def neighbors(self, node_id: int) -> set[int]:
        """Distinct undirected neighbors, self excluded. Do not mutate."""
        self.node(node_id)
        return self._neighbors[node_id]

    def edges_between(self, u: int, v: int) -> list[Edge]:
        """All stored edges between u and v regardless of direction."""
        key = (u, v) if u <= v else (v, u)
        return self._pair_edges.get(key, [])

    def articles_titled(self, title: str) -> list[int]:
        return self._title_articles.get(normalize_title(title), [])

    def disambiguations_titled(self, title: str) -> list[int]:
        return self._title_disambiguations.get(normalize_title(title), [])

    def categories_titled(self, title: str) -> list[int]:
        return self._title_categories.get(normalize_title(title), [])

    # -- node statistics ----------------------------------------------------

    def degree(self, node_id: int) -> int:
        """Edges incident to the node ignoring direction; self-loops count once."""
        self.node(node_id)
        loops = sum(1 for e in self._out[node_id] if e.dst == node_id)
        return len(self._out[node_id]) + len(self._in[node_id]) - loops

    def in_degree(self, node_id: int) -> int:
        self.node(node_id)
        return len(self._in[node_id])

    def clustering_coefficient(self, node_id: int) -> float:
        """Fraction of distinct undirected neighbor pairs that are connected."""
        nbrs = sorted(self.neighbors(node_id))
        n = len(nbrs)
        if n < 2:
            return 0.0
        linked = 0
        for i, a in enumerate(nbrs):
            a_nbrs = self._neighbors[a]
            for b in nbrs[i + 1:]:
                if b in a_nbrs:
                    linked += 1
        return linked / (n * (n - 1) / 2)


def _parse_nodes(path: Path) -> list[NodeRecord]:
    records: list[NodeRecord] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != 5:
                raise GraphLoadError(
                    f"{path}:{lineno}: expected 5 tab-separated fields, got {len(fields)}"
                )
            raw_id, kind, flag, title, text = fields
            try:
                node_id = int(raw_id)
                if flag not in ("0", "1"):
                    raise ValueError(f"is_disambiguation must be 0 or 1, got {flag!r}")
                records.append(
                    NodeRecord(
                        id=node_id,
                        kind=kind,
                        title=unescape_field(title),
                        is_disambiguation=flag == "1",
                        text=unescape_field(text),
                    )
                )
            except ValueError as exc:
                raise GraphLoadError(f"{path}:{lineno}: {exc}") from None
    return records


def _parse_edges(path: Path) -> list[Edge]:
    edges: list[Edge] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != 3:
                raise GraphLoadError(
                    f"{path}:{lineno}: expected 3 tab-separated fields, got {len(fields)}"
                )
            raw_src, etype, raw_dst = fields
            try:
                edges.append(Edge(src=int(raw_src), etype=etype, dst=int(raw_dst)))
            except ValueError as exc:
                raise GraphLoadError(f"{path}:{lineno}: {exc}") from None
    return edges


def load_graph(nodes_path: str | Path, edges_path: str | Path) -> KnowledgeGraph:
    """Load a graph from the nodes/edges TSV pair.

    Nodes file: ``id <TAB> kind <TAB> is_disambiguation(0|1) <TAB> title <TAB> text``
    with tab/newline/backslash escaped as ``\\t``, ``\\n``, ``\\\\`` inside
    title and text. Edges file: ``src_id <TAB> edge_type <TAB> dst_id``.
    Lines starting with ``#`` are comments in both files.
    """
    return KnowledgeGraph(_parse_nodes(Path(nodes_path)), _parse_edges(Path(edges_path)))


def write_graph(graph: KnowledgeGraph, nodes_path: str | Path, edges_path: str | Path) -> None:
    """Write the TSV pair that :func:`load_graph` reads back identically."""
    with open(nodes_path, "w", encoding="utf-8") as fh:
        for node_id in sorted(graph.nodes):
            rec = graph.nodes[node_id]
            fh.write(
                "\t".join(
                    (
                        str(rec.id),
                        rec.kind,
                        "1" if rec.is_disambiguation else "0",
                        escape_field(rec.title),
                        escape_field(rec.text),
                    )
                )
                + "\n"
            )
    with open(edges_path, "w", encoding="utf-8") as fh:
        for e in graph.edges:
            fh.write(f"{e.src}\t{e.etype}\t{e.dst}\n")
