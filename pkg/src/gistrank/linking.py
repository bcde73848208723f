"""Step 1: map object labels and caption mentions onto graph nodes.

Linking is exact title matching after normalization. Strings whose only
match is a disambiguation page are resolved afterwards, anchored on the
nodes the exact matches already produced, so the outcome does not depend
on the order of the input strings.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

from .graph import KnowledgeGraph


@dataclass
class GistQuery:
    """One image-caption pair: object label strings plus mention strings."""

    query_id: str
    image_labels: list[str] = field(default_factory=list)
    caption_mentions: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.image_labels and not self.caption_mentions:
            raise ValueError(f"query {self.query_id!r}: both string lists are empty")

    def strings(self) -> list[str]:
        """All distinct input strings, labels first, original order kept."""
        seen: dict[str, None] = {}
        for s in self.image_labels:
            seen.setdefault(s, None)
        for s in self.caption_mentions:
            seen.setdefault(s, None)
        return list(seen)


@dataclass
class LinkResult:
    """Per-string link targets and the deduplicated seed node set.

    A string maps to an empty set when it could not be linked. Strings
    resolved through a disambiguation page may map to several nodes.
    """

    links: dict[str, frozenset[int]]
    seeds: frozenset[int]


def resolve_disambiguation(
    graph: KnowledgeGraph, disambiguation_id: int, anchors: set[int] | frozenset[int]
) -> set[int]:
    """Targets of a disambiguation page within two undirected hops of an anchor.

    Targets are the page's out-neighbors, excluding other disambiguation
    pages. Without anchors there is no context and nothing is returned.
    """
    rec = graph.node(disambiguation_id)
    if not rec.is_disambiguation:
        raise ValueError(f"node {disambiguation_id} is not a disambiguation page")
    if not anchors:
        return set()

    targets = {
        e.dst
        for e in graph.out_edges(disambiguation_id)
        if e.dst != disambiguation_id and not graph.node(e.dst).is_disambiguation
    }
    if not targets:
        return set()

    within = _ball(graph, anchors, hops=2)
    return {t for t in targets if t in within}


def _ball(graph: KnowledgeGraph, sources: set[int] | frozenset[int], hops: int) -> set[int]:
    seen = set(sources)
    frontier = deque((v, 0) for v in sorted(sources))
    while frontier:
        v, d = frontier.popleft()
        if d == hops:
            continue
        for w in graph.neighbors(v):
            if w not in seen:
                seen.add(w)
                frontier.append((w, d + 1))
    return seen


def link(graph: KnowledgeGraph, query: GistQuery, match_categories: bool = False) -> LinkResult:
    """Link every query string, then resolve deferred disambiguation pages.

    A string links to the unique non-disambiguation article whose
    normalized title matches. With ``match_categories`` a unique category
    title is accepted when no article matches; this is off by default
    because category titles rarely coincide with surface mentions.
    Unlinkable strings yield an empty link set, never an error.
    """
    links: dict[str, frozenset[int]] = {}
    deferred: list[tuple[str, int]] = []

    for s in query.strings():
        articles = graph.articles_titled(s)
        if len(articles) == 1:
            links[s] = frozenset(articles)
            continue
        if match_categories:
            cats = graph.categories_titled(s)
            if len(cats) == 1:
                links[s] = frozenset(cats)
                continue
        disambigs = graph.disambiguations_titled(s)
        if len(disambigs) == 1:
            links[s] = frozenset()
            deferred.append((s, disambigs[0]))
            continue
        links[s] = frozenset()

    anchors = frozenset().union(*links.values()) if links else frozenset()
    for s, node_id in deferred:
        links[s] = frozenset(resolve_disambiguation(graph, node_id, anchors))

    seeds = frozenset().union(*links.values()) if links else frozenset()
    return LinkResult(links=links, seeds=seeds)


def _split_list(raw: str) -> list[str]:
    if raw == "-":
        return []
    return [part for part in raw.split("|") if part]


def _join_list(items: list[str]) -> str:
    return "|".join(items) if items else "-"


def load_queries(path: str | Path) -> list[GistQuery]:
    """Read the query TSV: ``query_id <TAB> labels <TAB> mentions``.

    Lists are pipe-separated; ``-`` encodes an empty list. Lines starting
    with ``#`` are comments.
    """
    queries: list[GistQuery] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != 3:
                raise ValueError(
                    f"{path}:{lineno}: expected 3 tab-separated fields, got {len(fields)}"
                )
            query_id, labels, mentions = fields
            if query_id in seen:
                raise ValueError(f"{path}:{lineno}: duplicate query id {query_id!r}")
            seen.add(query_id)
            queries.append(
                GistQuery(
                    query_id=query_id,
                    image_labels=_split_list(labels),
                    caption_mentions=_split_list(mentions),
                )
            )
    return queries


def write_queries(queries: list[GistQuery], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for q in queries:
            fh.write(
                f"{q.query_id}\t{_join_list(q.image_labels)}\t{_join_list(q.caption_mentions)}\n"
            )
