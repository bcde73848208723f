"""Content scoring: query-likelihood retrieval with Dirichlet smoothing.

Each node's text field becomes a unigram language model. A node d scores
a query as::

    score(q, d) = sum_t  log[ (tf(t, d) + mu * p(t | collection)) / (|d| + mu) ]

summed over query term instances after dropping out-of-vocabulary terms.
Nodes without text are indexed as empty documents and fall back entirely
on the collection model. Supplies the text feature of the ranker and the
content-only baseline.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable

from .graph import KnowledgeGraph
from .linking import GistQuery

_WORD = re.compile(r"\w+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Case-folded tokens at Unicode word boundaries."""
    return _WORD.findall(text.casefold())


@dataclass
class TextIndex:
    term_freq: dict[int, Counter]
    doc_len: dict[int, int]
    collection_prob: dict[str, float]
    mu: float = 2000.0

    @property
    def vocabulary(self) -> set[str]:
        return set(self.collection_prob)


def build_index(
    graph: KnowledgeGraph,
    mu: float = 2000.0,
    stemmer: Callable[[str], str] | None = None,
    stopwords: set[str] | None = None,
) -> TextIndex:
    """Index every node's text. Stemming and stopword removal are off by
    default; pass a stemmer callable or a stopword set to enable them."""
    if mu < 0:
        raise ValueError("mu must be >= 0")
    term_freq: dict[int, Counter] = {}
    doc_len: dict[int, int] = {}
    collection: Counter = Counter()
    for node_id in sorted(graph.nodes):
        terms = tokenize(graph.nodes[node_id].text)
        if stopwords:
            terms = [t for t in terms if t not in stopwords]
        if stemmer:
            terms = [stemmer(t) for t in terms]
        counts = Counter(terms)
        term_freq[node_id] = counts
        doc_len[node_id] = sum(counts.values())
        collection.update(counts)

    total = sum(collection.values())
    if total == 0:
        raise ValueError("empty collection: no node has any text")
    collection_prob = {t: collection[t] / total for t in sorted(collection)}
    return TextIndex(term_freq=term_freq, doc_len=doc_len, collection_prob=collection_prob, mu=mu)


def query_likelihood(index: TextIndex, query_terms: list[str], node_id: int) -> float | None:
    """Log-likelihood of the query under the node's smoothed model.

    Out-of-vocabulary terms are dropped first; if nothing survives the
    node cannot be scored and None is returned.
    """
    if node_id not in index.term_freq:
        raise KeyError(f"node {node_id} is not indexed")
    terms = [t for t in query_terms if t in index.collection_prob]
    if not terms:
        return None
    tf = index.term_freq[node_id]
    length = index.doc_len[node_id]
    mu = index.mu
    score = 0.0
    for t in terms:
        prob = (tf.get(t, 0) + mu * index.collection_prob[t]) / (length + mu)
        score += math.log(prob) if prob > 0.0 else float("-inf")
    return score


def query_terms(query: GistQuery) -> list[str]:
    """Keyword query: tokens of the distinct mentions then distinct labels.

    Duplicate mention strings contribute once; term repetitions inside a
    single mention are kept.
    """
    terms: list[str] = []
    seen: set[str] = set()
    for s in query.caption_mentions + query.image_labels:
        if s in seen:
            continue
        seen.add(s)
        terms.extend(tokenize(s))
    return terms


def ql_rank(index: TextIndex, query: GistQuery, candidates) -> list[tuple[int, float | None]]:
    """Candidates ordered by query likelihood, unscorable nodes last,
    node id breaking ties."""
    pool = sorted(candidates)
    if not pool:
        raise ValueError("candidate set is empty")
    terms = query_terms(query)
    scored = [(node, query_likelihood(index, terms, node)) for node in pool]
    with_score = sorted(
        (item for item in scored if item[1] is not None), key=lambda it: (-it[1], it[0])
    )
    without = [item for item in scored if item[1] is None]
    return with_score + without


def reciprocal_ranks(ranked: list[tuple[int, float | None]]) -> dict[int, float]:
    """1/rank for scored nodes, 0 for unscorable ones."""
    out: dict[int, float] = {}
    for pos, (node, score) in enumerate(ranked, start=1):
        out[node] = 0.0 if score is None else 1.0 / pos
    return out
