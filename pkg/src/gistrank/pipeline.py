"""End-to-end orchestration: link, expand, cluster, select, rank.

Every stage is a pure function of the immutable graph and the query, so
queries can be prepared by a worker pool; results are always emitted in
query-id order regardless of completion order. All randomness derives
from one master seed through labeled hashing, so adding a new consumer
never perturbs the streams of existing ones.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator

from .candidates import CandidateSet, select_candidates
from .clustering import ClusterSet, build_similarity_graph, louvain
from .evaluation import (
    Judgments,
    RankingSample,
    cross_validate,
    relevant_nodes,
)
from .expansion import ExpansionConfig, LayeredNodeSets, expand
from .features import extract_features
from .graph import KnowledgeGraph, load_graph
from .linking import GistQuery, LinkResult, link
from .ranking import CAConfig, CoordinateAscentRanker, FEATURE_SETS, rank_nodes
from .relatedness import RelatednessParams
from .retrieval import TextIndex, build_index, ql_rank, reciprocal_ranks

BASELINES = ("ql", "max_cluster", "random_seeds")


def derive_seed(master: int, *labels) -> int:
    """Stable per-purpose seed: hash the master seed with a label chain."""
    text = ":".join([str(master), *map(str, labels)])
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") % (2**63)


@dataclass
class PipelineConfig:
    """Everything one run needs; fully serializable to JSON."""

    nodes_path: str = ""
    edges_path: str = ""
    queries_path: str = ""
    qrels_path: str = ""
    output_dir: str = "out"
    expansion: ExpansionConfig = field(default_factory=ExpansionConfig)
    relatedness: RelatednessParams = field(default_factory=RelatednessParams)
    ca: CAConfig = field(default_factory=CAConfig)
    top_k_borders: int | None = 20
    mu: float = 2000.0
    folds: int = 5
    rng_seed: int = 0
    feature_set: str = "all"
    baseline: str = ""
    run_tag: str = "gistrank"
    match_categories: bool = False
    min_grade: int = 4
    workers: int = 1

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        data = dict(data)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        for key, sub in (("expansion", ExpansionConfig), ("relatedness", RelatednessParams), ("ca", CAConfig)):
            if key in data and isinstance(data[key], dict):
                data[key] = sub(**data[key])
        cfg = cls(**data)
        if cfg.feature_set not in FEATURE_SETS:
            raise ValueError(f"unknown feature set {cfg.feature_set!r}")
        if cfg.baseline and cfg.baseline not in BASELINES:
            raise ValueError(f"unknown baseline {cfg.baseline!r}")
        return cfg


@dataclass
class QueryArtifacts:
    """Everything the pipeline derived for one query, or the failure note."""

    query: GistQuery
    link_result: LinkResult | None = None
    layers: LayeredNodeSets | None = None
    clusters: ClusterSet | None = None
    cand: CandidateSet | None = None
    ql_ranking: list[tuple[int, float | None]] = field(default_factory=list)
    ql_reciprocal: dict[int, float] = field(default_factory=dict)
    features: dict[int, np.ndarray] = field(default_factory=dict)
    error: str = ""

    @property
    def ok(self) -> bool:
        return not self.error


def run_query(
    graph: KnowledgeGraph,
    index: TextIndex,
    query: GistQuery,
    cfg: PipelineConfig,
) -> QueryArtifacts:
    """Steps 1 through 4 plus feature extraction for a single query."""
    art = QueryArtifacts(query=query)
    art.link_result = link(graph, query, match_categories=cfg.match_categories)
    if not art.link_result.seeds:
        art.error = "no query string could be linked"
        return art
    art.layers = expand(graph, art.link_result.seeds, cfg.expansion)
    similarity = build_similarity_graph(art.layers, cfg.relatedness)
    art.clusters = louvain(similarity, rng_seed=derive_seed(cfg.rng_seed, "louvain", query.query_id))
    art.cand = select_candidates(art.layers, art.clusters, cfg.relatedness, cfg.top_k_borders)
    art.ql_ranking = ql_rank(index, query, art.cand.candidates)
    art.ql_reciprocal = reciprocal_ranks(art.ql_ranking)
    art.features = extract_features(graph, art.layers, art.clusters, art.cand, art.ql_reciprocal)
    return art


def prepare_queries(
    graph: KnowledgeGraph,
    index: TextIndex,
    queries: list[GistQuery],
    cfg: PipelineConfig,
) -> list[QueryArtifacts]:
    """Run all queries, tolerating per-query failures.

    A failing query yields an artifact with its error message; the batch
    always completes.
    """

    def safe(query: GistQuery) -> QueryArtifacts:
        try:
            return run_query(graph, index, query, cfg)
        except Exception as exc:  # partial-failure contract
            return QueryArtifacts(query=query, error=f"{type(exc).__name__}: {exc}")

    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(safe, queries))
    else:
        results = [safe(q) for q in queries]
    return sorted(results, key=lambda a: a.query.query_id)


def samples_from_artifacts(
    artifacts: list[QueryArtifacts], judgments: Judgments, min_grade: int = 4
) -> list[RankingSample]:
    return [
        RankingSample.from_features(
            a.query.query_id, a.features, relevant_nodes(judgments, a.query.query_id, min_grade)
        )
        for a in artifacts
        if a.ok and a.features
    ]


class GistDetector(BaseEstimator):
    """Whole pipeline behind a fit/predict surface.

    ``fit`` prepares each training query, extracts candidate features,
    and trains the coordinate-ascent ranker; ``predict`` returns a ranked
    (node_id, score) list per query. Estimator parameters are the
    pipeline hyperparameters, so the object plays well with ``get_params``
    based tooling.
    """

    def __init__(
        self,
        graph: KnowledgeGraph | None = None,
        max_path_len: int = 4,
        border_hops: int = 2,
        length_decay: float = 0.25,
        num_paths: int = 3,
        relatedness_path_len: int = 4,
        top_k_borders: int | None = 20,
        mu: float = 2000.0,
        feature_set: str = "all",
        ca: CAConfig | None = None,
        rng_seed: int = 0,
        min_grade: int = 4,
    ):
        self.graph = graph
        self.max_path_len = max_path_len
        self.border_hops = border_hops
        self.length_decay = length_decay
        self.num_paths = num_paths
        self.relatedness_path_len = relatedness_path_len
        self.top_k_borders = top_k_borders
        self.mu = mu
        self.feature_set = feature_set
        self.ca = ca
        self.rng_seed = rng_seed
        self.min_grade = min_grade

    def _config(self) -> PipelineConfig:
        return PipelineConfig(
            expansion=ExpansionConfig(max_path_len=self.max_path_len, border_hops=self.border_hops),
            relatedness=RelatednessParams(
                length_decay=self.length_decay,
                num_paths=self.num_paths,
                max_path_len=self.relatedness_path_len,
            ),
            ca=self.ca or CAConfig(),
            top_k_borders=self.top_k_borders,
            mu=self.mu,
            feature_set=self.feature_set,
            rng_seed=self.rng_seed,
            min_grade=self.min_grade,
        )

    def _prepare(self, queries: list[GistQuery]) -> list[QueryArtifacts]:
        if self.graph is None:
            raise ValueError("a knowledge graph is required")
        if not hasattr(self, "index_"):
            self.index_ = build_index(self.graph, mu=self.mu)
        return prepare_queries(self.graph, self.index_, queries, self._config())

    def fit(self, queries: list[GistQuery], judgments: Judgments) -> "GistDetector":
        artifacts = self._prepare(queries)
        samples = samples_from_artifacts(artifacts, judgments, self.min_grade)
        usable = [s for s in samples if s.nodes]
        if not usable:
            raise ValueError("no training query produced candidates")
        X = np.vstack([s.X for s in usable])
        y = np.concatenate([s.y for s in usable])
        qids = np.concatenate([[s.query_id] * len(s.nodes) for s in usable])
        ranker = CoordinateAscentRanker.from_config(
            self.ca or CAConfig(), feature_mask=FEATURE_SETS[self.feature_set]
        )
        self.ranker_ = ranker.fit(X, y, qids)
        return self

    def predict(self, queries: list[GistQuery]) -> list[list[tuple[int, float]]]:
        artifacts = self._prepare(queries)
        by_id = {a.query.query_id: a for a in artifacts}
        out = []
        for q in queries:
            art = by_id[q.query_id]
            out.append(rank_nodes(self.ranker_, art.features) if art.ok else [])
        return out


# -- baselines -------------------------------------------------------------------


def baseline_ranking(art: QueryArtifacts, which: str, rng_seed: int = 0) -> list[tuple[int, float]]:
    """Unsupervised reference rankings over the prepared artifacts."""
    if not art.ok:
        return []
    if which == "ql":
        return [(node, score if score is not None else float("-inf")) for node, score in art.ql_ranking]
    if which == "max_cluster":
        rows = []
        for node in sorted(art.cand.candidates):
            proximity = art.cand.proximity.get(node, {})
            rows.append((node, max(proximity.values(), default=0.0)))
        rows.sort(key=lambda item: (-item[1], item[0]))
        return rows
    if which == "random_seeds":
        seeds = sorted(art.link_result.seeds)
        rng = random.Random(derive_seed(rng_seed, "random-seeds", art.query.query_id))
        rng.shuffle(seeds)
        return [(node, 1.0 / (pos + 1)) for pos, node in enumerate(seeds)]
    raise ValueError(f"unknown baseline {which!r}; choose from {BASELINES}")


# -- run files and reports ---------------------------------------------------------


def format_score(score: float) -> str:
    return f"{score:.10g}"


def write_run(path: str | Path, rankings: dict[str, list[tuple[int, float]]], run_tag: str) -> None:
    """TREC-style run file: query, node, rank, score, tag."""
    with open(path, "w", encoding="utf-8") as fh:
        for qid in sorted(rankings):
            for pos, (node, score) in enumerate(rankings[qid], start=1):
                fh.write(f"{qid}\t{node}\t{pos}\t{format_score(score)}\t{run_tag}\n")


def load_run(path: str | Path) -> dict[str, list[tuple[int, float]]]:
    out: dict[str, list[tuple[int, float]]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != 5:
                raise ValueError(f"{path}:{lineno}: expected 5 fields, got {len(fields)}")
            qid, raw_node, raw_rank, raw_score, _tag = fields
            rows = out.setdefault(qid, [])
            if int(raw_rank) != len(rows) + 1:
                raise ValueError(f"{path}:{lineno}: ranks must be consecutive from 1")
            rows.append((int(raw_node), float(raw_score)))
    return out


def load_pipeline_inputs(cfg: PipelineConfig) -> tuple[KnowledgeGraph, TextIndex, list[GistQuery]]:
    from .linking import load_queries

    graph = load_graph(cfg.nodes_path, cfg.edges_path)
    index = build_index(graph, mu=cfg.mu)
    queries = load_queries(cfg.queries_path)
    return graph, index, queries
