"""Cross-validated evaluation with feature-set ablations.

Queries are dealt into folds by a salted hash of their ids, so the split
is deterministic, balanced, and independent of input order. Each fold is
ranked by a model trained on the remaining folds; pooled MAP and NDCG
skip queries whose candidate pool contains no relevant node (they are
reported as a coverage gap instead of a zero).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .metrics import average_precision, ndcg_at_k, precision_at_k
from .ranking import FEATURE_SETS, CAConfig, CoordinateAscentRanker

FOLD_SALT = "gistrank-fold-v1"

Judgments = dict[str, dict[int, int]]


def load_qrels(path: str | Path) -> Judgments:
    """Read ``query_id <TAB> node_id <TAB> grade`` lines, grades 0..5,
    at most one grade-5 node per query."""
    out: Judgments = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != 3:
                raise ValueError(f"{path}:{lineno}: expected 3 fields, got {len(fields)}")
            qid, raw_node, raw_grade = fields
            node, grade = int(raw_node), int(raw_grade)
            if not 0 <= grade <= 5:
                raise ValueError(f"{path}:{lineno}: grade must be in 0..5, got {grade}")
            per_query = out.setdefault(qid, {})
            if node in per_query:
                raise ValueError(f"{path}:{lineno}: duplicate judgment for node {node}")
            per_query[node] = grade
    for qid, grades in out.items():
        if sum(1 for g in grades.values() if g == 5) > 1:
            raise ValueError(f"query {qid!r} has more than one grade-5 node")
    return out


def write_qrels(judgments: Judgments, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for qid in sorted(judgments):
            for node in sorted(judgments[qid]):
                fh.write(f"{qid}\t{node}\t{judgments[qid][node]}\n")


def relevant_nodes(judgments: Judgments, query_id: str, min_grade: int = 4) -> set[int]:
    return {n for n, g in judgments.get(query_id, {}).items() if g >= min_grade}


def assign_folds(query_ids, folds: int, salt: str = FOLD_SALT) -> dict[str, int]:
    """Deterministic balanced fold assignment: order queries by a salted
    hash, then deal them round-robin."""
    ids = list(query_ids)
    if len(set(ids)) != len(ids):
        raise ValueError("query ids must be unique")
    if folds < 2:
        raise ValueError("folds must be >= 2")
    if len(ids) < folds:
        raise ValueError(f"need at least {folds} queries for {folds} folds, got {len(ids)}")

    def key(qid: str) -> tuple[str, str]:
        digest = hashlib.sha256(f"{salt}:{qid}".encode("utf-8")).hexdigest()
        return digest, qid

    return {qid: i % folds for i, qid in enumerate(sorted(ids, key=key))}


@dataclass
class RankingSample:
    """One query's candidate table ready for training or scoring.

    Rows are sorted by node id so ranking ties resolve to the smaller id.
    ``relevant`` is the full judged-relevant set; members outside the
    candidate pool count as misses at evaluation time.
    """

    query_id: str
    nodes: list[int]
    X: np.ndarray
    relevant: set[int] = field(default_factory=set)

    @classmethod
    def from_features(cls, query_id: str, features: dict[int, np.ndarray], relevant) -> "RankingSample":
        nodes = sorted(features)
        X = (
            np.vstack([features[n] for n in nodes])
            if nodes
            else np.zeros((0, 0), dtype=np.float64)
        )
        return cls(query_id=query_id, nodes=nodes, X=X, relevant=set(relevant))

    @property
    def y(self) -> np.ndarray:
        return np.array([1.0 if n in self.relevant else 0.0 for n in self.nodes])


@dataclass
class QueryMetrics:
    query_id: str
    fold: int
    num_candidates: int
    num_relevant: int
    ap: float | None
    ndcg10: float
    p10: float


@dataclass
class ConfigResult:
    """Per-config cross-validation outcome."""

    feature_set: str
    per_query: list[QueryMetrics]
    rankings: dict[str, list[tuple[int, float]]]
    models: dict[int, CoordinateAscentRanker]

    @property
    def covered(self) -> list[QueryMetrics]:
        return [m for m in self.per_query if m.ap is not None]

    @property
    def map_score(self) -> float:
        covered = self.covered
        if not covered:
            return 0.0
        return sum(m.ap for m in covered) / len(covered)

    @property
    def ndcg10(self) -> float:
        covered = self.covered
        if not covered:
            return 0.0
        return sum(m.ndcg10 for m in covered) / len(covered)

    @property
    def p10(self) -> float:
        if not self.per_query:
            return 0.0
        return sum(m.p10 for m in self.per_query) / len(self.per_query)


@dataclass
class CVResult:
    folds: dict[str, int]
    per_config: dict[str, ConfigResult]


def _train_ranker(
    samples: list[RankingSample], cfg: CAConfig, mask: tuple[int, ...]
) -> CoordinateAscentRanker:
    usable = [s for s in samples if s.nodes]
    if not usable:
        raise ValueError("no training query has candidates")
    X = np.vstack([s.X for s in usable])
    y = np.concatenate([s.y for s in usable])
    qids = np.concatenate([[s.query_id] * len(s.nodes) for s in usable])
    ranker = CoordinateAscentRanker.from_config(cfg, feature_mask=mask)
    return ranker.fit(X, y, qids)


def _rank_sample(ranker: CoordinateAscentRanker, sample: RankingSample) -> list[tuple[int, float]]:
    if not sample.nodes:
        return []
    scores = ranker.decision_function(sample.X)
    order = sorted(range(len(sample.nodes)), key=lambda i: (-scores[i], sample.nodes[i]))
    return [(sample.nodes[i], float(scores[i])) for i in order]


def score_ranking(
    query_id: str,
    fold: int,
    ranking: list[tuple[int, float]],
    relevant: set[int],
    k: int = 10,
) -> QueryMetrics:
    ranked = [node for node, _ in ranking]
    in_pool = relevant & set(ranked)
    ap = average_precision(ranked, relevant) if in_pool else None
    return QueryMetrics(
        query_id=query_id,
        fold=fold,
        num_candidates=len(ranked),
        num_relevant=len(in_pool),
        ap=ap,
        ndcg10=ndcg_at_k(ranked, relevant, k) if in_pool else 0.0,
        p10=precision_at_k(ranked, relevant, k) if ranked else 0.0,
    )


def cross_validate(
    samples: list[RankingSample],
    folds: int = 5,
    cfg: CAConfig | None = None,
    feature_sets=("all", "no-border", "no-intermediate", "only-border"),
) -> CVResult:
    """k-fold cross-validation over prepared per-query samples, repeated
    for every requested feature-set configuration."""
    cfg = cfg or CAConfig()
    by_id = {s.query_id: s for s in samples}
    fold_of = assign_folds(list(by_id), folds)

    per_config: dict[str, ConfigResult] = {}
    for name in feature_sets:
        if name not in FEATURE_SETS:
            raise ValueError(f"unknown feature set {name!r}; choose from {sorted(FEATURE_SETS)}")
        mask = FEATURE_SETS[name]
        rankings: dict[str, list[tuple[int, float]]] = {}
        per_query: list[QueryMetrics] = []
        models: dict[int, CoordinateAscentRanker] = {}
        for fold in range(folds):
            train = [s for s in samples if fold_of[s.query_id] != fold]
            test = [s for s in samples if fold_of[s.query_id] == fold]
            if not test:
                continue
            ranker = _train_ranker(train, cfg, mask)
            models[fold] = ranker
            for sample in test:
                ranking = _rank_sample(ranker, sample)
                rankings[sample.query_id] = ranking
                per_query.append(
                    score_ranking(sample.query_id, fold, ranking, sample.relevant)
                )
        per_query.sort(key=lambda m: m.query_id)
        per_config[name] = ConfigResult(
            feature_set=name, per_query=per_query, rankings=rankings, models=models
        )
    return CVResult(folds=fold_of, per_config=per_config)
