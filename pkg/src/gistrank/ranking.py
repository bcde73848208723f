"""Step 5: listwise linear ranking trained by coordinate ascent on MAP.

The ranker follows the scikit-learn estimator conventions (constructor
parameters stored verbatim, trailing-underscore fitted attributes,
``get_params``/``set_params`` inherited) so it can be inspected and tuned
with the usual tooling. Rows belonging to one query are grouped through a
``qids`` array passed to :meth:`CoordinateAscentRanker.fit`; rows within a
query should be pre-sorted by the caller's tie-break key, because ranking
ties resolve to the earlier row.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_random_state

from .features import FEATURE_NAMES, NUM_FEATURES

# Ablation groups over the 15 features (0-based indices).
_BORDER = tuple(range(4, 12))
_INTERMEDIATE = (1, 2, 3)
FEATURE_SETS: dict[str, tuple[int, ...]] = {
    "all": tuple(range(NUM_FEATURES)),
    "no-border": tuple(i for i in range(NUM_FEATURES) if i not in _BORDER),
    "no-intermediate": tuple(i for i in range(NUM_FEATURES) if i not in _INTERMEDIATE),
    "only-border": _BORDER,
}


@dataclass
class CAConfig:
    """Coordinate-ascent search budget and step schedule."""

    restarts: int = 5
    max_sweeps: int = 25
    step_base: float = 0.05
    step_scale: float = 2.0
    steps_per_direction: int = 10
    tolerance: float = 1e-4
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if min(self.restarts, self.max_sweeps, self.steps_per_direction) < 1:
            raise ValueError("restarts, max_sweeps, steps_per_direction must be >= 1")
        if self.step_base <= 0 or self.step_scale <= 0 or self.tolerance <= 0:
            raise ValueError("step_base, step_scale, tolerance must be > 0")


def _group_rows(qids: np.ndarray) -> list[np.ndarray]:
    order: dict[object, list[int]] = {}
    for i, q in enumerate(qids):
        order.setdefault(q, []).append(i)
    return [np.asarray(rows, dtype=np.intp) for _, rows in sorted(order.items(), key=lambda kv: str(kv[0]))]


def _ap_of_order(rel_in_rank_order: np.ndarray) -> float:
    hits = np.flatnonzero(rel_in_rank_order)
    if hits.size == 0:
        return 0.0
    return float(np.mean((np.arange(hits.size) + 1) / (hits + 1)))


def _mean_ap(score_blocks: list[np.ndarray], rel_blocks: list[np.ndarray]) -> float:
    total = 0.0
    counted = 0
    for scores, rel in zip(score_blocks, rel_blocks):
        if not rel.any():
            continue
        order = np.lexsort((np.arange(scores.size), -scores))
        total += _ap_of_order(rel[order])
        counted += 1
    if counted == 0:
        raise ValueError("no training query has a relevant candidate")
    return total / counted


class CoordinateAscentRanker(BaseEstimator):
    """Linear scoring function fitted by restarted coordinate ascent.

    One weight per feature; each sweep probes every feature with a
    geometric ladder of additive steps in both directions and keeps the
    single best weight whenever it improves training MAP, so the training
    trace is non-decreasing by construction. Features are min-max
    normalized over the training rows; test values may leave [0, 1] and
    are intentionally not clipped.

    ``feature_mask`` restricts the model to a subset of feature indices
    (see ``FEATURE_SETS``); masked features keep weight 0.
    """

    def __init__(
        self,
        restarts: int = 5,
        max_sweeps: int = 25,
        step_base: float = 0.05,
        step_scale: float = 2.0,
        steps_per_direction: int = 10,
        tolerance: float = 1e-4,
        rng_seed: int = 0,
        normalize: bool = True,
        feature_mask: tuple[int, ...] | None = None,
    ):
        self.restarts = restarts
        self.max_sweeps = max_sweeps
        self.step_base = step_base
        self.step_scale = step_scale
        self.steps_per_direction = steps_per_direction
        self.tolerance = tolerance
        self.rng_seed = rng_seed
        self.normalize = normalize
        self.feature_mask = feature_mask

    @classmethod
    def from_config(cls, cfg: CAConfig, **kwargs) -> "CoordinateAscentRanker":
        return cls(
            restarts=cfg.restarts,
            max_sweeps=cfg.max_sweeps,
            step_base=cfg.step_base,
            step_scale=cfg.step_scale,
            steps_per_direction=cfg.steps_per_direction,
            tolerance=cfg.tolerance,
            rng_seed=cfg.rng_seed,
            **kwargs,
        )

    # -- training ------------------------------------------------------------

    def fit(self, X, y, qids) -> "CoordinateAscentRanker":
        X = check_array(X, dtype=np.float64)
        y = np.asarray(y)
        qids = np.asarray(qids)
        if y.shape[0] != X.shape[0] or qids.shape[0] != X.shape[0]:
            raise ValueError("X, y, and qids must have matching first dimensions")
        CAConfig(
            restarts=self.restarts,
            max_sweeps=self.max_sweeps,
            step_base=self.step_base,
            step_scale=self.step_scale,
            steps_per_direction=self.steps_per_direction,
            tolerance=self.tolerance,
            rng_seed=self.rng_seed,
        )

        n_features = X.shape[1]
        active = np.asarray(
            sorted(self.feature_mask) if self.feature_mask is not None else range(n_features),
            dtype=np.intp,
        )
        if active.size == 0 or active.min() < 0 or active.max() >= n_features:
            raise ValueError("feature_mask is empty or out of range")

        if self.normalize:
            lo = X.min(axis=0)
            hi = X.max(axis=0)
        else:
            lo = np.zeros(n_features)
            hi = np.ones(n_features)
        span = hi - lo
        scale = np.where(span > 0, span, 1.0)
        Xn = (X - lo) / scale

        rel = np.asarray(y, dtype=np.float64) > 0
        groups = _group_rows(qids)
        rel_blocks = [rel[g] for g in groups]
        if not any(b.any() for b in rel_blocks):
            raise ValueError("degenerate training set: no relevant candidate anywhere")
        feat_blocks = [Xn[g][:, active] for g in groups]

        rng = check_random_state(self.rng_seed)
        best: tuple[float, np.ndarray, list[float]] | None = None
        for restart in range(self.restarts):
            if restart == 0:
                w = np.full(active.size, 1.0 / active.size)
            else:
                w = rng.uniform(-1.0, 1.0, size=active.size)
                if not np.any(np.abs(w) > 1e-9):
                    w[0] = 1.0
            w, final_map, trace = self._ascend(w, feat_blocks, rel_blocks)
            if best is None or final_map > best[0] + 1e-12:
                best = (final_map, w, trace)

        assert best is not None
        weights = np.zeros(n_features)
        weights[active] = best[1]
        self.weights_ = weights
        self.norm_min_ = lo
        self.norm_max_ = hi
        self.active_features_ = tuple(int(i) for i in active)
        self.train_map_ = best[0]
        self.train_map_trace_ = best[2]
        self.n_features_in_ = n_features
        return self

    def _ascend(
        self,
        w: np.ndarray,
        feat_blocks: list[np.ndarray],
        rel_blocks: list[np.ndarray],
    ) -> tuple[np.ndarray, float, list[float]]:
        w = w.copy()
        score_blocks = [fb @ w for fb in feat_blocks]
        current = _mean_ap(score_blocks, rel_blocks)
        trace = [current]
        for _ in range(self.max_sweeps):
            sweep_start = current
            for j in range(w.size):
                best_delta = 0.0
                best_map = current
                for direction in (1.0, -1.0):
                    step = self.step_base
                    for _ in range(self.steps_per_direction):
                        delta = direction * step
                        probe = [
                            sb + delta * fb[:, j]
                            for sb, fb in zip(score_blocks, feat_blocks)
                        ]
                        m = _mean_ap(probe, rel_blocks)
                        if m > best_map + 1e-12:
                            best_map = m
                            best_delta = delta
                        step *= self.step_scale
                if best_delta != 0.0:
                    w[j] += best_delta
                    score_blocks = [
                        sb + best_delta * fb[:, j]
                        for sb, fb in zip(score_blocks, feat_blocks)
                    ]
                    current = best_map
            trace.append(current)
            if current - sweep_start < self.tolerance:
                break
        return w, current, trace

    # -- scoring ---------------------------------------------------------------

    def decision_function(self, X) -> np.ndarray:
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"expected {self.n_features_in_} features, got {X.shape[1]}"
            )
        span = self.norm_max_ - self.norm_min_
        scale = np.where(span > 0, span, 1.0)
        return ((X - self.norm_min_) / scale) @ self.weights_

    def predict(self, X) -> np.ndarray:
        return self.decision_function(X)


def rank_nodes(ranker: CoordinateAscentRanker, features: dict[int, np.ndarray]) -> list[tuple[int, float]]:
    """Score a per-node feature table and sort descending, node id ascending
    on ties."""
    nodes = sorted(features)
    if not nodes:
        return []
    X = np.vstack([features[n] for n in nodes])
    scores = ranker.decision_function(X)
    order = sorted(range(len(nodes)), key=lambda i: (-scores[i], nodes[i]))
    return [(nodes[i], float(scores[i])) for i in order]


# -- model persistence ----------------------------------------------------------


def save_model(ranker: CoordinateAscentRanker, path: str | Path) -> None:
    """Write one weight line per feature plus min/max normalization lines."""
    names = FEATURE_NAMES
    if len(names) != ranker.n_features_in_:
        raise ValueError("model width does not match the feature naming")
    with open(path, "w", encoding="utf-8") as fh:
        for name, w in zip(names, ranker.weights_):
            fh.write(f"{name}\t{float(w)!r}\n")
        for name, lo, hi in zip(names, ranker.norm_min_, ranker.norm_max_):
            fh.write(f"{name}\t{float(lo)!r}\t{float(hi)!r}\n")


def load_model(path: str | Path) -> CoordinateAscentRanker:
    """Rebuild a fitted ranker from :func:`save_model` output."""
    weights: dict[str, float] = {}
    lo: dict[str, float] = {}
    hi: dict[str, float] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            fields = line.split("\t")
            if fields[0] not in FEATURE_NAMES:
                raise ValueError(f"{path}:{lineno}: unknown feature {fields[0]!r}")
            if len(fields) == 2:
                weights[fields[0]] = float(fields[1])
            elif len(fields) == 3:
                lo[fields[0]] = float(fields[1])
                hi[fields[0]] = float(fields[2])
            else:
                raise ValueError(f"{path}:{lineno}: expected 2 or 3 fields")
    missing = [n for n in FEATURE_NAMES if n not in weights or n not in lo]
    if missing:
        raise ValueError(f"model file {path} is missing features: {missing}")

    ranker = CoordinateAscentRanker()
    ranker.weights_ = np.array([weights[n] for n in FEATURE_NAMES])
    ranker.norm_min_ = np.array([lo[n] for n in FEATURE_NAMES])
    ranker.norm_max_ = np.array([hi[n] for n in FEATURE_NAMES])
    ranker.active_features_ = tuple(range(len(FEATURE_NAMES)))
    ranker.n_features_in_ = len(FEATURE_NAMES)
    return ranker
