"""Path scoring, per-view ranking, and reciprocal rank fusion.

A candidate is any category with direct training samples; its score in one
view aggregates per-node similarities along the root-to-node path:

    leaf_only       s_d                      (terminal node only)
    simple_average  (1/d) * sum(s_i)         (all levels equal)
    weighted        sum(w_i * s_i),  w_i = i / (1 + 2 + ... + d)

Node similarity is the maximum cosine between the query and any centroid
stored at the node. The two views are ranked independently and merged by
reciprocal rank fusion: fused(p) = 1/(k + rank_lex(p)) + 1/(k + rank_sem(p)).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .centroids import DualVector, ModelConfig, NodeCentroids
from .errors import ValidationError
from .taxonomy import TaxonomyTree, ancestor_paths
from .vectorize import SparseVector

VIEW_LEXICAL = "lexical"
VIEW_SEMANTIC = "semantic"


def path_score(
    sims: list[float], strategy: str, depth_weights: tuple[float, ...] | None = None
) -> float:
    """Aggregate root-first per-node similarities into one path score."""
    d = len(sims)
    if d == 0:
        raise ValidationError("path_score requires at least one node similarity")
    if strategy == "leaf_only":
        return float(sims[-1])
    if strategy == "simple_average":
        return float(sum(sims) / d)
    if strategy == "weighted":
        if depth_weights:
            w = np.asarray(depth_weights[:d], dtype=np.float64)
            if w.size < d:
                raise ValidationError(
                    f"depth_weights covers {w.size} levels but the path has depth {d}"
                )
        else:
            w = np.arange(1, d + 1, dtype=np.float64)
        w = w / w.sum()
        return float(np.dot(w, np.asarray(sims, dtype=np.float64)))
    raise ValidationError(f"unknown scoring strategy: {strategy!r}")


def node_similarity(query_unit, node: NodeCentroids, view: str) -> float:
    """Max cosine between the (pre-normalized) query and the node's centroids
    in one view. A zero query or a degenerate centroid contributes 0."""
    vc = node.lexical if view == VIEW_LEXICAL else node.semantic
    if isinstance(query_unit, SparseVector):
        if query_unit.nnz == 0:
            return 0.0
        sims = vc.unit[:, query_unit.indices] @ query_unit.values
    else:
        sims = vc.unit @ query_unit
    return float(np.max(sims))


@dataclass
class RankedList:
    """One view's full candidate ranking: paths sorted by score descending,
    ties broken lexicographically; ranks are dense 1..P."""

    paths: list[str]
    scores: dict[str, float]
    ranks: dict[str, int]


def rank_paths(scored: dict[str, float]) -> RankedList:
    ordered = sorted(scored, key=lambda p: (-scored[p], p))
    return RankedList(
        paths=ordered, scores=scored, ranks={p: i + 1 for i, p in enumerate(ordered)}
    )


def rrf_fuse(lexical: RankedList, semantic: RankedList, rrf_k: float) -> list[tuple[str, float]]:
    """Merge two rankings over the same candidate set.

    Fused score is the sum of reciprocal shifted ranks; ties are broken by
    the better (smaller) semantic rank, then lexicographically by path.
    """
    if set(lexical.ranks) != set(semantic.ranks):
        raise ValidationError("rrf_fuse requires both rankings to cover the same path set")
    if rrf_k <= 0:
        raise ValidationError(f"rrf_k must be positive, got {rrf_k}")
    fused = {
        p: 1.0 / (rrf_k + lexical.ranks[p]) + 1.0 / (rrf_k + semantic.ranks[p])
        for p in lexical.ranks
    }
    ordered = sorted(fused, key=lambda p: (-fused[p], semantic.ranks[p], p))
    return [(p, fused[p]) for p in ordered]


@dataclass
class PathTrace:
    """Interpretability record for one candidate in one view: the max-cosine
    similarity at every node along the path (root segment first) and the
    strategy aggregate."""

    node_sims: list[tuple[str, float]]
    aggregate: float


@dataclass
class PredictionEntry:
    path: str
    fused_score: float
    lexical_rank: int | None = None
    semantic_rank: int | None = None
    lexical: PathTrace | None = None
    semantic: PathTrace | None = None

    def to_record(self) -> dict:
        rec = {"path": self.path, "score": self.fused_score}
        if self.lexical_rank is not None:
            rec["lexical_rank"] = self.lexical_rank
            rec["semantic_rank"] = self.semantic_rank
            rec["lexical"] = {
                "aggregate": self.lexical.aggregate,
                "node_sims": [[p, s] for p, s in self.lexical.node_sims],
            }
            rec["semantic"] = {
                "aggregate": self.semantic.aggregate,
                "node_sims": [[p, s] for p, s in self.semantic.node_sims],
            }
        return rec


@dataclass
class Prediction:
    """Ordered top-k output for one query."""

    entries: list[PredictionEntry]
    k: int

    @property
    def top_path(self) -> str:
        return self.entries[0].path

    def paths(self) -> list[str]:
        return [e.path for e in self.entries]

    def to_record(self, query_id: str | None = None) -> dict:
        rec = {"k": self.k, "entries": [e.to_record() for e in self.entries]}
        if query_id is not None:
            rec = {"query_id": query_id, **rec}
        return rec


class CentroidScorer:
    """Stacked-matrix scorer over an immutable snapshot of the centroid set.

    All centroid unit vectors of one view are stored as one matrix so a
    query's node similarities come from a single product; per-node maxima
    are then reduced over each node's row span. Rebuild after any update.
    """

    def __init__(self, tree: TaxonomyTree, centroids: dict[str, NodeCentroids]):
        self.node_order = sorted(centroids)
        self._node_pos = {p: i for i, p in enumerate(self.node_order)}
        self.candidates = tree.predictable_paths()
        self._candidate_pos = {p: i for i, p in enumerate(self.candidates)}
        self._candidate_chains = [
            [self._node_pos[a] for a in ancestor_paths(p)] for p in self.candidates
        ]
        self._lex_matrix, self._lex_starts = self._stack(centroids, VIEW_LEXICAL)
        self._sem_matrix, self._sem_starts = self._stack(centroids, VIEW_SEMANTIC)

    def _stack(self, centroids: dict[str, NodeCentroids], view: str):
        blocks, starts, offset = [], [], 0
        for path in self.node_order:
            vc = centroids[path].lexical if view == VIEW_LEXICAL else centroids[path].semantic
            blocks.append(vc.unit)
            starts.append(offset)
            offset += vc.k
        return np.vstack(blocks), np.asarray(starts, dtype=np.intp)

    def node_similarities(self, query, view: str) -> np.ndarray:
        """Similarity of the query to every node, aligned with node_order."""
        matrix = self._lex_matrix if view == VIEW_LEXICAL else self._sem_matrix
        starts = self._lex_starts if view == VIEW_LEXICAL else self._sem_starts
        if isinstance(query, SparseVector):
            if query.dim != matrix.shape[1]:
                raise ValidationError(
                    f"query dimension {query.dim} does not match model ({matrix.shape[1]})"
                )
            if query.nnz == 0:
                return np.zeros(len(self.node_order), dtype=np.float64)
            per_centroid = matrix[:, query.indices] @ query.values
        else:
            query = np.asarray(query, dtype=np.float64)
            norm = np.linalg.norm(query)
            if norm == 0.0:
                return np.zeros(len(self.node_order), dtype=np.float64)
            per_centroid = matrix @ (query / norm)
        return np.maximum.reduceat(per_centroid, starts)

    def rank_view(self, query, view: str, config: ModelConfig) -> RankedList:
        """Score and rank every candidate path in one view."""
        sims = self.node_similarities(query, view)
        scored = {
            path: path_score(
                [float(sims[i]) for i in chain], config.scoring, config.depth_weights
            )
            for path, chain in zip(self.candidates, self._candidate_chains)
        }
        return rank_paths(scored)

    def predict(self, dual: DualVector, config: ModelConfig, k: int) -> Prediction:
        """Full dual-view prediction with per-node similarity traces."""
        if k < 1:
            raise ValidationError(f"k must be >= 1, got {k}")
        lex_sims = self.node_similarities(dual.lexical, VIEW_LEXICAL)
        sem_sims = self.node_similarities(dual.semantic, VIEW_SEMANTIC)

        lex_scored, sem_scored = {}, {}
        for path, chain in zip(self.candidates, self._candidate_chains):
            lex_scored[path] = path_score(
                [float(lex_sims[i]) for i in chain], config.scoring, config.depth_weights
            )
            sem_scored[path] = path_score(
                [float(sem_sims[i]) for i in chain], config.scoring, config.depth_weights
            )
        lex_ranked = rank_paths(lex_scored)
        sem_ranked = rank_paths(sem_scored)
        fused = rrf_fuse(lex_ranked, sem_ranked, config.rrf_k)

        entries = []
        for path, score in fused[: min(k, len(fused))]:
            chain = self._candidate_chains[self._candidate_pos[path]]
            names = ancestor_paths(path)
            entries.append(
                PredictionEntry(
                    path=path,
                    fused_score=score,
                    lexical_rank=lex_ranked.ranks[path],
                    semantic_rank=sem_ranked.ranks[path],
                    lexical=PathTrace(
                        node_sims=[(n, float(lex_sims[i])) for n, i in zip(names, chain)],
                        aggregate=lex_scored[path],
                    ),
                    semantic=PathTrace(
                        node_sims=[(n, float(sem_sims[i])) for n, i in zip(names, chain)],
                        aggregate=sem_scored[path],
                    ),
                )
            )
        return Prediction(entries=entries, k=k)
