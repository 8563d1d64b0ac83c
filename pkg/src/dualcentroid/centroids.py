"""Per-category centroid training over the taxonomy, plus incremental updates.

Centroids are computed bottom-up (post-order): a node with directly assigned
samples pools exactly those samples; a stale node (no direct samples) pools
every embedding in its subtree. Optional child sampling lets a direct-sampled
parent also absorb a seeded fraction of each child subtree. Every centroid
keeps its running sum and member count in float64 so later samples can be
folded in without touching unaffected nodes.

Multi-centroid mode splits a high-variance pool into agglomerative
subclusters (average linkage, cosine distance), picking the cluster count
that maximizes the mean silhouette; incremental updates refuse to touch
multi-centroid nodes rather than approximate a recluster.
"""

from __future__ import annotations

import hashlib
from collections import Counter
from dataclasses import dataclass, field, asdict

import numpy as np
from sklearn.cluster import AgglomerativeClustering
from sklearn.metrics import silhouette_score

from .errors import ReclusterRequiredError, ValidationError
from .taxonomy import TaxonomyTree, ancestor_paths
from .vectorize import SparseVector

SCORING_STRATEGIES = ("leaf_only", "simple_average", "weighted")


@dataclass
class ModelConfig:
    """Training/inference configuration.

    Defaults are the selected production configuration: single centroid per
    category, child sampling off, leaf-only path scoring, rank-fusion
    constant 40. ``cluster_min_samples`` and ``max_clusters`` have no
    reference values; 50 and 5 are our own defaults.
    """

    scoring: str = "leaf_only"
    rrf_k: float = 40.0
    top_k: int = 3
    multi_centroid: bool = False
    cluster_min_samples: int = 50
    max_clusters: int = 5
    child_sampling: bool = False
    child_sample_proportion: float = 0.5
    depth_weights: tuple[float, ...] | None = None
    max_features: int = 10_000
    min_df: int | float = 2
    max_df: int | float = 0.95
    ngram_range: tuple[int, int] = (1, 2)
    embedding_dim: int = 512
    embedder: str = "hash"
    embedding_source: str | None = None
    seed: int = 0

    def validate(self) -> "ModelConfig":
        if self.scoring not in SCORING_STRATEGIES:
            raise ValidationError(
                f"unknown scoring strategy {self.scoring!r}; expected one of {SCORING_STRATEGIES}"
            )
        if self.rrf_k <= 0:
            raise ValidationError(f"rrf_k must be positive, got {self.rrf_k}")
        if self.top_k < 1:
            raise ValidationError(f"top_k must be >= 1, got {self.top_k}")
        if not 0.0 < self.child_sample_proportion <= 1.0:
            raise ValidationError(
                f"child_sample_proportion must lie in (0, 1], got {self.child_sample_proportion}"
            )
        if self.max_clusters < 2:
            raise ValidationError(f"max_clusters must be >= 2, got {self.max_clusters}")
        if self.embedding_dim < 1:
            raise ValidationError(f"embedding_dim must be >= 1, got {self.embedding_dim}")
        return self

    def to_dict(self) -> dict:
        out = asdict(self)
        out["ngram_range"] = list(self.ngram_range)
        if self.depth_weights is not None:
            out["depth_weights"] = list(self.depth_weights)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ModelConfig":
        data = dict(data)
        data["ngram_range"] = tuple(data["ngram_range"])
        if data.get("depth_weights") is not None:
            data["depth_weights"] = tuple(data["depth_weights"])
        return cls(**data).validate()


@dataclass
class DualVector:
    """Paired lexical and semantic views of one document. The views stay
    separate end to end; they are never concatenated in the centroid model."""

    lexical: SparseVector
    semantic: np.ndarray


class ViewCentroids:
    """Centroids of one node in one view: per-centroid running sums, member
    counts, and the derived L2-normalized means used for scoring.

    The raw mean of centroid ``j`` is ``sums[j] / counts[j]``; ``unit[j]`` is
    its normalized form (a zero row when the mean is the zero vector, which
    is legal but flagged degenerate).
    """

    __slots__ = ("sums", "counts", "unit")

    def __init__(self, sums: np.ndarray, counts: np.ndarray):
        self.sums = np.asarray(sums, dtype=np.float64)
        self.counts = np.asarray(counts, dtype=np.int64)
        if self.sums.ndim != 2 or self.counts.shape != (self.sums.shape[0],):
            raise ValidationError("centroid sums/counts shapes disagree")
        if np.any(self.counts < 0):
            raise ValidationError("centroid member counts must be non-negative")
        self.unit = np.zeros_like(self.sums)
        self.refresh()

    @classmethod
    def empty(cls, dim: int) -> "ViewCentroids":
        """A single empty centroid slot, to be filled by accumulation."""
        return cls(np.zeros((1, dim), dtype=np.float64), np.zeros(1, dtype=np.int64))

    @property
    def k(self) -> int:
        return self.sums.shape[0]

    @property
    def total_count(self) -> int:
        return int(self.counts.sum())

    def means(self) -> np.ndarray:
        counts = np.maximum(self.counts, 1).astype(np.float64)
        return self.sums / counts[:, None]

    def refresh(self) -> None:
        means = self.means()
        norms = np.linalg.norm(means, axis=1)
        self.unit = np.divide(
            means, norms[:, None], out=np.zeros_like(means), where=norms[:, None] > 0.0
        )

    def accumulate(self, vec: np.ndarray | SparseVector) -> None:
        """Add one sample to a single-centroid slot without re-normalizing;
        call refresh() once all samples are in."""
        if self.k != 1:
            raise ValidationError("accumulate is only valid for single-centroid nodes")
        if isinstance(vec, SparseVector):
            if vec.nnz:
                self.sums[0, vec.indices] += vec.values
        else:
            self.sums[0] += vec
        self.counts[0] += 1

    def add_sample(self, vec: np.ndarray | SparseVector) -> None:
        """Fold one sample into a single-centroid view and re-normalize."""
        self.accumulate(vec)
        self.refresh()

    def is_degenerate(self) -> bool:
        return bool(np.any(np.linalg.norm(self.unit, axis=1) == 0.0))


@dataclass
class NodeCentroids:
    lexical: ViewCentroids
    semantic: ViewCentroids

    @property
    def max_k(self) -> int:
        return max(self.lexical.k, self.semantic.k)

    @classmethod
    def empty(cls, lex_dim: int, sem_dim: int) -> "NodeCentroids":
        return cls(lexical=ViewCentroids.empty(lex_dim), semantic=ViewCentroids.empty(sem_dim))


# -- deterministic sub-seeds -------------------------------------------------


def _derived_seed(*parts) -> int:
    digest = hashlib.blake2b("|".join(str(p) for p in parts).encode("utf-8"), digest_size=8)
    return int.from_bytes(digest.digest(), "little")


def _uniform_draw(*parts) -> float:
    """Deterministic pseudo-uniform in [0, 1) keyed by the given parts."""
    return _derived_seed(*parts) / 2.0**64


# -- clustering ---------------------------------------------------------------


def _cosine_distance_matrix(X: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(X, axis=1)
    safe = np.where(norms > 0.0, norms, 1.0)
    unit = X / safe[:, None]
    sim = unit @ unit.T
    # zero vectors get similarity 0 with everything (including themselves)
    zero = norms == 0.0
    sim[zero, :] = 0.0
    sim[:, zero] = 0.0
    dist = 1.0 - np.clip(sim, -1.0, 1.0)
    np.fill_diagonal(dist, 0.0)
    return dist


def cluster_embeddings(X: np.ndarray, max_clusters: int) -> list[np.ndarray] | None:
    """Partition rows of ``X`` into the silhouette-optimal number of
    agglomerative subclusters (average linkage, cosine distance).

    Tries every cluster count from 2 through ``max_clusters`` and keeps the
    one with the highest mean silhouette (smaller count wins ties). Returns
    per-cluster member index arrays ordered by first member, or None when no
    split beats a single centroid (best silhouette <= 0, fewer than two
    distinct vectors, or too few points to score a split).
    """
    n = X.shape[0]
    if n < 3 or np.unique(X, axis=0).shape[0] < 2:
        return None
    dist = _cosine_distance_matrix(X)
    best_score = -np.inf
    best_labels: np.ndarray | None = None
    for k in range(2, min(max_clusters, n - 1) + 1):
        labels = AgglomerativeClustering(
            n_clusters=k, metric="precomputed", linkage="average"
        ).fit_predict(dist)
        score = silhouette_score(dist, labels, metric="precomputed")
        if score > best_score:
            best_score = score
            best_labels = labels
    if best_labels is None or best_score <= 0.0:
        return None
    groups = [np.flatnonzero(best_labels == c) for c in np.unique(best_labels)]
    groups.sort(key=lambda g: int(g[0]))
    return groups


# -- training ----------------------------------------------------------------


def _pool_sums_lexical(vectors: list[SparseVector], ids, dim: int) -> np.ndarray:
    out = np.zeros(dim, dtype=np.float64)
    for i in ids:
        sv = vectors[i]
        if sv.nnz:
            out[sv.indices] += sv.values
    return out


def _pool_sums_semantic(matrix: np.ndarray, ids) -> np.ndarray:
    if len(ids) == 0:
        return np.zeros(matrix.shape[1], dtype=np.float64)
    return matrix[np.asarray(ids, dtype=np.intp)].sum(axis=0)


def _node_from_pool(
    lex_vectors: list[SparseVector],
    sem_matrix: np.ndarray,
    pool: list[int],
    lex_dim: int,
    config: ModelConfig,
) -> NodeCentroids:
    """Centroid set for one node's sample pool: a single mean per view, or
    per-view subcluster means when multi-centroid mode applies."""

    def build(view: str) -> ViewCentroids:
        groups: list[list[int]] = [pool]
        if config.multi_centroid and len(pool) > config.cluster_min_samples:
            if view == "lexical":
                X = np.stack([lex_vectors[i].to_dense() for i in pool])
            else:
                X = sem_matrix[np.asarray(pool, dtype=np.intp)]
            found = cluster_embeddings(X, config.max_clusters)
            if found is not None:
                groups = [[pool[int(j)] for j in g] for g in found]
        sums, counts = [], []
        for g in groups:
            if view == "lexical":
                sums.append(_pool_sums_lexical(lex_vectors, g, lex_dim))
            else:
                sums.append(_pool_sums_semantic(sem_matrix, g))
            counts.append(len(g))
        return ViewCentroids(np.stack(sums), np.array(counts, dtype=np.int64))

    return NodeCentroids(lexical=build("lexical"), semantic=build("semantic"))


def build_centroids(
    tree: TaxonomyTree,
    lex_vectors: list[SparseVector],
    sem_matrix: np.ndarray,
    paths: list[str],
    config: ModelConfig,
) -> dict[str, NodeCentroids]:
    """Compute centroid sets for every node of ``tree``.

    ``paths[i]`` is the canonical category of sample ``i``; nodes are visited
    post-order so each subtree's sample pool is final before its ancestors
    pool anything.
    """
    if not paths:
        raise ValidationError("cannot train centroids on an empty sample set")
    lex_dim = lex_vectors[0].dim if lex_vectors else 0

    direct: dict[str, list[int]] = {}
    for i, p in enumerate(paths):
        direct.setdefault(p, []).append(i)

    subtree: dict[str, list[int]] = {}
    centroids: dict[str, NodeCentroids] = {}
    for node in tree.post_order():
        own = direct.get(node.path, [])
        descendants: list[int] = []
        for child in node.sorted_children():
            descendants.extend(subtree[child.path])
        subtree[node.path] = own + descendants

        if node.direct_count > 0:
            pool = list(own)
            if config.child_sampling and node.children:
                rng = np.random.default_rng(
                    _derived_seed(config.seed, "child-sampling", node.path)
                )
                for child in node.sorted_children():
                    child_ids = subtree[child.path]
                    take = round(config.child_sample_proportion * len(child_ids))
                    if take > 0:
                        picked = rng.choice(len(child_ids), size=take, replace=False)
                        pool.extend(child_ids[int(j)] for j in sorted(picked))
        else:
            # stale node: inherit the entire descendant pool
            pool = list(subtree[node.path])
        centroids[node.path] = _node_from_pool(lex_vectors, sem_matrix, pool, lex_dim, config)
    return centroids


# -- incremental updates -------------------------------------------------------


@dataclass
class UpdatePlan:
    """Pure description of an incremental update, computed before any
    mutation so a failing update leaves the model untouched."""

    new_nodes: list[str] = field(default_factory=list)
    reset_nodes: list[str] = field(default_factory=list)  # stale -> direct transitions
    touched: set[str] = field(default_factory=set)
    contributions: list[list[str]] = field(default_factory=list)  # per sample


def plan_increment(
    tree: TaxonomyTree,
    centroids: dict[str, NodeCentroids],
    paths: list[str],
    config: ModelConfig,
    start_ordinal: int,
) -> UpdatePlan:
    """Decide which nodes an update touches and fail fast on the cases that
    cannot be updated in place.

    Raises ReclusterRequiredError when any affected existing node holds more
    than one centroid, and ValidationError when child sampling would need
    historical descendant vectors we no longer have (a stale node acquiring
    its first direct samples).
    """
    batch_terminal = Counter(paths)
    plan = UpdatePlan()

    involved = sorted({a for p in paths for a in ancestor_paths(p)})
    existing = {p: tree.get(p) for p in involved}
    plan.new_nodes = [p for p in involved if existing[p] is None]

    def final_is_stale(path: str) -> bool:
        # only meaningful for proper ancestors, which always end up with children
        node = existing[path]
        had_direct = node.direct_count > 0 if node is not None else False
        return not had_direct and batch_terminal.get(path, 0) == 0

    for path in sorted(batch_terminal):
        node = existing[path]
        if node is not None and node.direct_count == 0:
            # previously stale, now gaining direct samples: pool definition flips
            if config.child_sampling:
                raise ValidationError(
                    f"cannot update in place: node {path!r} switches from stale to "
                    "direct-sampled while child sampling is enabled; retrain instead"
                )
            plan.reset_nodes.append(path)

    for offset, path in enumerate(paths):
        chain = ancestor_paths(path)
        contributing = [path]
        for anc in chain[:-1]:
            if final_is_stale(anc):
                contributing.append(anc)
            elif config.child_sampling and _uniform_draw(
                config.seed, "child-sampling", anc, start_ordinal + offset
            ) < config.child_sample_proportion:
                contributing.append(anc)
        plan.contributions.append(contributing)
        plan.touched.update(contributing)

    multi = sorted(p for p in plan.touched if p in centroids and centroids[p].max_k > 1)
    if multi:
        raise ReclusterRequiredError(multi)
    return plan


def apply_increment(
    tree: TaxonomyTree,
    centroids: dict[str, NodeCentroids],
    batch: list[tuple[DualVector, str]],
    config: ModelConfig,
    lex_dim: int,
    sem_dim: int,
    start_ordinal: int,
) -> set[str]:
    """Fold new samples into the model, recomputing exactly the nodes whose
    pools change. Returns the canonical paths of recomputed nodes.

    The batch contributes to each sample's terminal node, to every stale
    ancestor (their pools span the whole subtree), and - when child sampling
    is on - to direct-sampled ancestors via a seeded per-sample draw at the
    configured proportion.
    """
    paths = [p for _, p in batch]
    plan = plan_increment(tree, centroids, paths, config, start_ordinal)

    for path in paths:
        tree.insert(path)
    for path in plan.new_nodes + plan.reset_nodes:
        centroids[path] = NodeCentroids.empty(lex_dim, sem_dim)

    for (vec, _), contributing in zip(batch, plan.contributions):
        for node_path in contributing:
            nc = centroids[node_path]
            nc.lexical.accumulate(vec.lexical)
            nc.semantic.accumulate(vec.semantic)

    for node_path in plan.touched:
        centroids[node_path].lexical.refresh()
        centroids[node_path].semantic.refresh()
    return set(plan.touched)
