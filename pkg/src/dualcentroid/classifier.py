"""Estimators: the dual-embedding centroid classifier and three baselines.

All estimators follow the scikit-learn protocol (``fit``/``predict``/
``get_params``) and take raw texts plus slash-separated category paths.
``DualCentroidClassifier.partial_fit`` folds new labeled samples into an
already-fitted model by recomputing only the centroids whose pools change;
representations stay frozen (new tokens are out-of-vocabulary).
"""

from __future__ import annotations

import logging
import time
from collections import Counter

import numpy as np
import scipy.sparse as sp
from sklearn.base import BaseEstimator, ClassifierMixin

from .centroids import (
    DualVector,
    ModelConfig,
    apply_increment,
    build_centroids,
    plan_increment,
)
from .embedders import HashingEmbedder, PrecomputedEmbedder, SemanticEmbedder
from .errors import ValidationError
from .scoring import CentroidScorer, Prediction, PredictionEntry
from .taxonomy import TaxonomyTree
from .validation import as_path_list, as_text_list, check_is_fitted
from .vectorize import SparseVector, TfidfVectorizer

logger = logging.getLogger(__name__)


def _build_embedder(config: ModelConfig) -> SemanticEmbedder:
    if config.embedder == "hash":
        return HashingEmbedder(dim=config.embedding_dim, seed=config.seed)
    if config.embedder == "precomputed":
        if not config.embedding_source:
            raise ValidationError("embedder='precomputed' requires embedding_source")
        return PrecomputedEmbedder.from_file(config.embedding_source)
    raise ValidationError(f"unknown embedder kind: {config.embedder!r}")


class DualCentroidClassifier(BaseEstimator, ClassifierMixin):
    """Hierarchical classifier with one lexical and one semantic centroid set
    per category, fused at inference by reciprocal rank fusion.

    Parameters mirror ModelConfig; see that class for semantics. After
    ``fit`` the estimator exposes:

    tree_        category taxonomy built from the training labels
    centroids_   canonical path -> per-view centroid sets
    tfidf_       frozen lexical vectorizer
    embedder_    frozen semantic embedder
    classes_     candidate category paths (lexicographic)
    timings_     {"embedding_s", "centroid_s"} wall-clock split of fit
    """

    def __init__(
        self,
        scoring: str = "leaf_only",
        rrf_k: float = 40.0,
        top_k: int = 3,
        multi_centroid: bool = False,
        cluster_min_samples: int = 50,
        max_clusters: int = 5,
        child_sampling: bool = False,
        child_sample_proportion: float = 0.5,
        depth_weights: tuple[float, ...] | None = None,
        max_features: int = 10_000,
        min_df: int | float = 2,
        max_df: int | float = 0.95,
        ngram_range: tuple[int, int] = (1, 2),
        embedding_dim: int = 512,
        embedder: str = "hash",
        embedding_source: str | None = None,
        seed: int = 0,
    ):
        self.scoring = scoring
        self.rrf_k = rrf_k
        self.top_k = top_k
        self.multi_centroid = multi_centroid
        self.cluster_min_samples = cluster_min_samples
        self.max_clusters = max_clusters
        self.child_sampling = child_sampling
        self.child_sample_proportion = child_sample_proportion
        self.depth_weights = depth_weights
        self.max_features = max_features
        self.min_df = min_df
        self.max_df = max_df
        self.ngram_range = ngram_range
        self.embedding_dim = embedding_dim
        self.embedder = embedder
        self.embedding_source = embedding_source
        self.seed = seed

    # -- config plumbing ----------------------------------------------------

    def _make_config(self) -> ModelConfig:
        return ModelConfig(**{k: getattr(self, k) for k in ModelConfig.__dataclass_fields__}).validate()

    def _encode(self, texts: list[str], keys: list[str] | None = None) -> list[DualVector]:
        if keys is not None and len(keys) != len(texts):
            raise ValidationError(
                f"got {len(keys)} semantic keys for {len(texts)} texts"
            )
        lex = self.tfidf_.transform(texts)
        lookup = keys if keys is not None else texts
        sem = [self.embedder_.embed(k) for k in lookup]
        return [DualVector(lexical=l, semantic=s) for l, s in zip(lex, sem)]

    def _refresh_classes(self) -> None:
        # scorer built eagerly so predict stays read-only under concurrency
        self.classes_ = np.asarray(self.tree_.predictable_paths(), dtype=object)
        self._scorer = CentroidScorer(self.tree_, self.centroids_)

    def _ensure_scorer(self) -> CentroidScorer:
        return self._scorer

    # -- training -----------------------------------------------------------

    def fit(self, X, y, semantic_keys=None) -> "DualCentroidClassifier":
        """Train on texts ``X`` and category paths ``y``.

        ``semantic_keys`` optionally supplies the lookup keys for a
        precomputed embedder (e.g. ticket ids); by default the raw text is
        the key.
        """
        config = self._make_config()
        texts = as_text_list(X)
        paths = as_path_list(y, len(texts))

        t0 = time.perf_counter()
        self.tfidf_ = TfidfVectorizer(
            max_features=config.max_features,
            min_df=config.min_df,
            max_df=config.max_df,
            ngram_range=config.ngram_range,
        ).fit(texts)
        self.embedder_ = _build_embedder(config)
        encoded = self._encode(texts, semantic_keys)
        t1 = time.perf_counter()

        config.embedding_dim = self.embedder_.dim
        self.config_ = config
        self.tree_ = TaxonomyTree.from_paths(paths)
        sem_matrix = np.stack([dv.semantic for dv in encoded])
        self.centroids_ = build_centroids(
            self.tree_, [dv.lexical for dv in encoded], sem_matrix, paths, config
        )
        t2 = time.perf_counter()

        degenerate = [
            p
            for p in self.tree_.predictable_paths()
            if self.centroids_[p].lexical.is_degenerate()
            and self.centroids_[p].semantic.is_degenerate()
        ]
        if degenerate:
            logger.warning(
                "%d categor(ies) have zero centroids in both views "
                "(all member texts were empty after encoding): %s",
                len(degenerate),
                degenerate[:5],
            )

        self.n_seen_ = len(texts)
        self.timings_ = {"embedding_s": t1 - t0, "centroid_s": t2 - t1}
        self._refresh_classes()
        return self

    def partial_fit(self, X, y, semantic_keys=None) -> "DualCentroidClassifier":
        """Incrementally add labeled samples to a fitted model.

        Only centroids whose pools change are recomputed; the vocabulary and
        embedder stay frozen. The recomputed node paths land in
        ``last_update_nodes_`` and the wall-clock split (embedding vs update)
        in ``last_update_timings_``. Raises ReclusterRequiredError if the
        update would touch a multi-centroid node.
        """
        check_is_fitted(self, "centroids_")
        texts = as_text_list(X)
        paths = as_path_list(y, len(texts))

        t0 = time.perf_counter()
        encoded = self._encode(texts, semantic_keys)
        t1 = time.perf_counter()
        recomputed = apply_increment(
            self.tree_,
            self.centroids_,
            list(zip(encoded, paths)),
            self.config_,
            lex_dim=self.tfidf_.dim,
            sem_dim=self.embedder_.dim,
            start_ordinal=self.n_seen_,
        )
        t2 = time.perf_counter()

        self.n_seen_ += len(texts)
        self.last_update_nodes_ = sorted(recomputed)
        self.last_update_timings_ = {"embedding_s": t1 - t0, "update_s": t2 - t1}
        self._refresh_classes()
        return self

    def check_update(self, y) -> None:
        """Validate that an update with labels ``y`` is possible without
        mutating anything (same failure modes as partial_fit)."""
        check_is_fitted(self, "centroids_")
        paths = as_path_list(y, len(y))
        plan_increment(self.tree_, self.centroids_, paths, self.config_, self.n_seen_)

    # -- inference ------------------------------------------------------------

    def predict_encoded(self, dual: DualVector, k: int | None = None) -> Prediction:
        """Predict from a pre-encoded dual vector (no embedding cost)."""
        check_is_fitted(self, "centroids_")
        return self._ensure_scorer().predict(dual, self.config_, k or self.config_.top_k)

    def predict_one(self, text: str, k: int | None = None, semantic_key: str | None = None) -> Prediction:
        check_is_fitted(self, "centroids_")
        [dual] = self._encode([text], [semantic_key] if semantic_key else None)
        return self.predict_encoded(dual, k)

    def predict_topk(self, X, k: int | None = None, semantic_keys=None) -> list[Prediction]:
        check_is_fitted(self, "centroids_")
        texts = as_text_list(X, allow_empty=True)
        duals = self._encode(texts, semantic_keys)
        return [self.predict_encoded(dv, k) for dv in duals]

    def predict(self, X) -> np.ndarray:
        """Top-1 category path per text."""
        return np.asarray([p.top_path for p in self.predict_topk(X, k=1)], dtype=object)

    # -- persistence ----------------------------------------------------------

    def save(self, path) -> None:
        from .persist import save_model

        save_model(self, path)

    @classmethod
    def load(cls, path) -> "DualCentroidClassifier":
        from .persist import load_model

        return load_model(path)


class KnnBaseline(BaseEstimator, ClassifierMixin):
    """Exact nearest-neighbor baseline over the concatenated dual features.

    Unlike the centroid model this baseline concatenates the lexical and
    semantic vectors, scans all training samples by cosine (brute force),
    and ranks categories by neighbor vote with nearer-neighbor tie-breaks.
    """

    def __init__(
        self,
        n_neighbors: int = 3,
        max_features: int = 10_000,
        min_df: int | float = 2,
        max_df: int | float = 0.95,
        ngram_range: tuple[int, int] = (1, 2),
        embedding_dim: int = 512,
        embedder: str = "hash",
        embedding_source: str | None = None,
        seed: int = 0,
    ):
        self.n_neighbors = n_neighbors
        self.max_features = max_features
        self.min_df = min_df
        self.max_df = max_df
        self.ngram_range = ngram_range
        self.embedding_dim = embedding_dim
        self.embedder = embedder
        self.embedding_source = embedding_source
        self.seed = seed

    def fit(self, X, y, semantic_keys=None) -> "KnnBaseline":
        texts = as_text_list(X)
        paths = as_path_list(y, len(texts))
        self.tfidf_ = TfidfVectorizer(
            max_features=self.max_features,
            min_df=self.min_df,
            max_df=self.max_df,
            ngram_range=self.ngram_range,
        ).fit(texts)
        config = ModelConfig(
            embedding_dim=self.embedding_dim,
            embedder=self.embedder,
            embedding_source=self.embedding_source,
            seed=self.seed,
        )
        self.embedder_ = _build_embedder(config)

        lex = self.tfidf_.transform(texts)
        keys = semantic_keys if semantic_keys is not None else texts
        sem = np.stack([self.embedder_.embed(k) for k in keys])
        self._lex_csr = sp.csr_matrix(
            (
                np.concatenate([v.values for v in lex]),
                np.concatenate([v.indices for v in lex]),
                np.cumsum([0] + [v.nnz for v in lex]),
            ),
            shape=(len(lex), self.tfidf_.dim),
        )
        self._sem = sem
        # concatenated-vector norm: sqrt(|lex|^2 + |sem|^2)
        lex_sq = np.asarray([v.norm() ** 2 for v in lex])
        self._norms = np.sqrt(lex_sq + np.einsum("ij,ij->i", sem, sem))
        self.paths_ = paths
        self.classes_ = np.asarray(sorted(set(paths)), dtype=object)
        return self

    def _query_similarities(self, lex: SparseVector, sem: np.ndarray) -> np.ndarray:
        dots = self._sem @ sem
        if lex.nnz:
            dense = np.zeros(self.tfidf_.dim)
            dense[lex.indices] = lex.values
            dots = dots + self._lex_csr @ dense
        qnorm = np.sqrt(lex.norm() ** 2 + float(sem @ sem))
        if qnorm == 0.0:
            return np.zeros(len(self.paths_))
        safe = np.where(self._norms > 0.0, self._norms, 1.0)
        sims = dots / (qnorm * safe)
        sims[self._norms == 0.0] = 0.0
        return sims

    def predict_topk(self, X, k: int = 3, semantic_keys=None) -> list[Prediction]:
        check_is_fitted(self, "paths_")
        texts = as_text_list(X, allow_empty=True)
        lex = self.tfidf_.transform(texts)
        keys = semantic_keys if semantic_keys is not None else texts
        out = []
        for i, text_lex in enumerate(lex):
            sem = self.embedder_.embed(keys[i])
            sims = self._query_similarities(text_lex, sem)
            n = min(self.n_neighbors, len(self.paths_))
            # sort by similarity descending, training index ascending on ties
            order = np.lexsort((np.arange(len(sims)), -sims))[:n]
            votes: Counter = Counter()
            best: dict[str, float] = {}
            for j in order:
                p = self.paths_[int(j)]
                votes[p] += 1
                best[p] = max(best.get(p, -np.inf), float(sims[int(j)]))
            ranked = sorted(votes, key=lambda p: (-votes[p], -best[p], p))
            entries = [
                PredictionEntry(path=p, fused_score=float(votes[p])) for p in ranked[:k]
            ]
            out.append(Prediction(entries=entries, k=k))
        return out

    def predict(self, X) -> np.ndarray:
        return np.asarray([p.top_path for p in self.predict_topk(X, k=1)], dtype=object)


class MajorityBaseline(BaseEstimator, ClassifierMixin):
    """Always predicts the most frequent training categories."""

    def fit(self, X, y) -> "MajorityBaseline":
        paths = as_path_list(y, len(y))
        self.counts_ = Counter(paths)
        self.classes_ = np.asarray(sorted(self.counts_), dtype=object)
        total = sum(self.counts_.values())
        self._ranked = sorted(self.counts_, key=lambda p: (-self.counts_[p], p))
        self._freq = {p: self.counts_[p] / total for p in self.counts_}
        return self

    def predict_topk(self, X, k: int = 3) -> list[Prediction]:
        check_is_fitted(self, "counts_")
        entries = [
            PredictionEntry(path=p, fused_score=self._freq[p]) for p in self._ranked[:k]
        ]
        pred = Prediction(entries=entries, k=k)
        return [pred for _ in range(len(X))]

    def predict(self, X) -> np.ndarray:
        return np.asarray([self._ranked[0]] * len(X), dtype=object)


class RandomBaseline(BaseEstimator, ClassifierMixin):
    """Seeded uniform draws over the training categories; per-query draws are
    keyed by query position, so outputs are reproducible and order-stable."""

    def __init__(self, seed: int = 0):
        self.seed = seed

    def fit(self, X, y) -> "RandomBaseline":
        self.classes_ = np.asarray(sorted(set(as_path_list(y, len(y)))), dtype=object)
        return self

    def predict_topk(self, X, k: int = 3) -> list[Prediction]:
        check_is_fitted(self, "classes_")
        out = []
        for i in range(len(X)):
            rng = np.random.default_rng([self.seed, i])
            take = min(k, len(self.classes_))
            picks = rng.permutation(len(self.classes_))[:take]
            entries = [
                PredictionEntry(path=str(self.classes_[int(j)]), fused_score=1.0 / (r + 1))
                for r, j in enumerate(picks)
            ]
            out.append(Prediction(entries=entries, k=k))
        return out

    def predict(self, X) -> np.ndarray:
        return np.asarray([p.top_path for p in self.predict_topk(X, k=1)], dtype=object)
