"""Lexical document view: a self-contained TF-IDF vectorizer over 1-2 grams.

The formula set is fixed so that vectors can be cross-checked offline:
idf(t) = ln((1+N)/(1+df(t))) + 1, raw term counts, L2 normalization. When
the candidate vocabulary exceeds ``max_features`` we keep the terms with the
highest corpus-wide TF-IDF mass (total count x idf), ties broken
lexicographically. The vocabulary is frozen after fitting; unseen terms are
simply out-of-vocabulary from then on.
"""

from __future__ import annotations

import math
from collections import Counter
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from .errors import ValidationError
from .text import ngram_counts


@dataclass
class SparseVector:
    """L2-normalized sparse vector: sorted, strictly increasing indices with
    nonzero weights. An empty entry list is the zero vector (legal)."""

    dim: int
    indices: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int32))
    values: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.float64))

    @property
    def nnz(self) -> int:
        return int(self.indices.size)

    def norm(self) -> float:
        return float(np.sqrt(np.dot(self.values, self.values)))

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.dim, dtype=np.float64)
        out[self.indices] = self.values
        return out

    def dot_dense(self, dense: np.ndarray) -> float:
        """Dot product against a dense vector of the same dimension."""
        if dense.shape[-1] != self.dim:
            raise ValidationError(
                f"dimension mismatch: sparse dim {self.dim} vs dense {dense.shape[-1]}"
            )
        if self.nnz == 0:
            return 0.0
        return float(np.dot(dense[self.indices], self.values))


def cosine(a, b) -> float:
    """Cosine similarity between two vectors of the same view.

    Accepts a pair of dense arrays or a pair of SparseVectors. By
    convention the similarity of a zero vector with anything is 0.0 (an
    all-OOV query must still rank, just without lexical evidence).
    """
    if isinstance(a, SparseVector) != isinstance(b, SparseVector):
        raise ValidationError("cosine requires both vectors from the same view")
    if isinstance(a, SparseVector):
        if a.dim != b.dim:
            raise ValidationError(f"dimension mismatch: {a.dim} vs {b.dim}")
        na, nb = a.norm(), b.norm()
        if na == 0.0 or nb == 0.0:
            return 0.0
        # merge-free sparse dot via searchsorted on the shorter index list
        if a.nnz > b.nnz:
            a, b = b, a
        pos = np.searchsorted(b.indices, a.indices)
        pos = np.clip(pos, 0, b.indices.size - 1)
        hit = b.indices[pos] == a.indices
        dot = float(np.dot(a.values[hit], b.values[pos[hit]]))
        return dot / (na * nb)
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValidationError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b)) / (na * nb)


class TfidfVectorizer(BaseEstimator):
    """Fit a fixed vocabulary with smoothed idf weights; transform documents
    into unit-norm SparseVectors.

    Parameters
    ----------
    max_features : keep at most this many terms (highest TF-IDF mass wins).
    min_df : minimum document frequency; int = absolute count, float < 1.0 =
        proportion of the corpus.
    max_df : maximum document frequency, same int/float semantics; a float
        threshold keeps terms with df <= floor(max_df * N).
    ngram_range : inclusive (lo, hi) n-gram orders.
    """

    def __init__(
        self,
        max_features: int = 10_000,
        min_df: int | float = 2,
        max_df: int | float = 0.95,
        ngram_range: tuple[int, int] = (1, 2),
    ):
        self.max_features = max_features
        self.min_df = min_df
        self.max_df = max_df
        self.ngram_range = ngram_range

    # -- fitting ----------------------------------------------------------

    def fit(self, corpus: Sequence[str]) -> "TfidfVectorizer":
        if len(corpus) == 0:
            raise ValidationError("cannot fit tf-idf on an empty corpus")
        if self.max_features < 1:
            raise ValidationError(f"max_features must be >= 1, got {self.max_features}")
        lo, hi = self.ngram_range
        if lo < 1 or hi < lo:
            raise ValidationError(f"invalid ngram_range: {self.ngram_range}")

        n_docs = len(corpus)
        df: Counter = Counter()
        total_tf: Counter = Counter()
        for doc in corpus:
            counts = ngram_counts(doc, self.ngram_range)
            df.update(counts.keys())
            total_tf.update(counts)

        min_count = self._resolve_df_bound(self.min_df, n_docs, low=True)
        max_count = self._resolve_df_bound(self.max_df, n_docs, low=False)
        survivors = [t for t, c in df.items() if min_count <= c <= max_count]
        if not survivors:
            raise ValidationError(
                "empty vocabulary: no term survives the document-frequency thresholds"
            )

        if len(survivors) > self.max_features:
            idf = {t: self._idf(df[t], n_docs) for t in survivors}
            survivors.sort(key=lambda t: (-(total_tf[t] * idf[t]), t))
            survivors = survivors[: self.max_features]

        vocab = sorted(survivors)
        self.vocabulary_: dict[str, int] = {t: i for i, t in enumerate(vocab)}
        self.idf_ = np.array([self._idf(df[t], n_docs) for t in vocab], dtype=np.float64)
        self.n_docs_ = n_docs
        return self

    @staticmethod
    def _idf(doc_freq: int, n_docs: int) -> float:
        return math.log((1.0 + n_docs) / (1.0 + doc_freq)) + 1.0

    @staticmethod
    def _resolve_df_bound(bound: int | float, n_docs: int, low: bool) -> int:
        if isinstance(bound, float):
            if not 0.0 < bound <= 1.0:
                raise ValidationError(f"fractional df bound must lie in (0, 1], got {bound}")
            if bound == 1.0:
                return 1 if low else n_docs
            scaled = bound * n_docs
            return max(1, math.ceil(scaled)) if low else math.floor(scaled)
        value = int(bound)
        if value < 1:
            raise ValidationError(f"df bound must be >= 1, got {bound}")
        return value

    # -- transforming -----------------------------------------------------

    @property
    def dim(self) -> int:
        return len(self.vocabulary_)

    def transform_one(self, text: str) -> SparseVector:
        """count(t) * idf(t) over in-vocabulary terms, L2-normalized.
        All-OOV text yields the zero vector."""
        vocab = self.vocabulary_
        counts = ngram_counts(text, self.ngram_range)
        idx_weight = [
            (vocab[t], c * self.idf_[vocab[t]]) for t, c in counts.items() if t in vocab
        ]
        if not idx_weight:
            return SparseVector(dim=self.dim)
        idx_weight.sort()
        indices = np.array([i for i, _ in idx_weight], dtype=np.int32)
        values = np.array([w for _, w in idx_weight], dtype=np.float64)
        norm = np.sqrt(np.dot(values, values))
        if norm > 0.0:
            values = values / norm
        return SparseVector(dim=self.dim, indices=indices, values=values)

    def transform(self, corpus: Sequence[str]) -> list[SparseVector]:
        return [self.transform_one(doc) for doc in corpus]

    def fit_transform(self, corpus: Sequence[str]) -> list[SparseVector]:
        return self.fit(corpus).transform(corpus)

    # -- persistence hooks --------------------------------------------------

    def to_state(self) -> dict:
        terms = [""] * len(self.vocabulary_)
        for t, i in self.vocabulary_.items():
            terms[i] = t
        return {
            "params": {
                "max_features": self.max_features,
                "min_df": self.min_df,
                "max_df": self.max_df,
                "ngram_range": list(self.ngram_range),
            },
            "terms": terms,
            "idf": self.idf_,
            "n_docs": self.n_docs_,
        }

    @classmethod
    def from_state(cls, state: dict) -> "TfidfVectorizer":
        params = state["params"]
        vec = cls(
            max_features=params["max_features"],
            min_df=params["min_df"],
            max_df=params["max_df"],
            ngram_range=tuple(params["ngram_range"]),
        )
        vec.vocabulary_ = {t: i for i, t in enumerate(state["terms"])}
        vec.idf_ = np.asarray(state["idf"], dtype=np.float64)
        vec.n_docs_ = int(state["n_docs"])
        return vec
