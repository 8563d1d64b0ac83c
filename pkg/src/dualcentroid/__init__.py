"""Dual-embedding centroid classification over hierarchical taxonomies.

Quick start::

    from dualcentroid import DualCentroidClassifier

    clf = DualCentroidClassifier().fit(texts, paths)
    clf.predict_topk(["vpn connection drops"], k=3)
    clf.partial_fit(new_texts, new_paths)   # incremental update
    clf.save("model.htax")
"""

__version__ = "0.1.0"

from .centroids import DualVector, ModelConfig
from .classifier import (
    DualCentroidClassifier,
    KnnBaseline,
    MajorityBaseline,
    RandomBaseline,
)
from .embedders import HashingEmbedder, PrecomputedEmbedder
from .errors import (
    ChecksumError,
    DataError,
    DualCentroidError,
    EmbeddingNotFoundError,
    ModelFormatError,
    ReclusterRequiredError,
    TruncatedModelError,
    UnsupportedVersionError,
    ValidationError,
)
from .evaluation import (
    EvalInstance,
    EvalReport,
    aggregate_runs,
    evaluate_predictions,
    exact_match,
    hierarchical_f1,
    hierarchical_top_k,
    top_k_accuracy,
)
from .persist import load_model, save_model
from .scoring import Prediction, PredictionEntry, rrf_fuse
from .synth import SynthSpec, generate_synthetic
from .taxonomy import TaxonomyTree, ancestor_set
from .vectorize import SparseVector, TfidfVectorizer, cosine

__all__ = [
    "ChecksumError",
    "DataError",
    "DualCentroidClassifier",
    "DualCentroidError",
    "DualVector",
    "EmbeddingNotFoundError",
    "EvalInstance",
    "EvalReport",
    "HashingEmbedder",
    "KnnBaseline",
    "MajorityBaseline",
    "ModelConfig",
    "ModelFormatError",
    "PrecomputedEmbedder",
    "Prediction",
    "PredictionEntry",
    "RandomBaseline",
    "ReclusterRequiredError",
    "SparseVector",
    "SynthSpec",
    "TaxonomyTree",
    "TfidfVectorizer",
    "TruncatedModelError",
    "UnsupportedVersionError",
    "ValidationError",
    "aggregate_runs",
    "ancestor_set",
    "cosine",
    "evaluate_predictions",
    "exact_match",
    "generate_synthetic",
    "hierarchical_f1",
    "hierarchical_top_k",
    "load_model",
    "rrf_fuse",
    "save_model",
    "top_k_accuracy",
]
