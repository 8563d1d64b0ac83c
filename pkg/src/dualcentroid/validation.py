"""Input validation helpers shared by the estimators."""

from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_is_fitted

from .errors import ValidationError
from .taxonomy import canonical_path

__all__ = ["as_text_list", "as_path_list", "check_is_fitted"]


def as_text_list(X, allow_empty: bool = False) -> list[str]:
    """Coerce X (list / tuple / ndarray / pandas Series of strings) to a
    plain list of str."""
    if isinstance(X, str):
        raise ValidationError("expected a sequence of texts, got a single string")
    if isinstance(X, np.ndarray):
        if X.ndim != 1:
            raise ValidationError(f"expected a 1-d array of texts, got shape {X.shape}")
        X = X.tolist()
    elif hasattr(X, "tolist") and not isinstance(X, (list, tuple)):
        X = X.tolist()
    texts = list(X)
    if not texts and not allow_empty:
        raise ValidationError("expected at least one text")
    for i, t in enumerate(texts):
        if not isinstance(t, str):
            raise ValidationError(f"texts[{i}] is not a string ({type(t).__name__})")
    return texts


def as_path_list(y, n_expected: int) -> list[str]:
    """Coerce y to a list of canonical category path strings of length
    ``n_expected``."""
    if isinstance(y, np.ndarray):
        y = y.tolist()
    elif hasattr(y, "tolist") and not isinstance(y, (list, tuple)):
        y = y.tolist()
    paths = [canonical_path(p) for p in y]
    if len(paths) != n_expected:
        raise ValidationError(f"got {len(paths)} labels for {n_expected} texts")
    return paths
